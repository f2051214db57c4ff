//! Small dense semidefinite programs over Hermitian matrices.
//!
//! Problems are posed over a block-diagonal Hermitian variable
//! `X = diag(X_1, .., X_p) >= 0` as
//!
//! ```text
//! minimize  sum_b tr(C_b X_b)
//! subject   sum_b tr(A_jb X_b)  (<= | =)  b_j
//! ```
//!
//! and solved on the real symmetric embedding by a primal-dual
//! interior-point method (see [`ipm`]).

pub mod fidelity;
pub mod ipm;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{NumericPolicy, SolverOptions};
use crate::qstate::{eigensystem_unchecked, ComplexMatrix, C64, ZERO};

pub use fidelity::{sqrt_fidelity_sdp, FidelityForm, FidelitySdp, SigmaSpec};
pub use ipm::IterationLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    LessEq,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianEntry {
    pub row: usize,
    pub col: usize,
    #[serde(with = "crate::formats::cnum")]
    pub value: C64,
}

/// Hermitian matrix stored as its non-zero entries (both triangles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseHermitian {
    pub dim: usize,
    pub entries: Vec<HermitianEntry>,
}

impl SparseHermitian {
    pub fn zeros(dim: usize) -> Self {
        SparseHermitian {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let mut out = SparseHermitian::zeros(m.nrows());
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                out.push(r, c, m[(r, c)]);
            }
        }
        out
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = SparseHermitian::zeros(dim);
        for p in 0..dim {
            out.push(p, p, C64::new(1.0, 0.0));
        }
        out
    }

    /// Adds `value` at `(row, col)`; zeros are skipped.
    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        if value != ZERO {
            self.entries.push(HermitianEntry { row, col, value });
        }
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for e in &self.entries {
            m[(e.row, e.col)] += e.value;
        }
        m
    }

    /// `Re tr(A X)`.
    pub fn inner(&self, x: &ComplexMatrix) -> f64 {
        self.entries
            .iter()
            .map(|e| (e.value * x[(e.col, e.row)]).re)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.to_dense().norm()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        crate::qstate::hermitian_deviation(&self.to_dense())
    }
}

/// A coefficient matrix acting on one variable block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub block: usize,
    pub matrix: SparseHermitian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<Term>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    /// Minimized; blocks without a term contribute zero.
    pub objective: Vec<Term>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(block_dims: Vec<usize>) -> Self {
        SdpProblem {
            block_dims,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Single `n x n` variable.
    pub fn single(n: usize) -> Self {
        SdpProblem::new(vec![n])
    }

    pub fn add_block(&mut self, dim: usize) -> usize {
        self.block_dims.push(dim);
        self.block_dims.len() - 1
    }

    pub fn set_objective(&mut self, block: usize, c: &ComplexMatrix) {
        self.objective.retain(|t| t.block != block);
        self.objective.push(Term {
            block,
            matrix: SparseHermitian::from_dense(c),
        });
    }

    pub fn add_constraint(&mut self, terms: Vec<Term>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
        });
    }

    /// Convenience for a constraint on a single block.
    pub fn constrain(&mut self, block: usize, a: SparseHermitian, relation: Relation, rhs: f64) {
        self.add_constraint(vec![Term { block, matrix: a }], relation, rhs);
    }

    pub fn variable_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// Checks shapes, finiteness and Hermiticity (within 1e-9 relative).
    pub fn validate(&self, policy: &NumericPolicy) -> Result<()> {
        if self.block_dims.is_empty() || self.block_dims.contains(&0) {
            return Err(Error::invalid("SDP blocks must be non-empty"));
        }
        // The joint fidelity block is twice the state dimension.
        let cap = 2 * policy.max_dim;
        if let Some(&n) = self.block_dims.iter().find(|&&n| n > cap) {
            return Err(Error::DimensionCap { dim: n, cap });
        }
        let check = |t: &Term| -> Result<()> {
            let Some(&n) = self.block_dims.get(t.block) else {
                return Err(Error::invalid(format!("term refers to missing block {}", t.block)));
            };
            if t.matrix.dim != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: t.matrix.dim,
                });
            }
            if t.matrix.entries.iter().any(|e| e.row >= n || e.col >= n) {
                return Err(Error::invalid("entry index out of range"));
            }
            if t.matrix.entries.iter().any(|e| !e.value.re.is_finite() || !e.value.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            let dense = t.matrix.to_dense();
            let dev = crate::qstate::hermitian_deviation(&dense);
            if dev > policy.hermitian_tol * crate::qstate::max_abs(&dense).max(1.0) {
                return Err(Error::NotHermitian { deviation: dev });
            }
            Ok(())
        };
        for t in &self.objective {
            check(t)?;
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(Error::NonFinite);
            }
            for t in &c.terms {
                check(t)?;
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[ComplexMatrix]) -> f64 {
        self.objective.iter().map(|t| t.matrix.inner(&x[t.block])).sum()
    }

    pub fn constraint_value(&self, j: usize, x: &[ComplexMatrix]) -> f64 {
        self.constraints[j]
            .terms
            .iter()
            .map(|t| t.matrix.inner(&x[t.block]))
            .sum()
    }

    /// Violation of constraint `j` relative to `max(1, ||A_j||_F)`.
    pub fn constraint_violation(&self, j: usize, x: &[ComplexMatrix]) -> f64 {
        let c = &self.constraints[j];
        let r = self.constraint_value(j, x) - c.rhs;
        let raw = match c.relation {
            Relation::Eq => r.abs(),
            Relation::LessEq => r.max(0.0),
        };
        let norm = c
            .terms
            .iter()
            .map(|t| t.matrix.frobenius_norm().powi(2))
            .sum::<f64>()
            .sqrt();
        raw / norm.max(1.0)
    }

    /// Debug dump: `{"format": "qrv/1", "kind": "sdp", ...}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            format: &'a str,
            kind: &'a str,
            #[serde(flatten)]
            problem: &'a SdpProblem,
        }
        serde_json::to_string_pretty(&Dump {
            format: crate::formats::FORMAT,
            kind: "sdp",
            problem: self,
        })
        .expect("SDP problems always serialize")
    }
}

/// Real symmetric image of an [`SdpProblem`]: every Hermitian `n x n` `H`
/// becomes the `2n x 2n` matrix `[[Re H, -Im H], [Im H, Re H]]`, so every
/// objective and constraint value doubles and right-hand sides are doubled
/// to match.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSdp {
    pub block_dims: Vec<usize>,
    pub objective: Vec<DMatrix<f64>>,
    pub constraints: Vec<(ipm::SparseSym, Relation, f64)>,
}

/// `[[Re H, -Im H], [Im H, Re H]]`.
pub fn embed_matrix(h: &ComplexMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for c in 0..n {
        for r in 0..n {
            let v = h[(r, c)];
            out[(r, c)] = v.re;
            out[(r + n, c + n)] = v.re;
            out[(r + n, c)] = v.im;
            out[(r, c + n)] = -v.im;
        }
    }
    out
}

/// Inverse of [`embed_matrix`] on the structured subspace; averages the two
/// copies so the result is the nearest structured matrix.
pub fn project_embedded(x: &DMatrix<f64>) -> ComplexMatrix {
    let n = x.nrows() / 2;
    ComplexMatrix::from_fn(n, n, |r, c| {
        let re = 0.5 * (x[(r, c)] + x[(r + n, c + n)]);
        let im = 0.5 * (x[(r + n, c)] - x[(r, c + n)]);
        C64::new(re, im)
    })
}

fn embed_sparse(out: &mut ipm::SparseSym, block: usize, h: &SparseHermitian) {
    let n = h.dim;
    for e in &h.entries {
        let (r, c, v) = (e.row, e.col, e.value);
        out.push(block, r, c, v.re);
        out.push(block, r + n, c + n, v.re);
        out.push(block, r + n, c, v.im);
        out.push(block, r, c + n, -v.im);
    }
}

pub fn embed_hermitian(p: &SdpProblem) -> RealSdp {
    let block_dims: Vec<usize> = p.block_dims.iter().map(|n| 2 * n).collect();
    let mut objective: Vec<DMatrix<f64>> = block_dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for t in &p.objective {
        objective[t.block] += embed_matrix(&t.matrix.to_dense());
    }
    let constraints = p
        .constraints
        .iter()
        .map(|c| {
            let mut s = ipm::SparseSym::default();
            for t in &c.terms {
                embed_sparse(&mut s, t.block, &t.matrix);
            }
            (s, c.relation, 2.0 * c.rhs)
        })
        .collect();
    RealSdp {
        block_dims,
        objective,
        constraints,
    }
}

impl RealSdp {
    /// Equality form: one `1 x 1` slack block per inequality, appended after
    /// the matrix blocks in constraint order.
    pub fn to_standard(&self) -> ipm::StandardForm {
        let mut dims = self.block_dims.clone();
        let mut objective = self.objective.clone();
        let mut constraints = Vec::with_capacity(self.constraints.len());
        let mut rhs = Vec::with_capacity(self.constraints.len());
        for (a, rel, b) in &self.constraints {
            let mut a = a.clone();
            if *rel == Relation::LessEq {
                dims.push(1);
                objective.push(DMatrix::zeros(1, 1));
                a.push(dims.len() - 1, 0, 0, 1.0);
            }
            constraints.push(a);
            rhs.push(*b);
        }
        ipm::StandardForm {
            block_dims: dims,
            objective,
            constraints,
            rhs: nalgebra::DVector::from_vec(rhs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Primal blocks in problem order.
    pub blocks: Vec<ComplexMatrix>,
    /// Multipliers, one per constraint (`<= 0` for inequalities).
    pub dual: Vec<f64>,
    pub objective_value: f64,
    pub dual_objective: f64,
    /// `|p - d| / (1 + |p| + |d|)`.
    pub duality_gap: f64,
    /// Largest [`SdpProblem::constraint_violation`].
    pub max_constraint_violation: f64,
    /// `tr(X Z)` summed over blocks.
    pub complementarity: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
    /// Phase-one optimum when a feasibility check was run.
    pub phase_one_value: Option<f64>,
    pub message: Option<String>,
    pub history: Vec<IterationLog>,
}

impl SdpSolution {
    pub fn x(&self) -> &ComplexMatrix {
        &self.blocks[0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

pub fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    solve_with(p, opts, &NumericPolicy::default())
}

pub fn solve_with(p: &SdpProblem, opts: &SolverOptions, policy: &NumericPolicy) -> Result<SdpSolution> {
    p.validate(policy)?;
    let real = embed_hermitian(p);
    let standard = real.to_standard();
    let raw = ipm::solve_standard(&standard, opts);

    let nblocks = p.block_dims.len();
    let blocks: Vec<ComplexMatrix> = raw.x[..nblocks].iter().map(project_embedded).collect();
    let slack: Vec<ComplexMatrix> = raw.z[..nblocks].iter().map(project_embedded).collect();
    let objective_value = p.objective_at(&blocks);
    let dual_objective = p
        .constraints
        .iter()
        .zip(raw.y.iter())
        .map(|(c, y)| c.rhs * y)
        .sum::<f64>();
    let max_constraint_violation = (0..p.constraints.len())
        .map(|j| p.constraint_violation(j, &blocks))
        .fold(0.0, f64::max);
    let complementarity = blocks
        .iter()
        .zip(&slack)
        .map(|(x, z)| crate::qstate::trace_product(x, z).re)
        .sum::<f64>();
    let min_eigenvalue = blocks
        .iter()
        .map(|b| eigensystem_unchecked(b).min_eigenvalue())
        .fold(f64::INFINITY, f64::min);

    use ipm::Termination as T;
    let mut phase_one_value = None;
    let mut message = None;
    let status = match raw.termination {
        T::Optimal => SdpStatus::Optimal,
        T::PrimalInfeasible => SdpStatus::Infeasible,
        other => {
            let p1 = ipm::phase_one(&standard, opts);
            if p1.termination == T::Optimal {
                phase_one_value = Some(p1.primal_objective);
            }
            match (phase_one_value, other) {
                (Some(v), _) if v > opts.feas_tol => SdpStatus::Infeasible,
                (_, T::DualInfeasible) => {
                    message = Some("objective unbounded below".into());
                    SdpStatus::NumericalFailure
                }
                (_, T::MaxIterations) => SdpStatus::MaxIterations,
                (_, t) => {
                    message = Some(format!("{t:?}"));
                    SdpStatus::NumericalFailure
                }
            }
        }
    };
    let duality_gap = (objective_value - dual_objective).abs()
        / (1.0 + objective_value.abs() + dual_objective.abs());
    Ok(SdpSolution {
        status,
        blocks,
        dual: raw.y.iter().copied().collect(),
        objective_value,
        dual_objective,
        duality_gap,
        max_constraint_violation,
        complementarity,
        min_eigenvalue,
        iterations: raw.iterations,
        phase_one_value,
        message,
        history: raw.history.iter().map(|h| IterationLog {
            primal_objective: 0.5 * h.primal_objective,
            dual_objective: 0.5 * h.dual_objective,
            ..*h
        }).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{ONE, I};

    fn diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_fn(v.len(), v.len(), |r, c| if r == c { C64::new(v[r], 0.0) } else { ZERO })
    }

    #[test]
    fn trace_lower_bound() {
        let mut p = SdpProblem::single(2);
        p.set_objective(0, &diag(&[1.0, 1.0]));
        let mut neg = SparseHermitian::identity(2);
        neg.entries.iter_mut().for_each(|e| e.value = -e.value);
        p.constrain(0, neg, Relation::LessEq, -1.0);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mass_on_smallest_eigenvalue() {
        let mut p = SdpProblem::single(2);
        p.set_objective(0, &diag(&[1.0, 2.0]));
        p.constrain(0, SparseHermitian::identity(2), Relation::Eq, 1.0);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-6);
        assert!((s.x() - diag(&[1.0, 0.0])).norm() < 1e-5);
        assert!(s.duality_gap <= 1e-7 && s.max_constraint_violation <= 1e-7);
    }

    #[test]
    fn infeasible_trace_bound() {
        let mut p = SdpProblem::single(2);
        p.constrain(0, SparseHermitian::identity(2), Relation::Eq, 1.0);
        p.constrain(0, SparseHermitian::from_dense(&diag(&[1.0, -1.0])), Relation::LessEq, -2.0);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible);
    }

    #[test]
    fn embedding_layout() {
        let h = ComplexMatrix::from_row_slice(2, 2, &[ZERO, I, -I, ZERO]);
        let e = embed_matrix(&h);
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 0.0, -1.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            -1.0, 0.0, 0.0, 0.0,
        ]);
        assert_eq!(e, expected);
        assert_eq!(e, e.transpose());
    }

    #[test]
    fn real_problem_embeds_as_two_copies() {
        let h = ComplexMatrix::from_row_slice(2, 2, &[ONE, ONE * 2.0, ONE * 2.0, ONE * 3.0]);
        let e = embed_matrix(&h);
        let re = h.map(|v| v.re);
        assert_eq!(e.view((0, 0), (2, 2)), re);
        assert_eq!(e.view((2, 2), (2, 2)), re);
        assert!(e.view((0, 2), (2, 2)).iter().all(|&v| v == 0.0));
        assert_eq!(project_embedded(&e), h);
    }
}
