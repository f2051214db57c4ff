//! Fidelity as a semidefinite program.
//!
//! For states `rho`, `sigma`,
//! `sqrt F(rho, sigma) = max Re tr(X)  s.t.  [[rho, X], [X^H, sigma]] >= 0`.
//! Substituting `X = sqrt(rho) Y` gives the equivalent
//! `max Re tr(sqrt(rho) Y)  s.t.  [[I, Y], [Y^H, sigma]] >= 0`, whose upper-left
//! block is the identity; it keeps a strictly feasible point even when `rho`
//! is rank deficient, which the interior-point method needs.
//! Pinned blocks are further restricted to the support of the state they
//! hold, since `[[A, X], [X^H, B]] >= 0` forces `X` into `supp A x supp B`.

use crate::error::{Error, Result};
use crate::policy::SolverOptions;
use crate::qstate::{hermitian_eigensystem, ComplexMatrix, DensityMatrix, C64};

use super::{solve, Relation, SdpProblem, SdpSolution, SparseHermitian, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelityForm {
    /// `[[rho, X], [X^H, sigma]]`, objective `Re tr X`.
    Watrous,
    /// `[[I, Y], [Y^H, sigma]]`, objective `Re tr(sqrt(rho) Y)`.
    Scaled,
}

/// Affine description of the `sigma` block.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaSpec {
    /// `sigma` pinned entrywise.
    Fixed(ComplexMatrix),
    /// `sigma >= 0`, `tr sigma = 1`, plus `tr(A sigma) (<= | =) b` for each
    /// listed `(A, relation, b)`.
    Free(Vec<(ComplexMatrix, Relation, f64)>),
}

/// A fidelity program over one joint block `[[T, X], [X^H, S]]`.
///
/// Pinned blocks are restricted to the support of the state they hold, so a
/// rank-deficient `rho` (Watrous form) or a fixed rank-deficient `sigma`
/// still leaves a strictly feasible point.
#[derive(Debug, Clone)]
pub struct FidelitySdp {
    pub problem: SdpProblem,
    pub dim: usize,
    pub form: FidelityForm,
    /// Size of the upper-left block `T`.
    top: usize,
    /// Orthonormal basis of `supp(sigma)` for a reduced fixed `sigma`.
    sigma_basis: Option<ComplexMatrix>,
}

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// when reducing a pinned block to its support.
const SUPPORT_TOL: f64 = 1e-12;

/// Columns of `m`'s eigenvectors with eigenvalue above the support threshold.
fn support_basis(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigensystem(m)?;
    let cutoff = SUPPORT_TOL * eig.max_eigenvalue().max(1.0);
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > cutoff).collect();
    if keep.is_empty() {
        return Err(Error::invalid("pinned block has empty support"));
    }
    Ok(ComplexMatrix::from_fn(m.nrows(), keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]))
}

/// Pins the diagonal sub-block at `offset` of an `n x n` block to `m`.
fn pin_block(p: &mut SdpProblem, n: usize, offset: usize, m: &ComplexMatrix) {
    let d = m.nrows();
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    for a in 0..d {
        let mut e = SparseHermitian::zeros(n);
        e.push(offset + a, offset + a, one);
        p.constrain(0, e, Relation::Eq, m[(a, a)].re);
        for b in (a + 1)..d {
            let (r, c) = (offset + a, offset + b);
            let mut re = SparseHermitian::zeros(n);
            re.push(r, c, one);
            re.push(c, r, one);
            p.constrain(0, re, Relation::Eq, 2.0 * m[(a, b)].re);
            let mut im = SparseHermitian::zeros(n);
            im.push(r, c, i);
            im.push(c, r, -i);
            p.constrain(0, im, Relation::Eq, 2.0 * m[(a, b)].im);
        }
    }
}

/// `0_top (+) op`.
fn lift_bottom(op: &ComplexMatrix, top: usize) -> SparseHermitian {
    let d = op.nrows();
    let mut out = SparseHermitian::zeros(top + d);
    for c in 0..d {
        for r in 0..d {
            out.push(top + r, top + c, op[(r, c)]);
        }
    }
    out
}

/// `-1/2 [[0, K^H], [K, 0]]` for `K` of shape `bottom x top`, so that
/// `tr(. Z) = -Re tr(K X)`.
fn cross_block(k: &ComplexMatrix) -> SparseHermitian {
    let (b, a) = (k.nrows(), k.ncols());
    let mut out = SparseHermitian::zeros(a + b);
    for r in 0..b {
        for c in 0..a {
            let v = k[(r, c)] * -0.5;
            out.push(a + r, c, v);
            out.push(c, a + r, v.conj());
        }
    }
    out
}

/// `0 (+) op` on the joint block.
pub fn lift_sigma(op: &ComplexMatrix) -> SparseHermitian {
    lift_bottom(op, op.nrows())
}

/// `-1/2 [[0, K], [K, 0]]`, so `tr(. Z) = -Re tr(K X)` for Hermitian `K`.
pub fn cross_term(k: &ComplexMatrix) -> SparseHermitian {
    cross_block(k)
}

fn check_operand(a: &ComplexMatrix, d: usize) -> Result<()> {
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: a.nrows(),
        });
    }
    Ok(())
}

/// Builds the program whose optimum is `-sqrt F(rho, sigma*)`.
pub fn sqrt_fidelity_sdp(rho: &DensityMatrix, sigma: &SigmaSpec, form: FidelityForm) -> Result<FidelitySdp> {
    let d = rho.dim();
    let sigma_basis = match sigma {
        SigmaSpec::Fixed(s) => {
            check_operand(s, d)?;
            let dev = crate::qstate::hermitian_deviation(s);
            if dev > 1e-9 {
                return Err(Error::NotHermitian { deviation: dev });
            }
            Some(support_basis(s)?)
        }
        SigmaSpec::Free(extra) => {
            for (a, _, _) in extra {
                check_operand(a, d)?;
            }
            None
        }
    };
    let bottom = sigma_basis.as_ref().map_or(d, |v| v.ncols());
    // `K` acts on the off-diagonal block: objective `Re tr(K X)`.
    let (top_block, k) = match form {
        FidelityForm::Watrous => {
            let u = support_basis(rho.matrix())?;
            let t = u.adjoint() * rho.matrix() * &u;
            let k = match &sigma_basis {
                Some(v) => v.adjoint() * &u,
                None => u,
            };
            (t, k)
        }
        FidelityForm::Scaled => {
            let k = match &sigma_basis {
                Some(v) => v.adjoint() * rho.sqrt(),
                None => rho.sqrt(),
            };
            (ComplexMatrix::identity(d, d), k)
        }
    };
    let top = top_block.nrows();
    let n = top + bottom;
    let mut p = SdpProblem::single(n);
    pin_block(&mut p, n, 0, &top_block);
    p.objective.push(Term {
        block: 0,
        matrix: cross_block(&k),
    });
    match (sigma, &sigma_basis) {
        (SigmaSpec::Fixed(s), Some(v)) => pin_block(&mut p, n, top, &(v.adjoint() * s * v)),
        (SigmaSpec::Free(extra), _) => {
            p.constrain(0, lift_bottom(&ComplexMatrix::identity(d, d), top), Relation::Eq, 1.0);
            for (a, rel, b) in extra {
                p.constrain(0, lift_bottom(a, top), *rel, *b);
            }
        }
        (SigmaSpec::Fixed(_), None) => unreachable!("fixed sigma always has a basis"),
    }
    Ok(FidelitySdp {
        problem: p,
        dim: d,
        form,
        top,
        sigma_basis,
    })
}

impl FidelitySdp {
    pub fn solve(&self, opts: &SolverOptions) -> Result<SdpSolution> {
        solve(&self.problem, opts)
    }

    /// Optimal `sqrt F`.
    pub fn sqrt_fidelity(&self, sol: &SdpSolution) -> f64 {
        -sol.objective_value
    }

    /// The `sigma` block of the joint variable, in the original basis.
    pub fn sigma(&self, sol: &SdpSolution) -> ComplexMatrix {
        let x = sol.x();
        let b = x.nrows() - self.top;
        let block = x.view((self.top, self.top), (b, b)).into_owned();
        match &self.sigma_basis {
            Some(v) => v * block * v.adjoint(),
            None => block,
        }
    }
}
