//! Primal-dual path-following interior-point method for real symmetric,
//! block-diagonal SDPs in equality form:
//!
//! ```text
//! minimize <C, X>  subject to  <A_i, X> = b_i,  X = diag(X_1, .., X_p) >= 0
//! maximize b.y     subject to  sum_i y_i A_i + Z = C,  Z >= 0
//! ```
//!
//! Search directions use Nesterov-Todd scaling with a Mehrotra
//! predictor-corrector. Iterates start at scaled identities and need not be
//! feasible.

use nalgebra::{DMatrix, DVector};

use crate::policy::SolverOptions;

/// Symmetric matrix entries spread over blocks; off-diagonal entries are
/// stored at both `(r, c)` and `(c, r)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseSym {
    pub entries: Vec<SymEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl SparseSym {
    pub fn push(&mut self, block: usize, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.entries.push(SymEntry {
                block,
                row,
                col,
                value,
            });
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.value * e.value).sum::<f64>().sqrt()
    }

    pub fn inner(&self, x: &[DMatrix<f64>]) -> f64 {
        self.entries
            .iter()
            .map(|e| e.value * x[e.block][(e.row, e.col)])
            .sum()
    }

    fn scale(&mut self, s: f64) {
        for e in &mut self.entries {
            e.value *= s;
        }
    }

    fn blocks(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.entries.iter().map(|e| e.block).collect();
        b.sort_unstable();
        b.dedup();
        b
    }
}

/// Equality-form problem handed to [`solve_standard`].
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    pub block_dims: Vec<usize>,
    pub objective: Vec<DMatrix<f64>>,
    pub constraints: Vec<SparseSym>,
    pub rhs: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Optimal,
    /// A Farkas certificate `A*(y) <= 0, b.y > 0` was found.
    PrimalInfeasible,
    /// A recession direction `A(X) = 0, <C, X> < 0` was found.
    DualInfeasible,
    MaxIterations,
    Stalled,
    Diverged,
    NumericalFailure,
}

/// One row of the iteration history, in original units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Largest row residual of `A(X) = b` relative to `max(1, ||A_i||)`.
    pub primal_residual: f64,
    /// `||C - A*(y) - Z|| / (1 + ||C||)` on normalized data.
    pub dual_residual: f64,
    /// `<X, Z> / n`.
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone)]
pub struct StandardSolution {
    pub termination: Termination,
    pub x: Vec<DMatrix<f64>>,
    pub y: DVector<f64>,
    pub z: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub history: Vec<IterationLog>,
}

type Blocks = Vec<DMatrix<f64>>;

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[DMatrix<f64>]) -> f64 {
    inner(a, a).sqrt()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Per-block Nesterov-Todd scaling: `G^{-1} X G^{-T} = G^T Z G = diag(lambda)`.
struct Scaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    /// `W = G G^T`.
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

/// Any `F` with `M = F F^T`: Cholesky when it succeeds, otherwise the
/// symmetric root. `None` when `M` is not numerically positive definite.
fn psd_factor(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.l());
    }
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    let mut v = eig.eigenvectors.clone();
    for (k, l) in eig.eigenvalues.iter().enumerate() {
        v.column_mut(k).scale_mut(l.sqrt());
    }
    Some(&v * eig.eigenvectors.transpose())
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Scaling> {
    let l = psd_factor(x)?;
    let r = psd_factor(z)?;
    let t = r.transpose() * &l;
    let svd = t.svd(false, true);
    let v = svd.v_t?.transpose();
    let s = svd.singular_values;
    if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let n = s.len();
    let mut lv = &l * &v;
    for k in 0..n {
        lv.column_mut(k).scale_mut(1.0 / s[k].sqrt());
    }
    let g = lv;
    let g_inv = g.clone().try_inverse()?;
    let w = &g * g.transpose();
    Some(Scaling {
        g,
        g_inv,
        w,
        lambda: s,
    })
}

/// Largest `alpha <= 1 / fraction` keeping `diag(lambda) + alpha * d` PSD,
/// where `d` is already in the scaled frame.
fn max_step(lambda: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = d[(i, j)] / (lambda[i] * lambda[j]).sqrt();
        }
    }
    symmetrize(&mut m);
    let min = if n == 1 {
        m[(0, 0)]
    } else {
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    };
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

struct Normalized {
    form: StandardForm,
    row_scale: Vec<f64>,
    b_norm: f64,
    c_norm: f64,
    kept: Vec<usize>,
}

/// Scales rows of `A` to unit norm, `b` and `C` to norm at most one. Drops
/// all-zero rows with zero right-hand side; reports `Err(())` for an all-zero
/// row with non-zero right-hand side (trivially infeasible).
fn normalize(p: &StandardForm) -> Result<Normalized, ()> {
    let mut constraints = Vec::new();
    let mut rhs = Vec::new();
    let mut row_scale = Vec::new();
    let mut kept = Vec::new();
    for (i, a) in p.constraints.iter().enumerate() {
        let norm = a.frobenius_norm();
        if norm == 0.0 {
            if p.rhs[i] != 0.0 {
                return Err(());
            }
            continue;
        }
        let mut a = a.clone();
        a.scale(1.0 / norm);
        constraints.push(a);
        rhs.push(p.rhs[i] / norm);
        row_scale.push(1.0 / norm);
        kept.push(i);
    }
    let mut rhs = DVector::from_vec(rhs);
    let b_norm = rhs.norm().max(1.0);
    rhs /= b_norm;
    let c_norm = frob(&p.objective).max(1.0);
    let objective = p.objective.iter().map(|c| c / c_norm).collect();
    Ok(Normalized {
        form: StandardForm {
            block_dims: p.block_dims.clone(),
            objective,
            constraints,
            rhs,
        },
        row_scale,
        b_norm,
        c_norm,
        kept,
    })
}

fn apply_a(a: &[SparseSym], x: &[DMatrix<f64>]) -> DVector<f64> {
    DVector::from_iterator(a.len(), a.iter().map(|ai| ai.inner(x)))
}

fn apply_at(a: &[SparseSym], y: &DVector<f64>, dims: &[usize]) -> Blocks {
    let mut out: Blocks = dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for (ai, &yi) in a.iter().zip(y.iter()) {
        if yi == 0.0 {
            continue;
        }
        for e in &ai.entries {
            out[e.block][(e.row, e.col)] += yi * e.value;
        }
    }
    out
}

/// `W A_j W` restricted to the blocks `A_j` touches.
fn scaled_constraint(a: &SparseSym, scalings: &[Scaling], dims: &[usize]) -> Vec<(usize, DMatrix<f64>)> {
    let mut out = Vec::new();
    for b in a.blocks() {
        let n = dims[b];
        let w = &scalings[b].w;
        let nnz = a.entries.iter().filter(|e| e.block == b).count();
        let g = if nnz * n < 2 * n * n {
            let mut g = DMatrix::zeros(n, n);
            for e in a.entries.iter().filter(|e| e.block == b) {
                // v * W[:, r] W[c, :]
                let col = w.column(e.row);
                let row = w.row(e.col);
                g.ger(e.value, &col, &row.transpose(), 1.0);
            }
            g
        } else {
            let mut dense = DMatrix::zeros(n, n);
            for e in a.entries.iter().filter(|e| e.block == b) {
                dense[(e.row, e.col)] += e.value;
            }
            w * dense * w
        };
        out.push((b, g));
    }
    out
}

fn schur_complement(a: &[SparseSym], scalings: &[Scaling], dims: &[usize]) -> DMatrix<f64> {
    let m = a.len();
    let mut schur = DMatrix::zeros(m, m);
    for j in 0..m {
        let g = scaled_constraint(&a[j], scalings, dims);
        for i in 0..=j {
            let mut v = 0.0;
            for e in &a[i].entries {
                if let Some((_, gb)) = g.iter().find(|(b, _)| *b == e.block) {
                    v += e.value * gb[(e.row, e.col)];
                }
            }
            schur[(i, j)] = v;
            schur[(j, i)] = v;
        }
    }
    schur
}

enum SchurFactor {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn new(m: DMatrix<f64>) -> Option<Self> {
        if let Some(ch) = m.clone().cholesky() {
            return Some(SchurFactor::Cholesky(ch));
        }
        let scale = m.diagonal().iter().fold(0.0_f64, |a, &v| a.max(v.abs())).max(1e-300);
        for k in [1e-14, 1e-12, 1e-10] {
            let mut reg = m.clone();
            for i in 0..reg.nrows() {
                reg[(i, i)] += k * scale;
            }
            if let Some(ch) = reg.cholesky() {
                return Some(SchurFactor::Cholesky(ch));
            }
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Some(SchurFactor::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let out = match self {
            SchurFactor::Cholesky(ch) => ch.solve(rhs),
            SchurFactor::Lu(lu) => lu.solve(rhs)?,
        };
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

struct Direction {
    dx: Blocks,
    dy: DVector<f64>,
    dz: Blocks,
}

/// Solves `A(dX) = rp`, `A*(dy) + dZ = rd`, `dX + W dZ W = rc`.
fn newton_direction(
    a: &[SparseSym],
    dims: &[usize],
    scalings: &[Scaling],
    schur: &SchurFactor,
    rp: &DVector<f64>,
    rd: &[DMatrix<f64>],
    rc: &[DMatrix<f64>],
) -> Option<Direction> {
    let w_rd_w: Blocks = scalings.iter().zip(rd).map(|(s, r)| &s.w * r * &s.w).collect();
    let rhs = rp - apply_a(a, rc) + apply_a(a, &w_rd_w);
    let dy = schur.solve(&rhs)?;
    let aty = apply_at(a, &dy, dims);
    let dz: Blocks = rd.iter().zip(&aty).map(|(r, t)| r - t).collect();
    let dx: Blocks = rc
        .iter()
        .zip(scalings)
        .zip(&dz)
        .map(|((c, s), d)| {
            let mut m = c - &s.w * d * &s.w;
            symmetrize(&mut m);
            m
        })
        .collect();
    Some(Direction { dx, dy, dz })
}

fn scaled_dirs(scalings: &[Scaling], d: &Direction) -> (Blocks, Blocks) {
    let sx = scalings
        .iter()
        .zip(&d.dx)
        .map(|(s, dx)| {
            let mut m = &s.g_inv * dx * s.g_inv.transpose();
            symmetrize(&mut m);
            m
        })
        .collect();
    let sz = scalings
        .iter()
        .zip(&d.dz)
        .map(|(s, dz)| {
            let mut m = s.g.transpose() * dz * &s.g;
            symmetrize(&mut m);
            m
        })
        .collect();
    (sx, sz)
}

fn step_lengths(scalings: &[Scaling], sx: &[DMatrix<f64>], sz: &[DMatrix<f64>]) -> (f64, f64) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for (s, (x, z)) in scalings.iter().zip(sx.iter().zip(sz)) {
        ap = ap.min(max_step(&s.lambda, x));
        ad = ad.min(max_step(&s.lambda, z));
    }
    (ap, ad)
}

/// Solves an equality-form SDP.
pub fn solve_standard(problem: &StandardForm, opts: &SolverOptions) -> StandardSolution {
    let dims = problem.block_dims.clone();
    let zero_blocks = || -> Blocks { dims.iter().map(|&n| DMatrix::zeros(n, n)).collect() };
    let norm = match normalize(problem) {
        Ok(n) => n,
        Err(()) => {
            return StandardSolution {
                termination: Termination::PrimalInfeasible,
                x: zero_blocks(),
                y: DVector::zeros(problem.constraints.len()),
                z: zero_blocks(),
                primal_objective: f64::NAN,
                dual_objective: f64::NAN,
                relative_gap: f64::NAN,
                primal_residual: f64::INFINITY,
                dual_residual: f64::NAN,
                iterations: 0,
                history: Vec::new(),
            }
        }
    };
    let p = &norm.form;
    let a = &p.constraints;
    let b = &p.rhs;
    let c = &p.objective;
    let total_dim: usize = dims.iter().sum();
    let nf = total_dim.max(1) as f64;
    let c_frob = frob(c);

    let start = 10.0_f64.max(nf.sqrt());
    let mut x: Blocks = dims.iter().map(|&n| DMatrix::identity(n, n) * start).collect();
    let mut z: Blocks = dims.iter().map(|&n| DMatrix::identity(n, n) * start).collect();
    let mut y = DVector::zeros(a.len());

    let unscale = norm.c_norm * norm.b_norm;
    let mut history = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut stalled = 0usize;
    let mut iterations = 0usize;
    let mut last = (f64::NAN, f64::NAN, f64::NAN, f64::INFINITY, f64::INFINITY);

    for iter in 0..=opts.max_iterations {
        iterations = iter;
        let ax = apply_a(a, &x);
        let rp = b - &ax;
        let aty = apply_at(a, &y, &dims);
        let rd: Blocks = c
            .iter()
            .zip(&aty)
            .zip(&z)
            .map(|((ci, ti), zi)| ci - ti - zi)
            .collect();
        let pobj_s = inner(c, &x);
        let dobj_s = b.dot(&y);
        let pobj = pobj_s * unscale;
        let dobj = dobj_s * unscale;
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pres = rp.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * norm.b_norm;
        let dres = frob(&rd) / (1.0 + c_frob);
        let mu = inner(&x, &z) / nf;
        last = (pobj, dobj, rel_gap, pres, dres);

        history.push(IterationLog {
            primal_objective: pobj,
            dual_objective: dobj,
            primal_residual: pres,
            dual_residual: dres,
            mu,
            step_primal: f64::NAN,
            step_dual: f64::NAN,
        });

        if rel_gap <= opts.gap_tol && pres <= opts.feas_tol && dres <= opts.feas_tol {
            termination = Termination::Optimal;
            break;
        }
        // Farkas-type certificates on the normalized data.
        if dobj_s > 0.0 {
            let cert = frob(&c.iter().zip(&rd).map(|(ci, r)| ci - r).collect::<Blocks>()) / dobj_s;
            if cert < 1e-8 {
                termination = Termination::PrimalInfeasible;
                break;
            }
        }
        if pobj_s < 0.0 {
            let cert = ax.norm() / (-pobj_s);
            if cert < 1e-8 && dres > opts.feas_tol {
                termination = Termination::DualInfeasible;
                break;
            }
        }
        let size = frob(&x).max(frob(&z)).max(y.amax());
        if !size.is_finite() || size > opts.divergence_bound {
            termination = Termination::Diverged;
            break;
        }
        if iter == opts.max_iterations {
            termination = Termination::MaxIterations;
            break;
        }

        let scalings: Option<Vec<Scaling>> = x.iter().zip(&z).map(|(xb, zb)| nt_scaling(xb, zb)).collect();
        let Some(scalings) = scalings else {
            termination = Termination::NumericalFailure;
            break;
        };
        let Some(schur) = SchurFactor::new(schur_complement(a, &scalings, &dims)) else {
            termination = Termination::NumericalFailure;
            break;
        };

        // Predictor: target dX + W dZ W = -X.
        let rc_aff: Blocks = x.iter().map(|xb| -xb).collect();
        let Some(aff) = newton_direction(a, &dims, &scalings, &schur, &rp, &rd, &rc_aff) else {
            termination = Termination::NumericalFailure;
            break;
        };
        let (sx_a, sz_a) = scaled_dirs(&scalings, &aff);
        let (ap_max, ad_max) = step_lengths(&scalings, &sx_a, &sz_a);
        let ap = ap_max.min(1.0);
        let ad = ad_max.min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..dims.len() {
            let xa = &x[k] + &aff.dx[k] * ap;
            let za = &z[k] + &aff.dz[k] * ad;
            mu_aff += xa.dot(&za);
        }
        mu_aff /= nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector: Lambda D + D Lambda = 2 sigma mu I - 2 Lambda^2 - (dx dz + dz dx).
        let rc: Blocks = scalings
            .iter()
            .zip(sx_a.iter().zip(&sz_a))
            .map(|(s, (dxa, dza))| {
                let n = s.lambda.len();
                let h = dxa * dza + dza * dxa;
                let mut d = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let mut r = -h[(i, j)];
                        if i == j {
                            r += 2.0 * sigma * mu - 2.0 * s.lambda[i] * s.lambda[i];
                        }
                        d[(i, j)] = r / (s.lambda[i] + s.lambda[j]);
                    }
                }
                let mut out = &s.g * d * s.g.transpose();
                symmetrize(&mut out);
                out
            })
            .collect();
        let Some(dir) = newton_direction(a, &dims, &scalings, &schur, &rp, &rd, &rc) else {
            termination = Termination::NumericalFailure;
            break;
        };
        let (sx, sz) = scaled_dirs(&scalings, &dir);
        let (ap_max, ad_max) = step_lengths(&scalings, &sx, &sz);
        let gamma = opts.step_fraction;
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);
        if let Some(h) = history.last_mut() {
            h.step_primal = ap;
            h.step_dual = ad;
        }

        for k in 0..dims.len() {
            x[k] += &dir.dx[k] * ap;
            z[k] += &dir.dz[k] * ad;
            symmetrize(&mut x[k]);
            symmetrize(&mut z[k]);
        }
        y += &dir.dy * ad;

        if ap < 1e-10 && ad < 1e-10 {
            stalled += 1;
            if stalled >= 3 {
                termination = Termination::Stalled;
                break;
            }
        } else {
            stalled = 0;
        }
    }

    // Back to original units.
    let x_out: Blocks = x.iter().map(|m| m * norm.b_norm).collect();
    let z_out: Blocks = z.iter().map(|m| m * norm.c_norm).collect();
    let mut y_out = DVector::zeros(problem.constraints.len());
    for (k, &orig) in norm.kept.iter().enumerate() {
        y_out[orig] = y[k] * norm.c_norm * norm.row_scale[k];
    }
    StandardSolution {
        termination,
        x: x_out,
        y: y_out,
        z: z_out,
        primal_objective: last.0,
        dual_objective: last.1,
        relative_gap: last.2,
        primal_residual: last.3,
        dual_residual: last.4,
        iterations,
        history,
    }
}

/// Phase-one problem: `min sum(u + v) + reg * tr(X)` subject to
/// `A(X) + u - v = b`. A positive optimum certifies that `A(X) = b, X >= 0`
/// has no solution (up to the regularization).
pub fn phase_one(problem: &StandardForm, opts: &SolverOptions) -> StandardSolution {
    const REG: f64 = 1e-10;
    let m = problem.constraints.len();
    let base = problem.block_dims.len();
    let mut dims = problem.block_dims.clone();
    dims.extend(std::iter::repeat(1).take(2 * m));
    let mut objective: Blocks = problem
        .block_dims
        .iter()
        .map(|&n| DMatrix::identity(n, n) * REG)
        .collect();
    objective.extend((0..2 * m).map(|_| DMatrix::from_element(1, 1, 1.0)));
    let constraints = problem
        .constraints
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let norm = a.frobenius_norm().max(1e-300);
            let mut row = a.clone();
            row.scale(1.0 / norm);
            row.push(base + 2 * i, 0, 0, 1.0);
            row.push(base + 2 * i + 1, 0, 0, -1.0);
            row
        })
        .collect::<Vec<_>>();
    let rhs = DVector::from_iterator(
        m,
        problem
            .constraints
            .iter()
            .zip(problem.rhs.iter())
            .map(|(a, &b)| b / a.frobenius_norm().max(1e-300)),
    );
    let p1 = StandardForm {
        block_dims: dims,
        objective,
        constraints,
        rhs,
    };
    solve_standard(&p1, opts)
}
