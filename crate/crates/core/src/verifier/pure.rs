//! Robust radius against pure perturbations of a pure state.
//!
//! Per class `k` this is the non-convex program
//! `min 1 - |<phi|psi>|^2  s.t.  <phi|W_lk|phi> <= 0, ||phi|| = 1`,
//! attacked by an augmented Lagrangian with Riemannian gradient steps on the
//! unit sphere from several starts. The returned radius is realized by a
//! feasible `phi`, so it is an upper bound on the true optimum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::Classifier;
use crate::error::Result;
use crate::policy::QcqpOptions;
use crate::qstate::{ComplexMatrix, ComplexVector, PureState, C64};
use crate::random::random_pure_state;

use super::{ensure_classified_as, Decision, DecisionCase};

#[derive(Debug, Clone, PartialEq)]
pub struct PureClassBound {
    pub class: usize,
    /// `None` means unreachable (`+inf`).
    pub delta: Option<f64>,
    pub phi: Option<PureState>,
    pub starts: usize,
    /// Starts whose local solve met the gradient and constraint tolerances.
    pub converged_starts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureBound {
    pub delta: Option<f64>,
    pub argmin_class: Option<usize>,
    pub phi_star: Option<PureState>,
    pub per_class: Vec<PureClassBound>,
}

impl PureBound {
    /// No class had a converged start; the value is still a feasible upper
    /// bound but carries no local-optimality evidence.
    pub fn inconclusive(&self) -> bool {
        self.per_class.iter().any(|b| b.starts > 0 && b.converged_starts == 0)
    }

    pub fn robust_at(&self, eps: f64) -> bool {
        self.delta.is_none_or(|d| eps <= d)
    }
}

fn quad(w: &ComplexMatrix, phi: &ComplexVector) -> f64 {
    phi.dotc(&(w * phi)).re
}

fn overlap2(psi: &ComplexVector, phi: &ComplexVector) -> f64 {
    psi.dotc(phi).norm_sqr()
}

struct Lagrangian<'a> {
    psi: &'a ComplexVector,
    w: &'a ComplexMatrix,
    lambda: f64,
    mu: f64,
}

impl Lagrangian<'_> {
    fn value(&self, phi: &ComplexVector) -> f64 {
        let f = 1.0 - overlap2(self.psi, phi);
        let g = quad(self.w, phi);
        let s = (self.lambda + self.mu * g).max(0.0);
        f + (s * s - self.lambda * self.lambda) / (2.0 * self.mu)
    }

    /// Riemannian gradient on the sphere.
    fn gradient(&self, phi: &ComplexVector) -> ComplexVector {
        let a = self.psi.dotc(phi);
        let wphi = self.w * phi;
        let g = phi.dotc(&wphi).re;
        let s = (self.lambda + self.mu * g).max(0.0);
        let euclid = self.psi * (a * C64::from(-2.0)) + wphi * C64::from(2.0 * s);
        let radial = phi.dotc(&euclid).re;
        euclid - phi * C64::from(radial)
    }
}

fn normalize(v: ComplexVector) -> ComplexVector {
    let n = v.norm();
    v.unscale(n)
}

/// Local solve from one start; returns the final point and whether it met
/// the tolerances.
fn local_solve(psi: &ComplexVector, w: &ComplexMatrix, start: ComplexVector, opts: &QcqpOptions) -> (ComplexVector, bool) {
    let mut phi = normalize(start);
    let mut lag = Lagrangian {
        psi,
        w,
        lambda: 0.0,
        mu: 10.0,
    };
    let mut last_violation = f64::INFINITY;
    let mut step: f64 = 0.5;
    for _ in 0..opts.outer_iterations {
        let mut grad_norm = f64::INFINITY;
        for _ in 0..opts.inner_iterations {
            let grad = lag.gradient(&phi);
            grad_norm = grad.norm();
            if grad_norm <= opts.gradient_tol {
                break;
            }
            let f0 = lag.value(&phi);
            let mut alpha = (2.0 * step).min(10.0);
            let mut accepted = false;
            while alpha > 1e-14 {
                let trial = normalize(&phi - &grad * C64::from(alpha));
                if lag.value(&trial) <= f0 - 1e-4 * alpha * grad_norm * grad_norm {
                    phi = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            step = alpha;
            if !accepted {
                break;
            }
        }
        let g = quad(w, &phi);
        let violation = g.max(0.0);
        lag.lambda = (lag.lambda + lag.mu * g).max(0.0);
        if violation <= opts.constraint_tol && grad_norm <= opts.gradient_tol.sqrt() {
            return (phi, true);
        }
        if violation > 0.25 * last_violation {
            lag.mu = (lag.mu * 10.0).min(1e10);
        }
        last_violation = violation;
    }
    let ok = quad(w, &phi) <= opts.constraint_tol && lag.gradient(&phi).norm() <= opts.gradient_tol.sqrt();
    (phi, ok)
}

/// Moves `phi` toward the most negative eigenvector `v` of `W` along
/// `(1 - t) phi + t e^{i theta} v` until `<phi|W|phi> <= 0`; bisection on `t`.
fn repair(w: &ComplexMatrix, v: &ComplexVector, phi: ComplexVector) -> ComplexVector {
    if quad(w, &phi) <= 0.0 {
        return phi;
    }
    let a = v.dotc(&phi);
    let phase = if a.norm() > 0.0 { a / a.norm() } else { C64::from(1.0) };
    let aligned = v * phase;
    let at = |t: f64| normalize(&phi * C64::from(1.0 - t) + &aligned * C64::from(t));
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if quad(w, &at(mid)) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    at(hi)
}

/// Optimal robust radius of `psi` against pure perturbations.
pub fn pure_state_optimal_bound(c: &Classifier, psi: &PureState, l: usize, opts: &QcqpOptions) -> Result<PureBound> {
    let rho = psi.to_density();
    ensure_classified_as(c, &rho, l)?;
    let policy = c.policy();
    let a = psi.amplitudes();
    let mut per_class = Vec::new();
    for k in (0..c.num_classes()).filter(|&k| k != l) {
        let dec = Decision::new(c, l, k)?;
        let immediate = matches!(dec.case, DecisionCase::Degenerate) || dec.gap(rho.matrix()) <= policy.tie_tol;
        if immediate {
            per_class.push(PureClassBound {
                class: k,
                delta: Some(0.0),
                phi: Some(psi.clone()),
                starts: 0,
                converged_starts: 0,
            });
            continue;
        }
        let bound = match &dec.case {
            DecisionCase::Degenerate => unreachable!("handled above"),
            DecisionCase::Unreachable => PureClassBound {
                class: k,
                delta: None,
                phi: None,
                starts: 0,
                converged_starts: 0,
            },
            DecisionCase::Face { projector } => {
                let proj = projector * a;
                let (phi, delta) = if proj.norm() > 1e-12 {
                    let phi = normalize(proj);
                    let d = 1.0 - overlap2(a, &phi);
                    (phi, d.clamp(0.0, 1.0))
                } else {
                    let col = (0..projector.ncols())
                        .max_by(|&i, &j| projector.column(i).norm().total_cmp(&projector.column(j).norm()))
                        .unwrap_or(0);
                    (normalize(projector.column(col).into_owned()), 1.0)
                };
                PureClassBound {
                    class: k,
                    delta: Some(delta),
                    phi: Some(PureState::new(phi)?),
                    starts: 0,
                    converged_starts: 0,
                }
            }
            DecisionCase::Interior => {
                let d = psi.dim();
                let v = dec.eig.eigenvectors.column(0).into_owned();
                let mut starts: Vec<ComplexVector> = vec![a.clone()];
                for j in 0..d.min(opts.starts.saturating_sub(1)) {
                    starts.push(dec.eig.eigenvectors.column(j).into_owned());
                }
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ ((k as u64) << 32) ^ l as u64);
                while starts.len() < opts.starts.max(1) {
                    starts.push(random_pure_state(&mut rng, d).amplitudes().clone());
                }
                let mut best: Option<(f64, ComplexVector)> = None;
                let mut converged = 0;
                for s in &starts {
                    let (phi, ok) = local_solve(a, &dec.w, s.clone(), opts);
                    converged += ok as usize;
                    let phi = repair(&dec.w, &v, phi);
                    let delta = (1.0 - overlap2(a, &phi)).clamp(0.0, 1.0);
                    if best.as_ref().is_none_or(|(b, _)| delta < *b) {
                        best = Some((delta, phi));
                    }
                }
                let (delta, phi) = best.expect("at least one start");
                PureClassBound {
                    class: k,
                    delta: Some(delta),
                    phi: Some(PureState::new(phi)?),
                    starts: starts.len(),
                    converged_starts: converged,
                }
            }
        };
        per_class.push(bound);
    }
    let best = per_class
        .iter()
        .filter_map(|b| b.delta.map(|d| (d, b)))
        .min_by(|x, y| x.0.total_cmp(&y.0));
    Ok(match best {
        Some((d, b)) => PureBound {
            delta: Some(d),
            argmin_class: Some(b.class),
            phi_star: b.phi.clone(),
            per_class,
        },
        None => PureBound {
            delta: None,
            argmin_class: None,
            phi_star: None,
            per_class,
        },
    })
}
