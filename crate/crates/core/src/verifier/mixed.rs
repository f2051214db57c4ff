//! Mixed-state verification: epsilon feasibility and the optimal robust bound.

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::qstate::{fidelity, trace, ComplexMatrix, DensityMatrix, C64};
use crate::sdp::fidelity::{cross_term, lift_sigma};
use crate::sdp::{solve, sqrt_fidelity_sdp, FidelityForm, Relation, SdpStatus, SigmaSpec, SparseHermitian, Term};

use super::{check_epsilon, ensure_classified_as, Adversarial, Decision, DecisionCase};

/// How a per-class radius was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    /// `rho` itself is on or past the boundary.
    AlreadyAdversarial,
    /// The decision operator is positive definite.
    Unreachable,
    /// Closed form on the kernel of a singular positive decision operator.
    Face,
    Sdp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassBound {
    pub class: usize,
    /// `None` means no state reaches class `class` (radius `+inf`).
    pub delta: Option<f64>,
    pub sigma: Option<DensityMatrix>,
    pub method: BoundMethod,
    /// Set when an SDP was solved.
    pub status: Option<SdpStatus>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalBound {
    /// `None` means `+inf`.
    pub delta: Option<f64>,
    pub argmin_class: Option<usize>,
    pub sigma_star: Option<DensityMatrix>,
    pub per_class: Vec<ClassBound>,
}

impl OptimalBound {
    pub fn is_unbounded(&self) -> bool {
        self.delta.is_none()
    }

    /// `eps <= delta`.
    pub fn robust_at(&self, eps: f64) -> bool {
        self.delta.is_none_or(|d| eps <= d)
    }

    /// Per-class SDPs that ended without an optimal status; each contributes
    /// `+inf` to the minimum.
    pub fn unsolved(&self) -> usize {
        self.per_class
            .iter()
            .filter(|b| b.status.is_some_and(|s| s != SdpStatus::Optimal))
            .count()
    }

    pub fn sdp_solves(&self) -> usize {
        self.per_class.iter().filter(|b| b.status.is_some()).count()
    }

    pub fn sdp_iterations(&self) -> usize {
        self.per_class.iter().map(|b| b.iterations).sum()
    }
}

fn density(m: &ComplexMatrix) -> Result<DensityMatrix> {
    DensityMatrix::project(m)
}

/// Closed form on the face `P sigma P = sigma`: `max F = tr(P rho)`,
/// attained by `P rho P / tr(P rho)`.
fn face_solution(rho: &DensityMatrix, projector: &ComplexMatrix) -> Result<(f64, DensityMatrix)> {
    let prp = projector * rho.matrix() * projector;
    let mass = trace(&prp).re;
    if mass > 1e-14 {
        Ok(((1.0 - mass).clamp(0.0, 1.0), density(&prp)?))
    } else {
        Ok((1.0, density(projector)?))
    }
}

/// Optimal robust radius `delta = min_{k != l} delta_k`, where `delta_k` is
/// the least `1 - F(rho, sigma)` over states with `p_l(sigma) <= p_k(sigma)`.
///
/// Per-class problems the solver cannot finish count as `+inf`.
pub fn compute_optimal_bound(c: &Classifier, rho: &DensityMatrix, l: usize) -> Result<OptimalBound> {
    ensure_classified_as(c, rho, l)?;
    let policy = c.policy();
    let mut per_class = Vec::new();
    for k in (0..c.num_classes()).filter(|&k| k != l) {
        let dec = Decision::new(c, l, k)?;
        if matches!(dec.case, DecisionCase::Degenerate) || dec.gap(rho.matrix()) <= policy.tie_tol {
            per_class.push(ClassBound {
                class: k,
                delta: Some(0.0),
                sigma: Some(rho.clone()),
                method: BoundMethod::AlreadyAdversarial,
                status: None,
                iterations: 0,
            });
            continue;
        }
        let bound = match &dec.case {
            DecisionCase::Degenerate => unreachable!("handled above"),
            DecisionCase::Unreachable => ClassBound {
                class: k,
                delta: None,
                sigma: None,
                method: BoundMethod::Unreachable,
                status: None,
                iterations: 0,
            },
            DecisionCase::Face { projector } => {
                let (delta, sigma) = face_solution(rho, projector)?;
                ClassBound {
                    class: k,
                    delta: Some(delta),
                    sigma: Some(sigma),
                    method: BoundMethod::Face,
                    status: None,
                    iterations: 0,
                }
            }
            DecisionCase::Interior => {
                let sdp = sqrt_fidelity_sdp(
                    rho,
                    &SigmaSpec::Free(vec![(dec.w.clone(), Relation::LessEq, 0.0)]),
                    FidelityForm::Scaled,
                )?;
                let sol = solve(&sdp.problem, &policy.sdp)?;
                if sol.status == SdpStatus::Optimal {
                    let root = sdp.sqrt_fidelity(&sol).clamp(0.0, 1.0);
                    let sigma = density(&dec.push_across(&sdp.sigma(&sol)))?;
                    ClassBound {
                        class: k,
                        delta: Some(1.0 - root * root),
                        sigma: Some(sigma),
                        method: BoundMethod::Sdp,
                        status: Some(sol.status),
                        iterations: sol.iterations,
                    }
                } else {
                    log::warn!("class {k}: bound SDP ended with {:?}", sol.status);
                    ClassBound {
                        class: k,
                        delta: None,
                        sigma: None,
                        method: BoundMethod::Sdp,
                        status: Some(sol.status),
                        iterations: sol.iterations,
                    }
                }
            }
        };
        per_class.push(bound);
    }
    let best = per_class
        .iter()
        .filter_map(|b| b.delta.map(|d| (d, b)))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    Ok(match best {
        Some((d, b)) => OptimalBound {
            delta: Some(d),
            argmin_class: Some(b.class),
            sigma_star: b.sigma.clone(),
            per_class,
        },
        None => OptimalBound {
            delta: None,
            argmin_class: None,
            sigma_star: None,
            per_class,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessCheck {
    pub robust: bool,
    /// Closest witness among the per-class feasible points.
    pub witness: Option<Adversarial>,
    pub sdp_solves: usize,
}

/// Offset keeping the auxiliary variable `tau = t + SHIFT` strictly positive:
/// with `||W|| = 1` and `0 <= Re tr(sqrt(rho) Y) <= 1` the smallest feasible
/// `t` lies in `[-1, 2]`.
const SHIFT: f64 = 2.0;

/// Decides whether some `sigma` with `1 - F(rho, sigma) <= eps` loses or ties
/// label `l`.
///
/// Each class `k` is a phase-one program: minimize `t` subject to
/// `tr(W_lk sigma) <= t` and `Re tr(sqrt(rho) Y) >= sqrt(1 - eps) - t` over the
/// fidelity block; the class is reachable iff the optimum is `<= feas_tol`.
pub fn check_epsilon_robust(c: &Classifier, rho: &DensityMatrix, l: usize, eps: f64) -> Result<RobustnessCheck> {
    check_epsilon(eps, true)?;
    ensure_classified_as(c, rho, l)?;
    let policy = c.policy();
    let target = (1.0 - eps).sqrt();
    let mut witness: Option<Adversarial> = None;
    let mut solves = 0;
    let mut offer = |sigma: DensityMatrix, class: usize| -> Result<()> {
        let distance = 1.0 - fidelity(rho, &sigma)?;
        if witness.as_ref().is_none_or(|w| distance < w.distance) {
            witness = Some(Adversarial {
                sigma,
                target_class: class,
                distance,
            });
        }
        Ok(())
    };
    for k in (0..c.num_classes()).filter(|&k| k != l) {
        let dec = Decision::new(c, l, k)?;
        if matches!(dec.case, DecisionCase::Degenerate) || dec.gap(rho.matrix()) <= policy.tie_tol {
            offer(rho.clone(), k)?;
            continue;
        }
        match &dec.case {
            DecisionCase::Degenerate | DecisionCase::Unreachable => {}
            DecisionCase::Face { projector } => {
                let (delta, sigma) = face_solution(rho, projector)?;
                if delta <= eps {
                    offer(sigma, k)?;
                }
            }
            DecisionCase::Interior => {
                let d = rho.dim();
                let mut sdp = sqrt_fidelity_sdp(rho, &SigmaSpec::Free(vec![]), FidelityForm::Scaled)?;
                let problem = &mut sdp.problem;
                problem.objective.clear();
                let tau = problem.add_block(1);
                let mut one = SparseHermitian::zeros(1);
                one.push(0, 0, C64::new(1.0, 0.0));
                let mut minus_one = SparseHermitian::zeros(1);
                minus_one.push(0, 0, C64::new(-1.0, 0.0));
                problem.objective.push(Term {
                    block: tau,
                    matrix: one,
                });
                problem.add_constraint(
                    vec![
                        Term {
                            block: 0,
                            matrix: lift_sigma(&dec.w),
                        },
                        Term {
                            block: tau,
                            matrix: minus_one.clone(),
                        },
                    ],
                    Relation::LessEq,
                    -SHIFT,
                );
                problem.add_constraint(
                    vec![
                        Term {
                            block: 0,
                            matrix: cross_term(&rho.sqrt()),
                        },
                        Term {
                            block: tau,
                            matrix: minus_one,
                        },
                    ],
                    Relation::LessEq,
                    -SHIFT - target,
                );
                let sol = solve(&sdp.problem, &policy.sdp)?;
                solves += 1;
                if sol.status != SdpStatus::Optimal {
                    return Err(Error::Solver(format!(
                        "class {k}: feasibility SDP ended with {:?} after {} iterations",
                        sol.status, sol.iterations
                    )));
                }
                let t = sol.objective_value - SHIFT;
                if t <= policy.sdp.feas_tol {
                    let sigma = density(&dec.push_across(&sol.blocks[0].view((d, d), (d, d)).into_owned()))?;
                    offer(sigma, k)?;
                }
            }
        }
    }
    Ok(RobustnessCheck {
        robust: witness.is_none(),
        witness,
        sdp_solves: solves,
    })
}
