//! Robustness verification.
//!
//! For a classifier `(E, {M_k})` and a state `rho` classified as `l`, the
//! decision operator `W_lk = E^dagger(M_l^dagger M_l - M_k^dagger M_k)` satisfies
//! `tr(W_lk sigma) = p_l(sigma) - p_k(sigma)`, so `sigma` loses (or ties)
//! class `l` against `k` exactly when `tr(W_lk sigma) <= 0`.
//!
//! * [`lemma_robust_bound`]: sufficient condition from the two largest
//!   outcome probabilities, no optimization.
//! * [`check_epsilon_robust`]: exact feasibility check at one `epsilon`.
//! * [`compute_optimal_bound`]: the largest robust radius `delta`.
//! * [`pure_state_optimal_bound`]: the same radius against pure perturbations.
//! * [`verify_dataset`], [`under_robust_accuracy`]: batch versions.

mod dataset;
mod mixed;
mod pure;

pub use dataset::{
    under_robust_accuracy, verify_dataset, AdversaryMode, Counts, SolverStats, StateVerdict, Timings,
    VerdictStatus, VerificationReport, VerifyOptions,
};
pub use mixed::{check_epsilon_robust, compute_optimal_bound, BoundMethod, ClassBound, OptimalBound, RobustnessCheck};
pub use pure::{pure_state_optimal_bound, PureBound, PureClassBound};

use crate::classifier::{ClassDistribution, Classifier};
use crate::error::{Error, Result};
use crate::qstate::{eigensystem_unchecked, trace_product, ComplexMatrix, DensityMatrix, Eigensystem};

/// A state within distance `epsilon` that the classifier does not strictly
/// assign to the source label.
#[derive(Debug, Clone, PartialEq)]
pub struct Adversarial {
    pub sigma: DensityMatrix,
    /// Class whose decision constraint produced `sigma`.
    pub target_class: usize,
    /// `1 - F(rho, sigma)`.
    pub distance: f64,
}

fn check_epsilon(eps: f64, allow_zero: bool) -> Result<()> {
    let ok = eps.is_finite() && eps < 1.0 && if allow_zero { eps >= 0.0 } else { eps > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("epsilon must lie in (0, 1), got {eps}")))
    }
}

/// `sqrt(p1) - sqrt(p2) > sqrt(2 eps)`, from a precomputed distribution.
pub fn lemma_certifies(distribution: &ClassDistribution, eps: f64) -> bool {
    distribution.margin() > (2.0 * eps).sqrt()
}

/// Sufficient robustness test: `true` certifies `eps`-robustness, `false`
/// is inconclusive.
pub fn lemma_robust_bound(c: &Classifier, rho: &DensityMatrix, eps: f64) -> Result<bool> {
    check_epsilon(eps, false)?;
    Ok(lemma_certifies(&c.class_probabilities(rho)?, eps))
}

/// `sqrt(1 - (sqrt(p1) - sqrt(p2))^2 / 2)`: the largest `sqrt F` between the
/// outcome distribution `(p1, p2, ..)` and any distribution on which class 1
/// no longer strictly wins.
pub fn lemma_closed_form(p1: f64, p2: f64) -> f64 {
    let m = p1.sqrt() - p2.sqrt();
    (1.0 - 0.5 * m * m).sqrt()
}

/// Lower bound on the optimal robust radius implied by the lemma:
/// `(sqrt(p1) - sqrt(p2))^2 / 2`.
pub fn lemma_delta_lower_bound(distribution: &ClassDistribution) -> f64 {
    let m = distribution.margin();
    0.5 * m * m
}

fn ensure_classified_as(c: &Classifier, rho: &DensityMatrix, l: usize) -> Result<()> {
    if l >= c.num_classes() {
        return Err(Error::invalid(format!("label {l} out of range")));
    }
    let found = c.classify(rho)?.label;
    if found != l {
        return Err(Error::Misclassified { expected: l, found });
    }
    Ok(())
}

/// Spectral shape of one normalized decision operator.
pub(crate) enum DecisionCase {
    /// `W = 0`: every state ties.
    Degenerate,
    /// `W > 0`: no state reaches the boundary.
    Unreachable,
    /// `W >= 0` with a kernel: feasible states live on the kernel.
    Face { projector: ComplexMatrix },
    /// `W` has a negative direction; the feasible set has interior.
    Interior,
}

pub(crate) struct Decision {
    /// `W_lk` in probability units.
    pub raw: ComplexMatrix,
    /// `W_lk / ||W_lk||`.
    pub w: ComplexMatrix,
    pub eig: Eigensystem,
    pub case: DecisionCase,
}

impl Decision {
    pub fn new(c: &Classifier, l: usize, k: usize) -> Result<Self> {
        let raw = c.decision_operator(l, k)?;
        let eig = eigensystem_unchecked(&raw);
        let scale = eig.min_eigenvalue().abs().max(eig.max_eigenvalue().abs());
        if scale <= 1e-14 {
            return Ok(Decision {
                w: raw.clone(),
                raw,
                eig,
                case: DecisionCase::Degenerate,
            });
        }
        let w = raw.unscale(scale);
        let eig = Eigensystem {
            eigenvalues: eig.eigenvalues.unscale(scale),
            eigenvectors: eig.eigenvectors,
        };
        let tol = c.policy().psd_tol;
        let lo = eig.min_eigenvalue();
        let case = if lo > tol {
            DecisionCase::Unreachable
        } else if lo >= -tol {
            let d = w.nrows();
            let mut projector = ComplexMatrix::zeros(d, d);
            for (j, &lam) in eig.eigenvalues.iter().enumerate() {
                if lam <= tol {
                    let v = eig.eigenvectors.column(j);
                    projector += &v * v.adjoint();
                }
            }
            DecisionCase::Face { projector }
        } else {
            DecisionCase::Interior
        };
        Ok(Decision {
            raw,
            w,
            eig,
            case,
        })
    }

    /// `p_l - p_k` on `rho`.
    pub fn gap(&self, rho: &ComplexMatrix) -> f64 {
        trace_product(&self.raw, rho).re
    }

    /// Mixes `sigma` with the most negative eigenvector of `W` until
    /// `tr(W sigma) <= 0`, so solver round-off never leaves a witness on the
    /// wrong side of the boundary.
    pub fn push_across(&self, sigma: &ComplexMatrix) -> ComplexMatrix {
        const TARGET: f64 = -1e-12;
        let g = trace_product(&self.w, sigma).re;
        let lo = self.eig.min_eigenvalue();
        if g <= TARGET || lo >= TARGET || matches!(self.case, DecisionCase::Degenerate) {
            return sigma.clone();
        }
        let v = self.eig.eigenvectors.column(0);
        let t = ((g - TARGET) / (g - lo)).clamp(0.0, 1.0);
        sigma * crate::qstate::C64::from(1.0 - t) + (&v * v.adjoint()) * crate::qstate::C64::from(t)
    }
}

/// Wall-clock stopwatch; reads zero where no clock is available.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Measurement;
    use crate::qchannel::KrausChannel;
    use crate::qstate::{PureState, C64};

    fn z_classifier() -> Classifier {
        let p0 = ComplexMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let p1 = ComplexMatrix::identity(2, 2) - &p0;
        Classifier::new(
            KrausChannel::identity(2),
            Measurement::new(vec![p0, p1]).unwrap(),
            vec!["0".into(), "1".into()],
        )
        .unwrap()
    }

    #[test]
    fn lemma_examples() {
        let d = |p: &[f64]| ClassDistribution {
            probabilities: p.to_vec(),
        };
        assert!(lemma_certifies(&d(&[1.0, 0.0]), 0.4));
        assert!(!lemma_certifies(&d(&[0.5, 0.5]), 1e-9));
        assert!(lemma_certifies(&d(&[0.9, 0.1]), 0.001));
    }

    #[test]
    fn lemma_on_classifier() {
        let c = z_classifier();
        let rho = PureState::basis(2, 0).unwrap().to_density();
        assert!(lemma_robust_bound(&c, &rho, 0.4).unwrap());
        assert!(lemma_robust_bound(&c, &rho, 0.0).is_err());
        assert!(lemma_robust_bound(&c, &rho, 1.0).is_err());
    }

    #[test]
    fn closed_form_endpoints() {
        assert!((lemma_closed_form(0.5, 0.5) - 1.0).abs() < 1e-15);
        assert!((lemma_closed_form(1.0, 0.0) - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
