//! Dataset-level verification.

use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, DataState, LabeledDataset};
use crate::error::{Error, Result};
use crate::qstate::{fidelity, DensityMatrix};
use crate::sdp::SdpStatus;

use super::{check_epsilon, compute_optimal_bound, lemma_certifies, pure_state_optimal_bound, Adversarial, Stopwatch};

/// Which perturbations count as adversarial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryMode {
    /// Any density matrix.
    #[default]
    Mixed,
    /// Pure states, for pure dataset entries; density entries fall back to
    /// mixed.
    Pure,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    pub mode: AdversaryMode,
    /// Worker threads; `0` uses the global pool.
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Robust,
    NotRobust,
    /// Predicted label differs from the stored one; no robustness verdict.
    Misclassified,
    /// A solver failed; excluded from the robust accuracy.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVerdict {
    pub state_index: usize,
    pub label: usize,
    pub predicted_label: usize,
    pub correctly_classified: bool,
    pub tie: bool,
    /// `sqrt(p1) - sqrt(p2)`.
    pub margin: f64,
    pub lemma_bound_certifies: bool,
    /// Optimal robust radius, when computed and finite.
    pub optimal_robust_bound: Option<f64>,
    /// The radius was computed and is `+inf`.
    pub unbounded: bool,
    pub robust_at_epsilon: bool,
    pub status: VerdictStatus,
    pub adversarial: Option<Adversarial>,
    pub sdp_solves: usize,
    pub sdp_iterations: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub misclassified: usize,
    pub lemma_certified: usize,
    /// Entries sent to the exact check.
    pub solved: usize,
    pub not_robust: usize,
    pub inconclusive: usize,
    /// Entries the lemma could not certify, misclassified ones included (the
    /// `r` of the under-approximation).
    pub lemma_inconclusive: usize,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    /// Classification plus lemma test over the whole dataset.
    pub under_approximation: f64,
    /// Classification, lemma filter and exact solves.
    pub exact: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverStats {
    pub sdp_solves: usize,
    pub sdp_iterations: usize,
    pub qcqp_runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub epsilon: f64,
    pub mode: AdversaryMode,
    pub verdicts: Vec<StateVerdict>,
    /// `1 - (|R| + misclassified) / |T|`, with inconclusive entries removed
    /// from `T`.
    pub robust_accuracy: f64,
    /// `1 - r / |T|`.
    pub under_approx_robust_accuracy: f64,
    pub counts: Counts,
    pub timings: Timings,
    pub solver: SolverStats,
}

impl VerificationReport {
    /// `R`: adversarial examples with their source indices.
    pub fn adversarial_set(&self) -> Vec<(&Adversarial, usize)> {
        self.verdicts
            .iter()
            .filter_map(|v| v.adversarial.as_ref().map(|a| (a, v.state_index)))
            .collect()
    }
}

/// Under-approximated robust accuracy: `1 - r / |T|` where `r` counts entries
/// that are misclassified or whose margin does not exceed `sqrt(2 eps)`. No
/// optimization is performed.
pub fn under_robust_accuracy(c: &Classifier, d: &LabeledDataset, eps: f64) -> Result<f64> {
    check_epsilon(eps, false)?;
    if d.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    d.check_against(c)?;
    let mut r = 0usize;
    for (i, e) in d.entries().iter().enumerate() {
        let cls = c.classify(&e.state.to_density()).map_err(|err| err.at_state(i))?;
        if cls.label != e.label || !lemma_certifies(&cls.distribution, eps) {
            r += 1;
        }
    }
    Ok(1.0 - r as f64 / d.len() as f64)
}

fn verify_one(c: &Classifier, state: &DataState, label: usize, index: usize, eps: f64, mode: AdversaryMode) -> Result<StateVerdict> {
    let rho = state.to_density();
    let cls = c.classify(&rho)?;
    let correctly_classified = cls.label == label;
    let lemma = correctly_classified && lemma_certifies(&cls.distribution, eps);
    let mut v = StateVerdict {
        state_index: index,
        label,
        predicted_label: cls.label,
        correctly_classified,
        tie: cls.tie,
        margin: cls.margin,
        lemma_bound_certifies: lemma,
        optimal_robust_bound: None,
        unbounded: false,
        robust_at_epsilon: false,
        status: VerdictStatus::Misclassified,
        adversarial: None,
        sdp_solves: 0,
        sdp_iterations: 0,
        note: None,
    };
    if !correctly_classified {
        return Ok(v);
    }
    if lemma {
        v.robust_at_epsilon = true;
        v.status = VerdictStatus::Robust;
        return Ok(v);
    }
    let (delta, witness, class) = match (mode, state.as_pure()) {
        (AdversaryMode::Pure, Some(psi)) => {
            let b = pure_state_optimal_bound(c, psi, label, &c.policy().qcqp)?;
            if b.inconclusive() {
                v.note = Some("no local solve converged; radius is a feasible upper bound only".into());
            }
            let sigma = b.phi_star.as_ref().map(|p| p.to_density());
            (b.delta, sigma, b.argmin_class)
        }
        _ => {
            let b = compute_optimal_bound(c, &rho, label)?;
            v.sdp_solves = b.sdp_solves();
            v.sdp_iterations = b.sdp_iterations();
            if b.unsolved() > 0 {
                let failed: Vec<String> = b
                    .per_class
                    .iter()
                    .filter(|p| p.status.is_some_and(|s| s != SdpStatus::Optimal))
                    .map(|p| format!("class {}: {:?}", p.class, p.status.unwrap()))
                    .collect();
                v.status = VerdictStatus::Inconclusive;
                v.note = Some(failed.join("; "));
                return Ok(v);
            }
            (b.delta, b.sigma_star, b.argmin_class)
        }
    };
    v.optimal_robust_bound = delta;
    v.unbounded = delta.is_none();
    v.robust_at_epsilon = delta.is_none_or(|d| eps <= d);
    v.status = if v.robust_at_epsilon {
        VerdictStatus::Robust
    } else {
        VerdictStatus::NotRobust
    };
    if !v.robust_at_epsilon {
        let sigma: DensityMatrix = witness.expect("finite radius comes with a state");
        let distance = 1.0 - fidelity(&rho, &sigma)?;
        v.adversarial = Some(Adversarial {
            sigma,
            target_class: class.expect("finite radius comes with a class"),
            distance,
        });
    }
    Ok(v)
}

fn run_all<F>(n: usize, workers: usize, f: F) -> Vec<StateVerdict>
where
    F: Fn(usize) -> StateVerdict + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let work = || (0..n).into_par_iter().map(&f).collect::<Vec<_>>();
        if workers == 0 {
            return work();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(work),
            Err(e) => {
                log::warn!("could not build a {workers}-thread pool ({e}); using the global pool");
                work()
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        (0..n).map(f).collect()
    }
}

/// Robust accuracy with the lemma filter in front of exact solves.
///
/// Misclassified entries get no verdict and count as non-robust; an entry
/// whose solve fails is marked inconclusive and leaves the denominator.
pub fn verify_dataset(c: &Classifier, d: &LabeledDataset, eps: f64, opts: &VerifyOptions) -> Result<VerificationReport> {
    check_epsilon(eps, false)?;
    if d.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    d.check_against(c)?;

    let clock = Stopwatch::start();
    let ura = under_robust_accuracy(c, d, eps)?;
    let under_time = clock.seconds();

    let clock = Stopwatch::start();
    let entries = d.entries();
    let verdicts = run_all(entries.len(), opts.workers, |i| {
        let e = &entries[i];
        let label = e.label;
        verify_one(c, &e.state, label, i, eps, opts.mode).unwrap_or_else(|err| {
            log::warn!("state {i}: {err}");
            let cls = c.classify(&e.state.to_density()).ok();
            StateVerdict {
                state_index: i,
                label,
                predicted_label: cls.as_ref().map_or(label, |c| c.label),
                correctly_classified: cls.as_ref().is_some_and(|c| c.label == label),
                tie: cls.as_ref().is_some_and(|c| c.tie),
                margin: cls.as_ref().map_or(f64::NAN, |c| c.margin),
                lemma_bound_certifies: false,
                optimal_robust_bound: None,
                unbounded: false,
                robust_at_epsilon: false,
                status: VerdictStatus::Inconclusive,
                adversarial: None,
                sdp_solves: 0,
                sdp_iterations: 0,
                note: Some(err.to_string()),
            }
        })
    });
    let exact_time = clock.seconds();

    let mut counts = Counts {
        total: entries.len(),
        ..Counts::default()
    };
    let mut solver = SolverStats::default();
    for v in &verdicts {
        match v.status {
            VerdictStatus::Misclassified => counts.misclassified += 1,
            VerdictStatus::Inconclusive => counts.inconclusive += 1,
            VerdictStatus::NotRobust => counts.not_robust += 1,
            VerdictStatus::Robust => {}
        }
        if v.lemma_bound_certifies {
            counts.lemma_certified += 1;
        } else if v.correctly_classified {
            counts.solved += 1;
            if opts.mode == AdversaryMode::Pure && entries[v.state_index].state.as_pure().is_some() {
                solver.qcqp_runs += 1;
            }
        }
        solver.sdp_solves += v.sdp_solves;
        solver.sdp_iterations += v.sdp_iterations;
    }
    counts.lemma_inconclusive = verdicts.iter().filter(|v| !v.lemma_bound_certifies).count();
    let adversarial = verdicts.iter().filter(|v| v.adversarial.is_some()).count();
    let denominator = (entries.len() - counts.inconclusive).max(1);
    let robust_accuracy = 1.0 - (adversarial + counts.misclassified) as f64 / denominator as f64;
    Ok(VerificationReport {
        epsilon: eps,
        mode: opts.mode,
        verdicts,
        robust_accuracy,
        under_approx_robust_accuracy: ura,
        counts,
        timings: Timings {
            under_approximation: under_time,
            exact: exact_time,
        },
        solver,
    })
}
