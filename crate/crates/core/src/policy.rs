//! Centralized numeric tolerances.
//!
//! Every comparison against a threshold in the crate reads from a
//! [`NumericPolicy`]. The defaults are the documented contract values; any
//! field may be overridden from a JSON policy file where absent fields keep
//! their defaults.

use serde::{Deserialize, Serialize};

pub const MAX_DIM_ENV: &str = "QRV_MAX_DIM";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericPolicy {
    /// Max-norm bound on `M - M^dagger` for Hermitian inputs.
    pub hermitian_tol: f64,
    /// Smallest admissible eigenvalue of a density matrix.
    pub psd_tol: f64,
    /// Eigenvalues below `-psd_reject` are rejected by square roots.
    pub psd_reject: f64,
    pub trace_tol: f64,
    /// Norm tolerance for [`crate::qstate::PureState`].
    pub norm_tol: f64,
    /// Norm deviation beyond which a vector is refused as a pure state.
    pub norm_reject: f64,
    /// Bound on `sum E^dagger E - I` for channels and measurements.
    pub completeness_tol: f64,
    pub unitary_tol: f64,
    /// Two class probabilities closer than this are a tie.
    pub tie_tol: f64,
    pub max_dim: usize,
    pub sdp: SolverOptions,
    pub qcqp: QcqpOptions,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            hermitian_tol: 1e-9,
            psd_tol: 1e-8,
            psd_reject: 1e-6,
            trace_tol: 1e-9,
            norm_tol: 1e-9,
            norm_reject: 1e-6,
            completeness_tol: 1e-7,
            unitary_tol: 1e-7,
            tie_tol: 1e-7,
            max_dim: 256,
            sdp: SolverOptions::default(),
            qcqp: QcqpOptions::default(),
        }
    }
}

impl NumericPolicy {
    /// Defaults with `max_dim` taken from `QRV_MAX_DIM` when set.
    pub fn from_env() -> Self {
        let mut policy = NumericPolicy::default();
        if let Some(cap) = std::env::var(MAX_DIM_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            policy.max_dim = cap;
        }
        policy
    }
}

/// Interior-point solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative duality gap `|p - d| / (1 + |p| + |d|)` at termination.
    pub gap_tol: f64,
    /// Relative primal and dual residual at termination.
    pub feas_tol: f64,
    pub max_iterations: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Iterate norm beyond which the run is treated as diverging.
    pub divergence_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-7,
            feas_tol: 1e-7,
            max_iterations: 200,
            step_fraction: 0.98,
            divergence_bound: 1e10,
        }
    }
}

/// Settings for the multi-start pure-state search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QcqpOptions {
    pub starts: usize,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Riemannian gradient norm at which an inner solve stops.
    pub gradient_tol: f64,
    pub constraint_tol: f64,
    pub seed: u64,
}

impl Default for QcqpOptions {
    fn default() -> Self {
        QcqpOptions {
            starts: 32,
            outer_iterations: 40,
            inner_iterations: 400,
            gradient_tol: 1e-11,
            constraint_tol: 1e-10,
            seed: 0x5eed,
        }
    }
}
