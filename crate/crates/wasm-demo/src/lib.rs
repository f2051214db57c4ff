//! Browser front end for the qubit case study.
//!
//! Each export takes plain numbers and returns a JSON string; the page in
//! `www/` renders it. The same functions are callable natively for tests.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qrv::casestudy::{generate_qubit_study, ry_classifier, QubitStudy};
use qrv::classifier::DataState;
use qrv::oracle::bloch_state;
use qrv::qstate::{fidelity, pauli, trace_distance, DensityMatrix};
use qrv::sdp::{sqrt_fidelity_sdp, FidelityForm, SigmaSpec};
use qrv::verifier::{compute_optimal_bound, lemma_delta_lower_bound, verify_dataset, VerifyOptions};
use qrv::policy::SolverOptions;

#[derive(Debug, Serialize)]
pub struct Sample {
    /// Polar angle in the X-Z plane.
    pub phi: f64,
    pub label: usize,
    pub margin: f64,
    pub delta: Option<f64>,
    pub robust: bool,
}

#[derive(Debug, Serialize)]
pub struct CaseStudyView {
    pub epsilon: f64,
    pub boundary_phi: f64,
    pub robust_accuracy: f64,
    pub under_approx_robust_accuracy: f64,
    pub not_robust: usize,
    pub sdp_solves: usize,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Serialize)]
pub struct BoundView {
    pub bloch: [f64; 3],
    pub probabilities: Vec<f64>,
    pub label: usize,
    pub tie: bool,
    pub margin: f64,
    /// `m^2 / 2`, the radius certified without optimization.
    pub lemma_radius: f64,
    /// `None` when no state changes the label.
    pub delta: Option<f64>,
    pub nearest_adversarial: Option<[f64; 3]>,
}

#[derive(Debug, Serialize)]
pub struct FidelityView {
    pub fidelity: f64,
    pub sdp_fidelity: f64,
    pub trace_distance: f64,
    /// `1 - sqrt F <= T <= sqrt(1 - F)`.
    pub lower: f64,
    pub upper: f64,
}

fn polar_angle(state: &DataState) -> f64 {
    let r = pauli::bloch_vector(state.to_density().matrix());
    r[0].atan2(r[2])
}

fn qubit(r: [f64; 3]) -> Result<DensityMatrix, String> {
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() || norm > 1.0 + 1e-12 {
        return Err(format!("Bloch vector must lie in the unit ball (|r| = {norm:.4})"));
    }
    let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
    bloch_state([r[0] * scale, r[1] * scale, r[2] * scale]).map_err(|e| e.to_string())
}

/// Generates the two-anchor dataset and verifies it at `epsilon`.
pub fn case_study(theta_star: f64, noise_std: f64, n: usize, seed: u64, epsilon: f64) -> Result<CaseStudyView, String> {
    let study = generate_qubit_study(&QubitStudy {
        theta_star,
        noise_std,
        n_train: n,
        n_val: 0,
        seed,
        ..QubitStudy::default()
    })
    .map_err(|e| e.to_string())?;
    let report = verify_dataset(&study.classifier, &study.train, epsilon, &VerifyOptions::default())
        .map_err(|e| e.to_string())?;
    let samples = study
        .train
        .entries()
        .iter()
        .zip(&report.verdicts)
        .map(|(e, v)| Sample {
            phi: polar_angle(&e.state),
            label: e.label,
            margin: v.margin,
            delta: v.optimal_robust_bound,
            robust: v.robust_at_epsilon,
        })
        .collect();
    Ok(CaseStudyView {
        epsilon,
        boundary_phi: std::f64::consts::FRAC_PI_2 - theta_star,
        robust_accuracy: report.robust_accuracy,
        under_approx_robust_accuracy: report.under_approx_robust_accuracy,
        not_robust: report.counts.not_robust,
        sdp_solves: report.solver.sdp_solves,
        samples,
    })
}

/// Robust radius of one Bloch-ball state under the `R_y(theta_star)` classifier.
pub fn state_bound(r: [f64; 3], theta_star: f64) -> Result<BoundView, String> {
    let c = ry_classifier(theta_star);
    let rho = qubit(r)?;
    let cls = c.classify(&rho).map_err(|e| e.to_string())?;
    let b = compute_optimal_bound(&c, &rho, cls.label).map_err(|e| e.to_string())?;
    Ok(BoundView {
        bloch: pauli::bloch_vector(rho.matrix()),
        lemma_radius: lemma_delta_lower_bound(&cls.distribution),
        probabilities: cls.distribution.probabilities,
        label: cls.label,
        tie: cls.tie,
        margin: cls.margin,
        delta: b.delta,
        nearest_adversarial: b.sigma_star.map(|s| pauli::bloch_vector(s.matrix())),
    })
}

/// Fidelity of two Bloch-ball states by eigendecomposition and by SDP.
pub fn fidelity_pair(r1: [f64; 3], r2: [f64; 3]) -> Result<FidelityView, String> {
    let (rho, sigma) = (qubit(r1)?, qubit(r2)?);
    let f = fidelity(&rho, &sigma).map_err(|e| e.to_string())?;
    let t = trace_distance(&rho, &sigma).map_err(|e| e.to_string())?;
    let sdp = sqrt_fidelity_sdp(&rho, &SigmaSpec::Fixed(sigma.matrix().clone()), FidelityForm::Scaled)
        .map_err(|e| e.to_string())?;
    let sol = sdp.solve(&SolverOptions::default()).map_err(|e| e.to_string())?;
    if !sol.is_optimal() {
        return Err(format!("fidelity SDP ended with {:?}", sol.status));
    }
    Ok(FidelityView {
        fidelity: f,
        sdp_fidelity: sdp.sqrt_fidelity(&sol).powi(2),
        trace_distance: t,
        lower: 1.0 - f.sqrt(),
        upper: (1.0 - f).sqrt(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn qubit_case_study(theta_star: f64, noise_std: f64, n: usize, seed: u32, epsilon: f64) -> Result<String, JsValue> {
    to_js(case_study(theta_star, noise_std, n, u64::from(seed), epsilon))
}

#[wasm_bindgen]
pub fn bloch_state_bound(x: f64, y: f64, z: f64, theta_star: f64) -> Result<String, JsValue> {
    to_js(state_bound([x, y, z], theta_star))
}

#[wasm_bindgen]
pub fn fidelity_explorer(x1: f64, y1: f64, z1: f64, x2: f64, y2: f64, z2: f64) -> Result<String, JsValue> {
    to_js(fidelity_pair([x1, y1, z1], [x2, y2, z2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_study_matches_library_run() {
        let v = case_study(0.4835, 0.15, 40, 3, 0.002).unwrap();
        assert_eq!(v.samples.len(), 40);
        assert!(v.under_approx_robust_accuracy <= v.robust_accuracy);
        for s in &v.samples {
            // Every sample sits on its own side of the decision boundary.
            assert_eq!(s.phi < v.boundary_phi, s.label == 0);
        }
    }

    #[test]
    fn pole_state_bound() {
        let v = state_bound([0.0, 0.0, 1.0], 0.0).unwrap();
        assert_eq!(v.label, 0);
        assert!((v.delta.unwrap() - 0.5).abs() < 1e-6);
        assert!((v.lemma_radius - 0.5).abs() < 1e-12);
        assert!(state_bound([0.0, 0.0, 1.5], 0.0).is_err());
    }

    #[test]
    fn fidelity_routes_agree() {
        let v = fidelity_pair([0.3, -0.2, 0.5], [0.0, 0.6, -0.1]).unwrap();
        assert!((v.fidelity - v.sdp_fidelity).abs() < 1e-6);
        assert!(v.lower <= v.trace_distance + 1e-9 && v.trace_distance <= v.upper + 1e-9);
        let pure = fidelity_pair([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).unwrap();
        assert!((pure.sdp_fidelity - 0.5).abs() < 1e-6);
    }

    #[test]
    fn exports_return_json() {
        let s = bloch_state_bound(0.0, 0.0, 1.0, 0.4835).unwrap();
        assert!(s.starts_with('{') && s.contains("\"delta\""));
    }
}
