//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use qrv::classifier::Classifier;
use qrv::qstate::{hermitian_eigensystem, hermitian_part, matrix_sqrt_psd, DensityMatrix};
use qrv::verifier::Adversarial;

/// `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2` through two eigendecompositions.
pub fn eig_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let s = matrix_sqrt_psd(rho.matrix()).unwrap();
    let inner = hermitian_part(&(&s * sigma.matrix() * &s));
    let eig = hermitian_eigensystem(&inner).unwrap();
    let root: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    root * root
}

/// Half the sum of absolute eigenvalues of `rho - sigma`.
pub fn eig_trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let diff = hermitian_part(&(rho.matrix() - sigma.matrix()));
    let eig = hermitian_eigensystem(&diff).unwrap();
    0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

/// Checks the three conditions an adversarial example must meet: the source
/// carries label `l`, the witness loses or ties `l`, and it lies within
/// `eps + slack` of the source.
pub fn adversarial_valid(
    c: &Classifier,
    rho: &DensityMatrix,
    l: usize,
    adv: &Adversarial,
    eps: f64,
    slack: f64,
) -> Result<(), String> {
    let src = c.classify(rho).map_err(|e| e.to_string())?;
    if src.label != l {
        return Err(format!("source classified as {}, expected {l}", src.label));
    }
    let cls = c.classify(&adv.sigma).map_err(|e| e.to_string())?;
    if !cls.changes_or_ties(l) {
        return Err(format!(
            "witness still strictly labelled {l} (p = {:?})",
            cls.distribution.probabilities
        ));
    }
    let d = 1.0 - eig_fidelity(rho, &adv.sigma);
    if d > eps + slack {
        return Err(format!("witness distance {d:.3e} exceeds epsilon {eps:.3e}"));
    }
    Ok(())
}
