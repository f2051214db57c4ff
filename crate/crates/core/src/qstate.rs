//! Quantum states as dense complex matrices, and the distances between them.
//!
//! A mixed state is a [`DensityMatrix`]: Hermitian, positive semidefinite and
//! of unit trace. Pure states are unit vectors. The distance used throughout
//! the verifier is `D(rho, sigma) = 1 - F(rho, sigma)` with
//! `F = [tr sqrt(sqrt(rho) sigma sqrt(rho))]^2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |M - M^dagger|`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(M + M^dagger) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(Error::invalid(format!(
            "expected a square matrix, found {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().copied().sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl Eigensystem {
    /// `V diag(f(lambda)) V^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for k in 0..n {
            let w = f(self.eigenvalues[k]);
            scaled.column_mut(k).scale_mut(w);
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
pub fn hermitian_eigensystem(m: &ComplexMatrix) -> Result<Eigensystem> {
    hermitian_eigensystem_with(m, &NumericPolicy::default())
}

pub fn hermitian_eigensystem_with(m: &ComplexMatrix, policy: &NumericPolicy) -> Result<Eigensystem> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let deviation = hermitian_deviation(m);
    let scale = max_abs(m).max(1.0);
    if deviation > policy.hermitian_tol * scale {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(eigensystem_unchecked(&hermitian_part(m)))
}

pub(crate) fn eigensystem_unchecked(m: &ComplexMatrix) -> Eigensystem {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Eigensystem {
        eigenvalues,
        eigenvectors,
    }
}

/// Principal square root of a Hermitian PSD matrix.
///
/// Eigenvalues in `[-psd_reject, 0)` are clamped to zero; anything more
/// negative is refused.
pub fn matrix_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    matrix_sqrt_psd_with(m, &NumericPolicy::default())
}

pub fn matrix_sqrt_psd_with(m: &ComplexMatrix, policy: &NumericPolicy) -> Result<ComplexMatrix> {
    let eig = hermitian_eigensystem_with(m, policy)?;
    let min = eig.min_eigenvalue();
    if min < -policy.psd_reject {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    Ok(hermitian_part(&eig.reconstruct_with(|l| l.max(0.0).sqrt())))
}

/// Kronecker product.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: ComplexVector,
}

impl PureState {
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        Self::with_policy(amplitudes, &NumericPolicy::default())
    }

    pub fn with_policy(amplitudes: ComplexVector, policy: &NumericPolicy) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("empty state vector"));
        }
        if amplitudes.len() > policy.max_dim {
            return Err(Error::DimensionCap {
                dim: amplitudes.len(),
                cap: policy.max_dim,
            });
        }
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let deviation = (amplitudes.norm() - 1.0).abs();
        if deviation > policy.norm_tol {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(PureState { amplitudes })
    }

    /// Rescales an arbitrary non-zero vector to unit norm.
    pub fn normalized(amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Self::new(amplitudes.unscale(norm))
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range for dim {dim}")));
        }
        let mut v = ComplexVector::zeros(dim);
        v[index] = ONE;
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix {
            matrix: hermitian_part(&m),
        }
    }
}

/// `|psi><psi|`, refusing vectors whose norm is off by more than `norm_reject`.
pub fn pure_to_density(psi: &ComplexVector) -> Result<DensityMatrix> {
    let policy = NumericPolicy::default();
    let deviation = (psi.norm() - 1.0).abs();
    if !deviation.is_finite() || deviation > policy.norm_reject {
        return Err(Error::NotNormalized { deviation });
    }
    let m = psi * psi.adjoint();
    Ok(DensityMatrix {
        matrix: hermitian_part(&m),
    })
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_policy(matrix, &NumericPolicy::default())
    }

    pub fn with_policy(matrix: ComplexMatrix, policy: &NumericPolicy) -> Result<Self> {
        let n = ensure_square(&matrix)?;
        if n == 0 {
            return Err(Error::invalid("empty density matrix"));
        }
        if n > policy.max_dim {
            return Err(Error::DimensionCap {
                dim: n,
                cap: policy.max_dim,
            });
        }
        ensure_finite(&matrix)?;
        let deviation = hermitian_deviation(&matrix);
        if deviation > policy.hermitian_tol {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = trace(&matrix);
        let trace_dev = (tr - ONE).norm();
        if trace_dev > policy.trace_tol {
            return Err(Error::NotUnitTrace {
                deviation: trace_dev,
            });
        }
        let matrix = hermitian_part(&matrix);
        let min = eigensystem_unchecked(&matrix).min_eigenvalue();
        if min < -policy.psd_tol {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
        Ok(DensityMatrix { matrix })
    }

    /// Nearest density matrix to a Hermitian-ish matrix: Hermitian part,
    /// negative eigenvalues clamped, trace renormalized. Used on solver output.
    pub fn project(matrix: &ComplexMatrix) -> Result<Self> {
        ensure_square(matrix)?;
        ensure_finite(matrix)?;
        let eig = eigensystem_unchecked(&hermitian_part(matrix));
        let clamped = eig.reconstruct_with(|l| l.max(0.0));
        let tr = trace(&clamped).re;
        if !(tr > 0.0) {
            return Err(Error::invalid("cannot project a matrix with no positive spectrum"));
        }
        Ok(DensityMatrix {
            matrix: hermitian_part(&clamped.unscale(tr)),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: ComplexMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        DensityMatrix { matrix }
    }

    pub fn sqrt(&self) -> ComplexMatrix {
        hermitian_part(&eigensystem_unchecked(&self.matrix).reconstruct_with(|l| l.max(0.0).sqrt()))
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(psi: &PureState) -> Self {
        psi.to_density()
    }
}

fn check_dims(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    Ok(())
}

/// Uhlmann fidelity `[tr sqrt(sqrt(rho) sigma sqrt(rho))]^2`, clamped to `[0, 1]`.
///
/// The trace of the root equals the nuclear norm of `sqrt(rho) sqrt(sigma)`,
/// which is what is evaluated: singular values of a low-rank product stay
/// accurate where eigenvalues of `sqrt(rho) sigma sqrt(rho)` would need a
/// square root of rounding noise.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let product = rho.sqrt() * sigma.sqrt();
    let nuclear: f64 = product.singular_values().iter().sum();
    Ok((nuclear * nuclear).clamp(0.0, 1.0))
}

/// `D(rho, sigma) = 1 - F(rho, sigma)`.
pub fn infidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(1.0 - fidelity(rho, sigma)?)
}

/// `1/2 ||rho - sigma||_tr`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let diff = hermitian_part(&(rho.matrix() - sigma.matrix()));
    let eig = eigensystem_unchecked(&diff);
    let t: f64 = 0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>();
    Ok(t.clamp(0.0, 1.0))
}

/// Pauli matrices, used by constructors, tests and the qubit oracle.
pub mod pauli {
    use super::*;

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    /// `R_y(theta) = exp(-i theta Y / 2)`.
    pub fn ry(theta: f64) -> ComplexMatrix {
        let (s, c) = (theta / 2.0).sin_cos();
        ComplexMatrix::from_row_slice(
            2,
            2,
            &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)],
        )
    }

    /// `(I + r . sigma) / 2` for a Bloch vector with `|r| <= 1`.
    pub fn bloch_density(r: [f64; 3]) -> ComplexMatrix {
        let [x, y, z] = r;
        ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new((1.0 + z) / 2.0, 0.0),
                C64::new(x / 2.0, -y / 2.0),
                C64::new(x / 2.0, y / 2.0),
                C64::new((1.0 - z) / 2.0, 0.0),
            ],
        )
    }

    /// Bloch vector of a qubit density matrix.
    pub fn bloch_vector(m: &ComplexMatrix) -> [f64; 3] {
        [
            2.0 * m[(1, 0)].re,
            2.0 * m[(1, 0)].im,
            (m[(0, 0)] - m[(1, 1)]).re,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn diag(values: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
            values.len(),
            values.iter().map(|&v| c(v)),
        ))
    }

    #[test]
    fn basis_projector() {
        let rho = pure_to_density(&ComplexVector::from_vec(vec![ONE, ZERO])).unwrap();
        assert_eq!(rho.matrix(), &diag(&[1.0, 0.0]));
    }

    #[test]
    fn plus_state_projector() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rho = pure_to_density(&ComplexVector::from_vec(vec![c(h), c(h)])).unwrap();
        for z in rho.matrix().iter() {
            assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn pure_to_density_rejects_unnormalized() {
        let v = ComplexVector::from_vec(vec![c(1.0), c(0.01)]);
        assert!(matches!(pure_to_density(&v), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn pure_projector_spectrum_in_dim_4() {
        let v = ComplexVector::from_vec(vec![
            C64::new(0.1, 0.3),
            C64::new(-0.5, 0.2),
            C64::new(0.4, -0.1),
            C64::new(0.2, 0.6),
        ]);
        let v = v.unscale(v.norm());
        let rho = pure_to_density(&v).unwrap();
        assert_abs_diff_eq!(trace(rho.matrix()).re, 1.0, epsilon = 1e-12);
        let eig = hermitian_eigensystem(rho.matrix()).unwrap();
        for (k, expected) in [0.0, 0.0, 0.0, 1.0].iter().enumerate() {
            assert_abs_diff_eq!(eig.eigenvalues[k], *expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigensystem_examples() {
        let eig = hermitian_eigensystem(&ComplexMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-14);

        let eig = hermitian_eigensystem(&diag(&[0.3, 0.7])).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvalues[1], 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvectors[(0, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvectors[(1, 1)].norm(), 1.0, epsilon = 1e-14);

        let eig = hermitian_eigensystem(&pauli::x()).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigensystem_rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(hermitian_eigensystem(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_examples() {
        let r = matrix_sqrt_psd(&diag(&[4.0, 9.0])).unwrap();
        assert!(max_abs(&(r - diag(&[2.0, 3.0]))) < 1e-12);
        let r = matrix_sqrt_psd(&ComplexMatrix::identity(3, 3)).unwrap();
        assert!(max_abs(&(r - ComplexMatrix::identity(3, 3))) < 1e-12);
        let p = ComplexMatrix::from_element(2, 2, c(0.5));
        let r = matrix_sqrt_psd(&p).unwrap();
        assert!(max_abs(&(r - p)) < 1e-12);
    }

    #[test]
    fn sqrt_clamps_small_negative_and_rejects_large() {
        let r = matrix_sqrt_psd(&diag(&[1.0, -1e-9])).unwrap();
        assert!(max_abs(&(r - diag(&[1.0, 0.0]))) < 1e-12);
        assert!(matches!(
            matrix_sqrt_psd(&diag(&[1.0, -1e-3])),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn fidelity_examples() {
        let zero = PureState::basis(2, 0).unwrap().to_density();
        let one = PureState::basis(2, 1).unwrap().to_density();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(fidelity(&zero, &zero).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&zero, &one).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&zero, &mixed).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&mixed, &mixed).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(2);
        let b = DensityMatrix::maximally_mixed(4);
        assert!(matches!(fidelity(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(trace_distance(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn trace_distance_examples() {
        let zero = PureState::basis(2, 0).unwrap().to_density();
        let one = PureState::basis(2, 1).unwrap().to_density();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(trace_distance(&zero, &zero).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_distance(&zero, &one).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_distance(&zero, &mixed).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn tensor_examples() {
        let i2 = ComplexMatrix::identity(2, 2);
        assert_eq!(tensor_product(&i2, &i2), ComplexMatrix::identity(4, 4));
        assert_eq!(
            tensor_product(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])),
            diag(&[0.0, 1.0, 0.0, 0.0])
        );
        let xx = tensor_product(&pauli::x(), &pauli::x());
        let ket00 = ComplexVector::from_vec(vec![ONE, ZERO, ZERO, ZERO]);
        let out = xx * ket00;
        assert_eq!(out, ComplexVector::from_vec(vec![ZERO, ZERO, ZERO, ONE]));
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(diag(&[0.5, 0.5])).is_ok());
        assert!(matches!(
            DensityMatrix::new(diag(&[0.6, 0.5])),
            Err(Error::NotUnitTrace { .. })
        ));
        assert!(matches!(
            DensityMatrix::new(diag(&[1.5, -0.5])),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.2), c(0.5)]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn bloch_round_trip() {
        let r = [0.3, -0.2, 0.5];
        let m = pauli::bloch_density(r);
        let back = pauli::bloch_vector(&m);
        for k in 0..3 {
            assert_abs_diff_eq!(back[k], r[k], epsilon = 1e-15);
        }
    }
}
