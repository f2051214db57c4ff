//! Completely positive trace-preserving maps in Kraus form.

use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::qstate::{
    ensure_finite, hermitian_deviation, hermitian_part, max_abs, pauli, ComplexMatrix,
    DensityMatrix,
};

/// Result of checking a Kraus set for trace preservation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDiagnostics {
    /// `max |sum_k E_k^dagger E_k - I|`.
    pub deviation: f64,
    pub trace_preserving: bool,
    /// Always true for a Kraus representation; recorded, not tested.
    pub completely_positive: bool,
}

/// Measures `sum_k E_k^dagger E_k - I` for an arbitrary operator list.
pub fn validate(kraus: &[ComplexMatrix]) -> ChannelDiagnostics {
    validate_with(kraus, &NumericPolicy::default())
}

pub fn validate_with(kraus: &[ComplexMatrix], policy: &NumericPolicy) -> ChannelDiagnostics {
    let deviation = match completeness_deviation(kraus) {
        Some(d) => d,
        None => f64::INFINITY,
    };
    ChannelDiagnostics {
        deviation,
        trace_preserving: deviation <= policy.completeness_tol,
        completely_positive: true,
    }
}

/// `max |sum_k A_k^dagger A_k - I|`, or `None` for an empty or ragged list.
pub(crate) fn completeness_deviation(ops: &[ComplexMatrix]) -> Option<f64> {
    let first = ops.first()?;
    let dim_in = first.ncols();
    let dim_out = first.nrows();
    if ops.iter().any(|e| e.ncols() != dim_in || e.nrows() != dim_out) {
        return None;
    }
    let mut sum = ComplexMatrix::zeros(dim_in, dim_in);
    for e in ops {
        sum += e.adjoint() * e;
    }
    Some(max_abs(&(sum - ComplexMatrix::identity(dim_in, dim_in))))
}

/// A channel `rho -> sum_k E_k rho E_k^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_policy(kraus, &NumericPolicy::default())
    }

    pub fn with_policy(kraus: Vec<ComplexMatrix>, policy: &NumericPolicy) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::invalid("a channel needs at least one Kraus operator"))?;
        let (dim_out, dim_in) = first.shape();
        for e in &kraus {
            ensure_finite(e)?;
            if e.shape() != (dim_out, dim_in) {
                return Err(Error::invalid(format!(
                    "Kraus operators must share one shape; found {:?} and {:?}",
                    (dim_out, dim_in),
                    e.shape()
                )));
            }
        }
        if dim_in > policy.max_dim || dim_out > policy.max_dim {
            return Err(Error::DimensionCap {
                dim: dim_in.max(dim_out),
                cap: policy.max_dim,
            });
        }
        let diag = validate_with(&kraus, policy);
        if !diag.trace_preserving {
            return Err(Error::NotTracePreserving {
                deviation: diag.deviation,
            });
        }
        Ok(KrausChannel {
            dim_in,
            dim_out,
            kraus,
        })
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![ComplexMatrix::identity(dim, dim)],
        }
    }

    /// `{U}` for a unitary `U`.
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::unitary_with(u, &NumericPolicy::default())
    }

    pub fn unitary_with(u: ComplexMatrix, policy: &NumericPolicy) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::invalid("a unitary must be square"));
        }
        ensure_finite(&u)?;
        let n = u.nrows();
        let deviation = max_abs(&(u.adjoint() * &u - ComplexMatrix::identity(n, n)));
        if deviation > policy.unitary_tol {
            return Err(Error::NotUnitary { deviation });
        }
        Self::with_policy(vec![u], policy)
    }

    /// Qubit depolarizing channel with Kraus set
    /// `{sqrt(1 - 3p/4) I, sqrt(p/4) X, sqrt(p/4) Y, sqrt(p/4) Z}`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("depolarizing probability {p} not in [0, 1]")));
        }
        let a = (1.0 - 0.75 * p).sqrt();
        let b = (p / 4.0).sqrt();
        Self::new(vec![
            ComplexMatrix::identity(2, 2).scale(a),
            pauli::x().scale(b),
            pauli::y().scale(b),
            pauli::z().scale(b),
        ])
    }

    /// Measurement-controlled unitaries: outcome `k` of `{M_k}` triggers
    /// `V_k`, giving the Kraus set `{V_k M_k}`.
    pub fn measure_and_control(
        measurement: &[ComplexMatrix],
        controlled_unitaries: &[ComplexMatrix],
    ) -> Result<Self> {
        let policy = NumericPolicy::default();
        if measurement.len() != controlled_unitaries.len() {
            return Err(Error::invalid(format!(
                "{} measurement operators but {} controlled unitaries",
                measurement.len(),
                controlled_unitaries.len()
            )));
        }
        let complete = completeness_deviation(measurement)
            .ok_or_else(|| Error::invalid("measurement operators must be non-empty and share a shape"))?;
        if complete > policy.completeness_tol {
            return Err(Error::NotTracePreserving {
                deviation: complete,
            });
        }
        let mut kraus = Vec::with_capacity(measurement.len());
        for (m, v) in measurement.iter().zip(controlled_unitaries) {
            if !v.is_square() || v.ncols() != m.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: m.nrows(),
                    found: v.ncols(),
                });
            }
            let n = v.nrows();
            let deviation = max_abs(&(v.adjoint() * v - ComplexMatrix::identity(n, n)));
            if deviation > policy.unitary_tol {
                return Err(Error::NotUnitary { deviation });
            }
            kraus.push(v * m);
        }
        Self::new(kraus)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn diagnostics(&self) -> ChannelDiagnostics {
        validate(&self.kraus)
    }

    /// `sum_k E_k rho E_k^dagger` on a raw matrix.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.dim_in || rho.ncols() != self.dim_in {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                found: rho.nrows(),
            });
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for e in &self.kraus {
            out += e * rho * e.adjoint();
        }
        Ok(hermitian_part(&out))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.matrix())?;
        Ok(DensityMatrix::from_matrix_unchecked(out))
    }

    /// Heisenberg-picture map `A -> sum_k E_k^dagger A E_k`.
    pub fn dual_apply(&self, obs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if obs.nrows() != self.dim_out || obs.ncols() != self.dim_out {
            return Err(Error::DimensionMismatch {
                expected: self.dim_out,
                found: obs.nrows(),
            });
        }
        ensure_finite(obs)?;
        let deviation = hermitian_deviation(obs);
        if deviation > NumericPolicy::default().hermitian_tol * max_abs(obs).max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        let mut out = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for e in &self.kraus {
            out += e.adjoint() * obs * e;
        }
        Ok(hermitian_part(&out))
    }

    /// `outer . inner`: Kraus set `{F_j E_k}`.
    pub fn compose(outer: &KrausChannel, inner: &KrausChannel) -> Result<KrausChannel> {
        if inner.dim_out != outer.dim_in {
            return Err(Error::DimensionMismatch {
                expected: outer.dim_in,
                found: inner.dim_out,
            });
        }
        let mut kraus = Vec::with_capacity(outer.kraus.len() * inner.kraus.len());
        for f in &outer.kraus {
            for e in &inner.kraus {
                kraus.push(f * e);
            }
        }
        Ok(KrausChannel {
            dim_in: inner.dim_in,
            dim_out: outer.dim_out,
            kraus,
        })
    }

    /// Runs `self` after `inner`.
    pub fn after(&self, inner: &KrausChannel) -> Result<KrausChannel> {
        Self::compose(self, inner)
    }
}

/// Identity on all but the listed factor: `I ⊗ .. ⊗ U ⊗ .. ⊗ I` over
/// `qubits` qubits, `target` counted from the most significant position.
pub fn embed_single_qubit(u: &ComplexMatrix, target: usize, qubits: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(1, 1);
    for q in 0..qubits {
        let factor = if q == target {
            u.clone()
        } else {
            ComplexMatrix::identity(2, 2)
        };
        out = out.kronecker(&factor);
    }
    out
}
