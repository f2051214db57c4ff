//! Seeded random instances: states, unitaries, channels and classifiers.
//!
//! Used by the probabilistic oracle, the case-study generator and the test
//! suites. All draws go through a caller-provided RNG so runs are
//! reproducible from a seed.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::classifier::{Classifier, Measurement};
use crate::qchannel::KrausChannel;
use crate::qstate::{hermitian_part, ComplexMatrix, ComplexVector, DensityMatrix, PureState, C64};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> PureState {
    let v = ComplexVector::from_fn(dim, |_, _| gaussian_c64(rng));
    PureState::normalized(v).expect("gaussian vector is non-zero")
}

/// Density matrix `G G^dagger / tr(G G^dagger)` with `G` a `dim x rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, dim, rank.max(1));
    let m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    DensityMatrix::project(&m.unscale(tr)).expect("Ginibre product is PSD")
}

/// Full-rank random density matrix.
pub fn random_mixed_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    random_density(rng, dim, dim)
}

/// Columns of the Q factor of a Gaussian matrix, phases fixed so the
/// distribution is Haar.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let g = ginibre(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    random_isometry(rng, dim, dim)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    hermitian_part(&ginibre(rng, dim, dim))
}

/// Channel with `kraus_count` operators cut from a random isometry
/// `C^dim -> C^(dim * kraus_count)`.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, dim: usize, kraus_count: usize) -> KrausChannel {
    let v = random_isometry(rng, dim * kraus_count, dim);
    let kraus = (0..kraus_count)
        .map(|k| v.rows(k * dim, dim).into_owned())
        .collect();
    KrausChannel::new(kraus).expect("isometry blocks form a trace-preserving set")
}

/// Projective measurement in a random basis, with basis vectors dealt
/// round-robin to `classes` outcomes.
pub fn random_projective_measurement<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    classes: usize,
) -> Measurement {
    let u = random_unitary(rng, dim);
    let mut ops = vec![ComplexMatrix::zeros(dim, dim); classes];
    for k in 0..dim {
        let col = u.column(k);
        ops[k % classes] += &col * col.adjoint();
    }
    Measurement::new(ops).expect("projectors onto an orthonormal basis are complete")
}

/// Random classifier measured in the computational basis. The channel is a
/// Haar unitary, or a random channel when `kraus_count > 1`.
pub fn random_classifier<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    classes: usize,
    kraus_count: usize,
) -> Classifier {
    let channel = if kraus_count <= 1 {
        KrausChannel::unitary(random_unitary(rng, dim)).expect("Haar unitary")
    } else {
        random_channel(rng, dim, kraus_count)
    };
    let measurement = computational_measurement(dim, classes);
    let labels = (0..classes).map(|k| format!("c{k}")).collect();
    Classifier::new(channel, measurement, labels).expect("dims agree")
}

/// Computational-basis projectors dealt round-robin to `classes` outcomes.
pub fn computational_measurement(dim: usize, classes: usize) -> Measurement {
    let mut ops = vec![ComplexMatrix::zeros(dim, dim); classes];
    for k in 0..dim {
        ops[k % classes][(k, k)] = C64::new(1.0, 0.0);
    }
    Measurement::new(ops).expect("basis projectors are complete")
}
