//! Brute-force ground truth for small instances.
//!
//! Everything here is exhaustive or sampling-based and independent of the
//! SDP machinery; tests and the `--oracle` CLI flag compare the verifier
//! against it. For qubits, outcome probabilities are affine in the Bloch
//! vector and fidelity has a closed form, so the whole Bloch ball can be
//! scanned cheaply.

use rand::Rng;

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::qstate::{fidelity, pauli, DensityMatrix, PureState, C64};
use crate::random::{random_density, rng_from_seed};
use crate::verifier::Adversarial;

/// Grid over the Bloch ball: `resolution` intervals per axis, so
/// `resolution + 1` points per axis including both ends and, for even
/// resolutions, the centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchGrid {
    pub resolution: usize,
}

impl SearchGrid {
    /// Smallest resolution treated as certification grade.
    pub const CERTIFIED: usize = 50;

    pub fn new(resolution: usize) -> Self {
        SearchGrid { resolution }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    /// Smallest distance among adversarial candidates; `None` if none.
    pub delta_hat: Option<f64>,
    pub sigma_hat: Option<DensityMatrix>,
    pub evaluated: usize,
}

type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `p_k(r) = offset[k] + slope[k] . r` for a qubit classifier.
struct AffineQubitModel {
    offset: Vec<f64>,
    slope: Vec<Vec3>,
}

impl AffineQubitModel {
    fn new(c: &Classifier) -> Result<Self> {
        if c.input_dim() != 2 {
            return Err(Error::invalid(format!(
                "Bloch oracle needs a qubit classifier, got dimension {}",
                c.input_dim()
            )));
        }
        let probs = |r: Vec3| -> Result<Vec<f64>> {
            Ok(c.class_probabilities(&DensityMatrix::new(pauli::bloch_density(r))?)?.probabilities)
        };
        let offset = probs([0.0; 3])?;
        let mut slope = vec![[0.0; 3]; offset.len()];
        for axis in 0..3 {
            let mut e = [0.0; 3];
            e[axis] = 1.0;
            let plus = probs(e)?;
            e[axis] = -1.0;
            let minus = probs(e)?;
            for k in 0..offset.len() {
                slope[k][axis] = 0.5 * (plus[k] - minus[k]);
            }
        }
        Ok(AffineQubitModel { offset, slope })
    }

    /// `(alpha_k, beta_k)` with `p_k - p_l = alpha_k + beta_k . r`, for `k != l`.
    fn gaps(&self, l: usize) -> Vec<(f64, Vec3)> {
        (0..self.offset.len())
            .filter(|&k| k != l)
            .map(|k| {
                let b = [
                    self.slope[k][0] - self.slope[l][0],
                    self.slope[k][1] - self.slope[l][1],
                    self.slope[k][2] - self.slope[l][2],
                ];
                (self.offset[k] - self.offset[l], b)
            })
            .collect()
    }
}

/// Loses or ties `l`: some other class scores within `tie_tol` of it.
fn adversarial(gaps: &[(f64, Vec3)], r: &Vec3, tie_tol: f64) -> bool {
    gaps.iter().any(|(a, b)| a + dot(b, r) >= -tie_tol)
}

/// Qubit fidelity: `tr(rho sigma) + 2 sqrt(det rho det sigma)`.
fn qubit_fidelity(r0: &Vec3, r: &Vec3) -> f64 {
    let d0 = (1.0 - dot(r0, r0)).max(0.0);
    let d1 = (1.0 - dot(r, r)).max(0.0);
    (0.5 * (1.0 + dot(r0, r) + (d0 * d1).sqrt())).clamp(0.0, 1.0)
}

#[derive(Clone, Copy)]
struct Best {
    distance: f64,
    r: Vec3,
}

fn keep(best: &mut Option<Best>, distance: f64, r: Vec3) {
    if best.is_none_or(|b| distance < b.distance) {
        *best = Some(Best { distance, r });
    }
}

fn clamp_to_ball(r: Vec3) -> Vec3 {
    let n = dot(&r, &r).sqrt();
    if n > 1.0 {
        [r[0] / n, r[1] / n, r[2] / n]
    } else {
        r
    }
}

fn orthonormal_complement(n: &Vec3) -> (Vec3, Vec3) {
    let pick = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(&pick, n);
    let mut u = [pick[0] - d * n[0], pick[1] - d * n[1], pick[2] - d * n[2]];
    let un = dot(&u, &u).sqrt();
    u.iter_mut().for_each(|x| *x /= un);
    let v = [
        n[1] * u[2] - n[2] * u[1],
        n[2] * u[0] - n[0] * u[2],
        n[0] * u[1] - n[1] * u[0],
    ];
    (u, v)
}

/// Minimum of `1 - F(rho, sigma)` over Bloch-ball candidates `sigma` that
/// lose or tie label `l`.
///
/// Candidates are the grid points inside the ball, the crossings of every
/// grid line with every decision plane, and a polar grid of the same
/// resolution on each decision disk (rim included). All are genuine states,
/// so the result never undercuts the true radius.
pub fn bloch_grid_min_distance(c: &Classifier, rho: &DensityMatrix, l: usize, grid: SearchGrid) -> Result<GridResult> {
    if rho.dim() != 2 {
        return Err(Error::invalid("Bloch oracle needs a qubit state"));
    }
    if grid.resolution < 2 {
        return Err(Error::invalid("grid resolution must be at least 2"));
    }
    if l >= c.num_classes() {
        return Err(Error::invalid(format!("label {l} out of range")));
    }
    let model = AffineQubitModel::new(c)?;
    let gaps = model.gaps(l);
    let tie_tol = c.policy().tie_tol;
    let r0 = pauli::bloch_vector(rho.matrix());
    let res = grid.resolution;
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / res as f64;

    let consider = |best: &mut Option<Best>, r: Vec3| {
        if adversarial(&gaps, &r, tie_tol) {
            keep(best, 1.0 - qubit_fidelity(&r0, &r), r);
        }
    };

    let slice = |i: usize| -> (Option<Best>, usize) {
        let mut best = None;
        let mut n = 0;
        let x = coord(i);
        for j in 0..=res {
            let y = coord(j);
            for k in 0..=res {
                let z = coord(k);
                if x * x + y * y + z * z <= 1.0 {
                    n += 1;
                    consider(&mut best, [x, y, z]);
                }
            }
            // Crossings of the line (x, y, .) with each decision plane.
            for (a, b) in &gaps {
                if b[2].abs() > 1e-15 {
                    let z = -(a + b[0] * x + b[1] * y) / b[2];
                    if x * x + y * y + z * z <= 1.0 {
                        n += 1;
                        consider(&mut best, [x, y, z]);
                    }
                }
            }
        }
        (best, n)
    };

    #[cfg(feature = "parallel")]
    let slices: Vec<(Option<Best>, usize)> = {
        use rayon::prelude::*;
        (0..=res).into_par_iter().map(slice).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let slices: Vec<(Option<Best>, usize)> = (0..=res).map(slice).collect();

    let mut best = None;
    let mut evaluated = 0;
    for (b, n) in slices {
        evaluated += n;
        if let Some(b) = b {
            keep(&mut best, b.distance, b.r);
        }
    }

    // Remaining crossings: lines along x and y.
    for i in 0..=res {
        for j in 0..=res {
            let (s, t) = (coord(i), coord(j));
            for (a, b) in &gaps {
                if b[0].abs() > 1e-15 {
                    let x = -(a + b[1] * s + b[2] * t) / b[0];
                    let r = [x, s, t];
                    if dot(&r, &r) <= 1.0 {
                        evaluated += 1;
                        consider(&mut best, r);
                    }
                }
                if b[1].abs() > 1e-15 {
                    let y = -(a + b[0] * s + b[2] * t) / b[1];
                    let r = [s, y, t];
                    if dot(&r, &r) <= 1.0 {
                        evaluated += 1;
                        consider(&mut best, r);
                    }
                }
            }
        }
    }

    // Polar grid on each decision disk.
    for (a, b) in &gaps {
        let nb = dot(b, b).sqrt();
        if nb <= 1e-15 {
            continue;
        }
        let n = [b[0] / nb, b[1] / nb, b[2] / nb];
        let h = -a / nb;
        if h.abs() > 1.0 {
            continue;
        }
        let centre = [h * n[0], h * n[1], h * n[2]];
        let radius = (1.0 - h * h).max(0.0).sqrt();
        let (u, v) = orthonormal_complement(&n);
        let angles = 4 * res;
        for s in 0..=res {
            let rr = radius * s as f64 / res as f64;
            for t in 0..angles {
                let phi = std::f64::consts::TAU * t as f64 / angles as f64;
                let (sn, cs) = phi.sin_cos();
                let r = clamp_to_ball([
                    centre[0] + rr * (cs * u[0] + sn * v[0]),
                    centre[1] + rr * (cs * u[1] + sn * v[1]),
                    centre[2] + rr * (cs * u[2] + sn * v[2]),
                ]);
                evaluated += 1;
                consider(&mut best, r);
                if s == 0 {
                    break;
                }
            }
        }
    }

    if adversarial(&gaps, &r0, tie_tol) {
        keep(&mut best, 0.0, r0);
    }

    Ok(match best {
        Some(b) => GridResult {
            delta_hat: Some(b.distance),
            sigma_hat: Some(DensityMatrix::project(&pauli::bloch_density(b.r))?),
            evaluated,
        },
        None => GridResult {
            delta_hat: None,
            sigma_hat: None,
            evaluated,
        },
    })
}

/// Pure-state analogue: scans the Bloch sphere in polar and azimuthal steps
/// of `step` radians for pure states that lose or tie `l`.
pub fn bloch_sphere_sweep(c: &Classifier, psi: &PureState, l: usize, step: f64) -> Result<GridResult> {
    if psi.dim() != 2 {
        return Err(Error::invalid("sphere sweep needs a qubit state"));
    }
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::invalid("sweep step must lie in (0, 1) radians"));
    }
    let model = AffineQubitModel::new(c)?;
    let gaps = model.gaps(l);
    let tie_tol = c.policy().tie_tol;
    let r0 = pauli::bloch_vector(psi.to_density().matrix());
    let polar = (std::f64::consts::PI / step).ceil() as usize;
    let azimuth = (std::f64::consts::TAU / step).ceil() as usize;

    let row = |i: usize| -> Option<Best> {
        let theta = std::f64::consts::PI * i as f64 / polar as f64;
        let (st, ct) = theta.sin_cos();
        let mut best = None;
        for j in 0..azimuth {
            let phi = std::f64::consts::TAU * j as f64 / azimuth as f64;
            let (sp, cp) = phi.sin_cos();
            let r = [st * cp, st * sp, ct];
            if adversarial(&gaps, &r, tie_tol) {
                keep(&mut best, 0.5 * (1.0 - dot(&r0, &r)), r);
            }
        }
        best
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Option<Best>> = {
        use rayon::prelude::*;
        (0..=polar).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Option<Best>> = (0..=polar).map(row).collect();

    let mut best = None;
    for b in rows.into_iter().flatten() {
        keep(&mut best, b.distance, b.r);
    }
    if adversarial(&gaps, &r0, tie_tol) {
        keep(&mut best, 0.0, r0);
    }
    Ok(GridResult {
        delta_hat: best.map(|b| b.distance.max(0.0)),
        sigma_hat: best
            .map(|b| DensityMatrix::project(&pauli::bloch_density(b.r)))
            .transpose()?,
        evaluated: (polar + 1) * azimuth,
    })
}

/// Probabilistic falsifier for any dimension: draws `sigma = (1 - t) rho + t tau`
/// with random states `tau` and keeps the closest sample that loses or ties
/// `l` within distance `eps`. `None` is not a robustness certificate.
pub fn random_neighborhood_probe(
    c: &Classifier,
    rho: &DensityMatrix,
    l: usize,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<Option<Adversarial>> {
    let d = rho.dim();
    if d != c.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: c.input_dim(),
            found: d,
        });
    }
    let mut rng = rng_from_seed(seed);
    // Joint concavity gives D(rho, sigma) <= t, so t <= eps is always
    // accepted; larger t is kept when rejection allows it.
    let t_max = (4.0 * eps).min(1.0);
    let mut best: Option<Adversarial> = None;
    for _ in 0..samples {
        let rank = rng.random_range(1..=d);
        let tau = random_density(&mut rng, d, rank);
        let t: f64 = rng.random::<f64>() * t_max;
        let m = rho.matrix() * C64::from(1.0 - t) + tau.matrix() * C64::from(t);
        let sigma = DensityMatrix::project(&m)?;
        let distance = 1.0 - fidelity(rho, &sigma)?;
        if distance > eps {
            continue;
        }
        if c.classify(&sigma)?.changes_or_ties(l) && best.as_ref().is_none_or(|b| distance < b.distance) {
            let target_class = c
                .class_probabilities(&sigma)?
                .probabilities
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != l)
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map_or(0, |(k, _)| k);
            best = Some(Adversarial {
                sigma,
                target_class,
                distance,
            });
        }
    }
    Ok(best)
}

/// Numerical maximum of `x . sqrt(p)` over unit vectors `x >= 0` whose first
/// coordinate ties some other coordinate, with `p` sorted decreasingly.
///
/// Each tie subspace `x_1 = x_j` is handled by projected gradient ascent on
/// the convex set `{x >= 0, ||x|| <= 1, x_1 = x_j}`; the maximum of a positive
/// linear objective there lies on the unit sphere.
pub fn tie_vector_maximum(p: &[f64]) -> Result<(f64, Vec<f64>)> {
    if p.len() < 2 || p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("need at least two non-negative probabilities"));
    }
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let target: Vec<f64> = sorted.iter().map(|v| v.sqrt()).collect();
    let n = target.len();
    let project = |x: &mut Vec<f64>, j: usize| {
        let m = 0.5 * (x[0] + x[j]);
        x[0] = m;
        x[j] = m;
        x.iter_mut().for_each(|v| *v = v.max(0.0));
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
    };
    let value = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| a * b).sum::<f64>();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    for j in 1..n {
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        project(&mut x, j);
        let step = 0.5;
        for _ in 0..100_000 {
            let mut next: Vec<f64> = x.iter().zip(&target).map(|(a, g)| a + step * g).collect();
            project(&mut next, j);
            let moved = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = next;
            if moved < 1e-15 {
                break;
            }
        }
        let v = value(&x);
        if v > best.0 {
            best = (v, x);
        }
    }
    Ok(best)
}

/// Density matrix for a Bloch vector, for callers building oracle inputs.
pub fn bloch_state(r: [f64; 3]) -> Result<DensityMatrix> {
    DensityMatrix::new(pauli::bloch_density(r))
}
