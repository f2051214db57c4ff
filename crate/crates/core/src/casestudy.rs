//! Input generators: the two-anchor qubit dataset and amplitude-encoded
//! images.

use rand_distr::{Distribution, Normal};

use crate::classifier::{Classifier, DataState, LabeledDataset, Measurement};
use crate::error::{Error, Result};
use crate::qchannel::KrausChannel;
use crate::qstate::{pauli, ComplexMatrix, ComplexVector, PureState, C64};
use crate::random::rng_from_seed;

/// Parameters of the qubit case study. Angles are polar angles in the X-Z
/// plane of the Bloch sphere: `|psi(phi)> = cos(phi/2)|0> + sin(phi/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitStudy {
    pub theta_a: f64,
    pub theta_b: f64,
    /// Rotation angle of the trained `R_y` classifier.
    pub theta_star: f64,
    pub n_train: usize,
    pub n_val: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for QubitStudy {
    fn default() -> Self {
        QubitStudy {
            theta_a: 1.0,
            theta_b: 1.23,
            theta_star: 0.4835,
            n_train: 800,
            n_val: 200,
            noise_std: 0.15,
            seed: 2021,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitCaseStudy {
    pub classifier: Classifier,
    pub train: LabeledDataset,
    pub val: LabeledDataset,
}

/// `cos(phi/2)|0> + sin(phi/2)|1>`.
pub fn xz_state(phi: f64) -> PureState {
    let (s, c) = (0.5 * phi).sin_cos();
    PureState::new(ComplexVector::from_vec(vec![C64::from(c), C64::from(s)])).expect("unit vector")
}

/// `R_y(theta)` followed by a computational-basis measurement; anchor `a`
/// is class 0 and anchor `b` class 1.
pub fn ry_classifier(theta: f64) -> Classifier {
    let mut p0 = ComplexMatrix::zeros(2, 2);
    p0[(0, 0)] = C64::from(1.0);
    let mut p1 = ComplexMatrix::zeros(2, 2);
    p1[(1, 1)] = C64::from(1.0);
    Classifier::new(
        KrausChannel::unitary(pauli::ry(theta)).expect("rotation is unitary"),
        Measurement::new(vec![p0, p1]).expect("projective measurement"),
        vec!["0".into(), "1".into()],
    )
    .expect("consistent qubit classifier")
}

fn check_angle(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > -std::f64::consts::PI && v <= std::f64::consts::PI {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in (-pi, pi], got {v}")))
    }
}

/// Builds the classifier and draws both datasets from one seeded stream.
///
/// Samples perturb an anchor angle by Gaussian noise. A draw the classifier
/// assigns to the other class is redrawn, so every sample keeps its
/// anchor's label.
pub fn generate_qubit_study(p: &QubitStudy) -> Result<QubitCaseStudy> {
    check_angle("theta_a", p.theta_a)?;
    check_angle("theta_b", p.theta_b)?;
    check_angle("theta_star", p.theta_star)?;
    if p.n_train == 0 {
        return Err(Error::invalid("n_train must be positive"));
    }
    if !(p.noise_std.is_finite() && p.noise_std >= 0.0) {
        return Err(Error::invalid("noise_std must be finite and non-negative"));
    }
    let classifier = ry_classifier(p.theta_star);
    let anchors = [(p.theta_a, 0usize), (p.theta_b, 1usize)];
    for (phi, label) in anchors {
        if classifier.classify_pure(&xz_state(phi))?.label != label {
            return Err(Error::invalid(format!(
                "anchor {phi} is not classified as {label} by R_y({})",
                p.theta_star
            )));
        }
    }
    let noise = Normal::new(0.0, p.noise_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = rng_from_seed(p.seed);
    let mut draw = |n: usize| -> Result<LabeledDataset> {
        let mut d = LabeledDataset::default();
        for i in 0..n {
            let (anchor, label) = anchors[i % 2];
            let mut attempts = 0;
            let state = loop {
                let phi = anchor + noise.sample(&mut rng);
                let psi = xz_state(phi);
                if classifier.classify_pure(&psi)?.label == label {
                    break psi;
                }
                attempts += 1;
                if attempts > 10_000 {
                    return Err(Error::invalid("noise too large: samples keep crossing the decision boundary"));
                }
            };
            d.push(DataState::Pure(state), label);
        }
        Ok(d)
    };
    let train = draw(p.n_train)?;
    let val = draw(p.n_val)?;
    Ok(QubitCaseStudy { classifier, train, val })
}

/// Amplitude-encoded data vector with the norm needed to decode it.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    pub state: PureState,
    pub norm: f64,
}

impl EncodedImage {
    /// `amplitudes * norm`.
    pub fn decode(&self) -> Vec<f64> {
        self.state.amplitudes().iter().map(|a| a.re * self.norm).collect()
    }
}

/// `x -> sum_i x_i / ||x|| |i>`; the length must be a power of two.
pub fn amplitude_encode(values: &[f64]) -> Result<EncodedImage> {
    if values.len() < 2 || !values.len().is_power_of_two() {
        return Err(Error::invalid(format!(
            "amplitude encoding needs a power-of-two length, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("all-zero input has no amplitude encoding"));
    }
    let amps = ComplexVector::from_iterator(values.len(), values.iter().map(|v| C64::from(v / norm)));
    Ok(EncodedImage {
        state: PureState::new(amps)?,
        norm,
    })
}

/// Grayscale raster, row-major, values scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

/// Parses a plain (`P2`) portable graymap.
pub fn parse_pgm(text: &str) -> Result<GrayImage> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let magic = tokens.next().ok_or_else(|| Error::invalid("empty PGM file"))?;
    if magic != "P2" {
        return Err(Error::invalid(format!("expected a plain PGM (P2), found {magic:?}")));
    }
    let mut number = |what: &str| -> Result<usize> {
        let t = tokens.next().ok_or_else(|| Error::invalid(format!("PGM: missing {what}")))?;
        t.parse::<usize>()
            .map_err(|_| Error::invalid(format!("PGM: bad {what} {t:?}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::invalid("PGM: width, height and maxval must be positive (maxval <= 65535)"));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for i in 0..width * height {
        let v = number(&format!("pixel {i}"))?;
        if v > maxval {
            return Err(Error::invalid(format!("PGM: pixel {i} exceeds maxval")));
        }
        pixels.push(v as f64 / maxval as f64);
    }
    if tokens.next().is_some() {
        return Err(Error::invalid("PGM: trailing data after pixels"));
    }
    Ok(GrayImage { width, height, pixels })
}

/// Resamples by area averaging: each target pixel is the mean of the source
/// area it covers, with fractional overlaps weighted.
pub fn downscale_area(img: &GrayImage, width: usize, height: usize) -> GrayImage {
    let sx = img.width as f64 / width as f64;
    let sy = img.height as f64 / height as f64;
    let overlap = |lo: f64, hi: f64, i: usize| (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
    let mut pixels = Vec::with_capacity(width * height);
    for ty in 0..height {
        let (y0, y1) = (ty as f64 * sy, (ty + 1) as f64 * sy);
        for tx in 0..width {
            let (x0, x1) = (tx as f64 * sx, (tx + 1) as f64 * sx);
            let mut acc = 0.0;
            let mut weight = 0.0;
            for y in (y0.floor() as usize)..(y1.ceil() as usize).min(img.height) {
                let wy = overlap(y0, y1, y);
                for x in (x0.floor() as usize)..(x1.ceil() as usize).min(img.width) {
                    let w = wy * overlap(x0, x1, x);
                    acc += w * img.pixels[y * img.width + x];
                    weight += w;
                }
            }
            pixels.push(acc / weight);
        }
    }
    GrayImage { width, height, pixels }
}

/// Side length of the encoded image: 16 x 16 pixels give 8 qubits.
pub const ENCODED_SIDE: usize = 16;

/// Reads a PGM, area-averages it to 16 x 16 when needed, and amplitude
/// encodes the 256 pixels.
pub fn encode_pgm(text: &str) -> Result<EncodedImage> {
    let img = parse_pgm(text)?;
    let img = if img.width == ENCODED_SIDE && img.height == ENCODED_SIDE {
        img
    } else {
        downscale_area(&img, ENCODED_SIDE, ENCODED_SIDE)
    };
    amplitude_encode(&img.pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_straddle_the_boundary() {
        let c = ry_classifier(0.4835);
        assert_eq!(c.classify_pure(&xz_state(1.0)).unwrap().label, 0);
        assert_eq!(c.classify_pure(&xz_state(1.23)).unwrap().label, 1);
        let boundary = std::f64::consts::FRAC_PI_2 - 0.4835;
        let p = c.class_probabilities(&xz_state(boundary).to_density()).unwrap();
        assert!((p.probabilities[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_repeats_anchors() {
        let s = generate_qubit_study(&QubitStudy {
            noise_std: 0.0,
            n_train: 6,
            n_val: 2,
            ..QubitStudy::default()
        })
        .unwrap();
        let a = DataState::Pure(xz_state(1.0));
        let b = DataState::Pure(xz_state(1.23));
        for (i, e) in s.train.entries().iter().enumerate() {
            assert_eq!(e.state, if i % 2 == 0 { a.clone() } else { b.clone() });
        }
    }

    #[test]
    fn generated_data_is_perfectly_classified() {
        let s = generate_qubit_study(&QubitStudy::default()).unwrap();
        assert_eq!(s.train.len(), 800);
        assert_eq!(s.val.len(), 200);
        assert_eq!(s.classifier.accuracy(&s.train).unwrap(), 1.0);
        assert_eq!(s.classifier.accuracy(&s.val).unwrap(), 1.0);
    }

    #[test]
    fn invalid_parameters() {
        let bad = |p: QubitStudy| generate_qubit_study(&p).is_err();
        assert!(bad(QubitStudy { n_train: 0, ..QubitStudy::default() }));
        assert!(bad(QubitStudy { theta_a: 4.0, ..QubitStudy::default() }));
        assert!(bad(QubitStudy { noise_std: -1.0, ..QubitStudy::default() }));
    }

    #[test]
    fn encoding_examples() {
        let mut one = vec![0.0; 256];
        one[0] = 1.0;
        let e = amplitude_encode(&one).unwrap();
        assert_eq!(e.state, PureState::basis(256, 0).unwrap());
        let e = amplitude_encode(&[0.5; 256]).unwrap();
        assert!(e.state.amplitudes().iter().all(|a| (a.re - 1.0 / 16.0).abs() < 1e-15));
        assert!(amplitude_encode(&[0.0; 256]).is_err());
        let v: Vec<f64> = (0..256).map(|i| (i % 7) as f64).collect();
        let e = amplitude_encode(&v).unwrap();
        let back = e.decode();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pgm_downscale_by_area() {
        let mut text = String::from("P2\n# test\n28 28\n255\n");
        for y in 0..28 {
            for x in 0..28 {
                text.push_str(if x < 14 && y < 14 { "255 " } else { "0 " });
            }
            text.push('\n');
        }
        let img = parse_pgm(&text).unwrap();
        let small = downscale_area(&img, 16, 16);
        assert!((small.pixels[0] - 1.0).abs() < 1e-12);
        assert!(small.pixels[15 * 16 + 15].abs() < 1e-12);
        let total_src: f64 = img.pixels.iter().sum::<f64>() / (28.0 * 28.0);
        let total_dst: f64 = small.pixels.iter().sum::<f64>() / 256.0;
        assert!((total_src - total_dst).abs() < 1e-12);
        let e = encode_pgm(&text).unwrap();
        assert_eq!(e.state.dim(), 256);
        assert!(parse_pgm("P5 1 1 255 0").is_err());
    }
}
