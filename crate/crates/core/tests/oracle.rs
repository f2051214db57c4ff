mod common;

use rand::Rng;

use common::adversarial_valid;
use qrv::classifier::{Classifier, Measurement};
use qrv::oracle::{bloch_grid_min_distance, random_neighborhood_probe, SearchGrid};
use qrv::qchannel::KrausChannel;
use qrv::qstate::{ComplexMatrix, PureState, C64};
use qrv::random::{random_classifier, random_density, rng_from_seed};
use qrv::verifier::compute_optimal_bound;

#[test]
fn grid_radius_never_undercuts_the_verifier() {
    let mut rng = rng_from_seed(51);
    let grid = SearchGrid::new(SearchGrid::CERTIFIED);
    let mut compared = 0;
    while compared < 50 {
        let kraus = rng.random_range(1..=3);
        let c = random_classifier(&mut rng, 2, 2, kraus);
        let rank = rng.random_range(1..=2);
        let rho = random_density(&mut rng, 2, rank);
        let cls = c.classify(&rho).unwrap();
        if cls.tie {
            continue;
        }
        let b = compute_optimal_bound(&c, &rho, cls.label).unwrap();
        let g = bloch_grid_min_distance(&c, &rho, cls.label, grid).unwrap();
        match (b.delta, g.delta_hat) {
            (Some(d), Some(h)) => assert!(h >= d - 1e-4, "grid {h} below verifier {d}"),
            (Some(_), None) | (None, None) => {}
            (None, Some(h)) => panic!("grid found a class change at {h} the verifier calls unreachable"),
        }
        compared += 1;
    }
}

#[test]
fn grid_is_deterministic_and_converges_on_basis_state() {
    let mut p0 = ComplexMatrix::zeros(2, 2);
    p0[(0, 0)] = C64::new(1.0, 0.0);
    let mut p1 = ComplexMatrix::zeros(2, 2);
    p1[(1, 1)] = C64::new(1.0, 0.0);
    let c = Classifier::new(
        KrausChannel::identity(2),
        Measurement::new(vec![p0, p1]).unwrap(),
        vec!["0".into(), "1".into()],
    )
    .unwrap();
    let rho = PureState::basis(2, 0).unwrap().to_density();
    let a = bloch_grid_min_distance(&c, &rho, 0, SearchGrid::new(200)).unwrap();
    let b = bloch_grid_min_distance(&c, &rho, 0, SearchGrid::new(200)).unwrap();
    assert_eq!(a, b);
    assert!((a.delta_hat.unwrap() - 0.5).abs() < 2e-3);
}

#[test]
fn probe_finds_witnesses_beyond_the_radius() {
    let mut rng = rng_from_seed(52);
    let mut found = 0;
    let mut tried = 0;
    while tried < 4 {
        let c = random_classifier(&mut rng, 2, 2, 1);
        let rho = random_density(&mut rng, 2, 2);
        let cls = c.classify(&rho).unwrap();
        let b = compute_optimal_bound(&c, &rho, cls.label).unwrap();
        let Some(delta) = b.delta.filter(|d| *d + 0.05 < 1.0 && !cls.tie) else {
            continue;
        };
        tried += 1;
        let eps = delta + 0.05;
        if let Some(w) = random_neighborhood_probe(&c, &rho, cls.label, eps, 100_000, 7 + tried).unwrap() {
            adversarial_valid(&c, &rho, cls.label, &w, eps, 1e-9).unwrap();
            assert!(w.distance >= delta - 1e-6);
            found += 1;
        }
    }
    assert_eq!(found, tried);
}
