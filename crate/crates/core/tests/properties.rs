mod common;

use proptest::prelude::*;

use common::{eig_fidelity, eig_trace_distance};
use qrv::classifier::{DataState, LabeledDataset};
use qrv::formats::{
    channel_from_json, channel_to_json, classifier_from_json, classifier_to_json, dataset_from_json, dataset_to_json,
    state_from_json, state_to_json,
};
use qrv::policy::NumericPolicy;
use qrv::qstate::{fidelity, hermitian_eigensystem, matrix_sqrt_psd, trace, trace_distance};
use qrv::random::{random_channel, random_classifier, random_density, random_pure_state, rng_from_seed};

fn dims() -> impl Strategy<Value = usize> {
    2usize..=6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fidelity_is_symmetric_and_matches_eigen_route(seed in any::<u64>(), dim in dims(), r1 in 1usize..=6, r2 in 1usize..=6) {
        let mut rng = rng_from_seed(seed);
        let rho = random_density(&mut rng, dim, r1.min(dim));
        let sigma = random_density(&mut rng, dim, r2.min(dim));
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() < 1e-8);
        prop_assert!((f - eig_fidelity(&rho, &sigma)).abs() < 1e-7);
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pure_fidelity_is_squared_overlap(seed in any::<u64>(), dim in dims()) {
        let mut rng = rng_from_seed(seed);
        let psi = random_pure_state(&mut rng, dim);
        let phi = random_pure_state(&mut rng, dim);
        let f = fidelity(&psi.to_density(), &phi.to_density()).unwrap();
        prop_assert!((f - psi.inner(&phi).norm_sqr()).abs() < 1e-8);
    }

    #[test]
    fn fuchs_van_de_graaf(seed in any::<u64>(), dim in dims(), r1 in 1usize..=6, r2 in 1usize..=6) {
        let mut rng = rng_from_seed(seed);
        let rho = random_density(&mut rng, dim, r1.min(dim));
        let sigma = random_density(&mut rng, dim, r2.min(dim));
        let f = fidelity(&rho, &sigma).unwrap();
        let t = trace_distance(&rho, &sigma).unwrap();
        prop_assert!((t - eig_trace_distance(&rho, &sigma)).abs() < 1e-10);
        prop_assert!(1.0 - f.sqrt() <= t + 1e-7);
        prop_assert!(t <= (1.0 - f).sqrt() + 1e-7);
    }

    #[test]
    fn square_root_reconstructs(seed in any::<u64>(), dim in 2usize..=16, rank in 1usize..=16) {
        let mut rng = rng_from_seed(seed);
        let m = random_density(&mut rng, dim, rank.min(dim)).into_matrix();
        let s = matrix_sqrt_psd(&m).unwrap();
        prop_assert!((&s * &s - &m).norm() < 1e-7);
    }

    #[test]
    fn channels_preserve_states_and_contract_fidelity(seed in any::<u64>(), dim in 2usize..=4, kraus in 1usize..=4) {
        let mut rng = rng_from_seed(seed);
        let e = random_channel(&mut rng, dim, kraus);
        let rho = random_density(&mut rng, dim, dim);
        let sigma = random_density(&mut rng, dim, 1);
        let out = e.apply_matrix(rho.matrix()).unwrap();
        prop_assert!((trace(&out).re - 1.0).abs() < 1e-8);
        prop_assert!(hermitian_eigensystem(&out).unwrap().min_eigenvalue() >= -1e-7);
        let before = fidelity(&rho, &sigma).unwrap();
        let after = fidelity(&e.apply(&rho).unwrap(), &e.apply(&sigma).unwrap()).unwrap();
        prop_assert!(after >= before - 1e-7);
    }

    #[test]
    fn classification_is_consistent(seed in any::<u64>(), dim in 2usize..=4, classes in 2usize..=4, kraus in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let c = random_classifier(&mut rng, dim, classes.min(dim), kraus);
        let psi = random_pure_state(&mut rng, dim);
        let p = c.class_probabilities(&psi.to_density()).unwrap().probabilities;
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-7);
        for (k, pk) in p.iter().enumerate() {
            let e = c.pulled_back_effect(k).unwrap();
            let direct = psi.amplitudes().dotc(&(&e * psi.amplitudes())).re;
            prop_assert!((pk - direct).abs() < 1e-8);
        }
        let a = c.classify(&psi.to_density()).unwrap();
        let b = c.classify_pure(&psi).unwrap();
        prop_assert_eq!(a.label, b.label);
    }

    #[test]
    fn file_round_trips_are_bit_exact(seed in any::<u64>(), dim in 2usize..=4) {
        let policy = NumericPolicy::default();
        let mut rng = rng_from_seed(seed);
        let pure = DataState::Pure(random_pure_state(&mut rng, dim));
        let mixed = DataState::Density(random_density(&mut rng, dim, dim));
        for s in [&pure, &mixed] {
            prop_assert_eq!(&state_from_json(&state_to_json(s), "mem", &policy).unwrap(), s);
        }
        let ch = random_channel(&mut rng, dim, 2);
        prop_assert_eq!(channel_from_json(&channel_to_json(&ch), "mem", &policy).unwrap(), ch);
        let c = random_classifier(&mut rng, dim, 2, 2);
        prop_assert_eq!(classifier_from_json(&classifier_to_json(&c), "mem", &policy).unwrap(), c);
        let mut d = LabeledDataset::default();
        d.push(pure, 0);
        d.push(mixed, 1);
        let text = dataset_to_json(&d);
        let back = dataset_from_json(&text, "mem", &policy).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(dataset_to_json(&back), text);
    }
}
