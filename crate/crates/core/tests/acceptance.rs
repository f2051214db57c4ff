//! Acceptance gate: one PASS/FAIL line per criterion; non-zero exit on any
//! failure.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use common::{adversarial_valid, eig_fidelity, eig_trace_distance};
use qrv::casestudy::{generate_qubit_study, QubitStudy};
use qrv::classifier::{Classifier, DataState, LabeledDataset};
use qrv::formats::dataset_to_json;
use qrv::oracle::{bloch_grid_min_distance, bloch_sphere_sweep, tie_vector_maximum, SearchGrid};
use qrv::policy::{QcqpOptions, SolverOptions};
use qrv::qstate::{fidelity, trace_distance, DensityMatrix};
use qrv::random::{random_channel, random_classifier, random_density, random_mixed_state, random_pure_state, rng_from_seed};
use qrv::sdp::{sqrt_fidelity_sdp, FidelityForm, SigmaSpec};
use qrv::verifier::{
    check_epsilon_robust, compute_optimal_bound, pure_state_optimal_bound, verify_dataset, AdversaryMode, VerifyOptions,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Random classifier and a state it labels without a tie.
fn untied_instance<R: Rng>(rng: &mut R, dim: usize, pure: bool) -> (Classifier, DensityMatrix, usize) {
    loop {
        let classes = rng.random_range(2..=dim.min(3));
        let kraus = rng.random_range(1..=3);
        let c = random_classifier(rng, dim, classes, kraus);
        let rho = if pure {
            random_pure_state(rng, dim).to_density()
        } else {
            let rank = rng.random_range(1..=dim);
            random_density(rng, dim, rank)
        };
        let cls = c.classify(&rho).unwrap();
        if !cls.tie {
            return (c, rho, cls.label);
        }
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(101);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut pairs = 0;
    for dim in [2usize, 4, 8] {
        for _ in 0..100 {
            let rho = random_mixed_state(&mut rng, dim);
            let sigma = random_mixed_state(&mut rng, dim);
            let sdp = sqrt_fidelity_sdp(&rho, &SigmaSpec::Fixed(sigma.matrix().clone()), FidelityForm::Watrous).unwrap();
            let sol = sdp.solve(&SolverOptions::default()).unwrap();
            if !sol.is_optimal() {
                failures += 1;
                continue;
            }
            let f_sdp = sdp.sqrt_fidelity(&sol).powi(2);
            let f_eig = eig_fidelity(&rho, &sigma);
            let f_lib = fidelity(&rho, &sigma).unwrap();
            worst = worst.max((f_sdp - f_eig).abs()).max((f_lib - f_eig).abs());
            pairs += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && worst <= 1e-6 && secs < 60.0,
        format!("{pairs} pairs at dims 2/4/8, max |F_sdp - F_eig| = {worst:.2e}, {failures} solver failures, {secs:.1} s"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = rng_from_seed(202);
    let mut violations = 0;
    for i in 0..200 {
        let dim = [2usize, 3, 4, 8][i % 4];
        let rho = random_density(&mut rng, dim, 1 + i % dim);
        let sigma = random_density(&mut rng, dim, 1 + (i / 4) % dim);
        let f = fidelity(&rho, &sigma).unwrap();
        let t = trace_distance(&rho, &sigma).unwrap();
        let t_ref = eig_trace_distance(&rho, &sigma);
        if 1.0 - f.sqrt() > t + 1e-7 || t > (1.0 - f).sqrt() + 1e-7 || (t - t_ref).abs() > 1e-9 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("200 pairs, {violations} violations"))
}

fn criterion_3() -> Outcome {
    let mut rng = rng_from_seed(303);
    let mut applicable = 0;
    let mut violations = 0;
    for i in 0..100 {
        let dim = if i % 2 == 0 { 2 } else { 4 };
        let (c, rho, l) = untied_instance(&mut rng, dim, i % 3 == 0);
        let cls = c.classify(&rho).unwrap();
        let eps = rng.random_range(0.02..1.3) * cls.margin.powi(2) / 2.0;
        if !(eps > 0.0 && eps < 1.0) || cls.margin <= (2.0 * eps).sqrt() {
            continue;
        }
        applicable += 1;
        let b = compute_optimal_bound(&c, &rho, l).unwrap();
        if b.unsolved() > 0 || b.delta.is_some_and(|d| d < eps - 1e-6) {
            violations += 1;
        }
    }
    outcome(
        violations == 0 && applicable >= 50,
        format!("{applicable} of 100 instances certified by the margin test, {violations} with delta < eps - 1e-6"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = rng_from_seed(404);
    let mut worst = 0.0f64;
    let mut infeasible = 0;
    for i in 0..50 {
        let n = 2 + i % 5;
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        let mut p: Vec<f64> = raw.iter().map(|v| v / s).collect();
        p.sort_by(|a, b| b.total_cmp(a));
        let (value, x) = tie_vector_maximum(&p).unwrap();
        let closed = (1.0 - (p[0].sqrt() - p[1].sqrt()).powi(2) / 2.0).sqrt();
        worst = worst.max((value - closed).abs());
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tied = x[1..].iter().any(|v| (v - x[0]).abs() < 1e-9);
        let attained: f64 = x.iter().zip(&p).map(|(a, b)| a * b.sqrt()).sum();
        if (norm - 1.0).abs() > 1e-9 || x.iter().any(|v| *v < -1e-12) || !tied || (attained - value).abs() > 1e-9 {
            infeasible += 1;
        }
    }
    outcome(
        worst <= 1e-5 && infeasible == 0,
        format!("50 vectors of length 2..6, max deviation {worst:.2e}, {infeasible} infeasible maximizers"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(505);
    let grid = SearchGrid::new(100);
    let mut disagreements = 0;
    let mut banded = 0;
    let mut robust = 0;
    for i in 0..50 {
        let (c, rho, l) = untied_instance(&mut rng, 2, i % 4 == 0);
        let b = compute_optimal_bound(&c, &rho, l).unwrap();
        let eps = match b.delta {
            Some(d) if i % 2 == 0 && d > 1e-3 && d < 0.9 => d * rng.random_range(0.5..1.5),
            _ => rng.random_range(0.001..0.3),
        };
        let check = check_epsilon_robust(&c, &rho, l, eps).unwrap();
        let g = bloch_grid_min_distance(&c, &rho, l, grid).unwrap();
        let oracle = g.delta_hat.is_none_or(|h| eps <= h);
        robust += usize::from(check.robust);
        let near = b.delta.is_some_and(|d| (d - eps).abs() <= 1e-4);
        if check.robust != oracle || b.robust_at(eps) != oracle {
            if near {
                banded += 1;
            } else {
                disagreements += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        disagreements == 0 && secs < 600.0,
        format!(
            "50 qubit instances ({robust} robust), grid 101^3, {disagreements} disagreements, {banded} inside the band, {secs:.1} s"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut total = 0;
    let mut invalid = Vec::new();
    let mut check = |c: &Classifier, d: &LabeledDataset, eps: f64, mode: AdversaryMode| {
        let r = verify_dataset(c, d, eps, &VerifyOptions { mode, workers: 0 }).unwrap();
        for (adv, source) in r.adversarial_set() {
            total += 1;
            let e = &d.entries()[source];
            if let Err(msg) = adversarial_valid(c, &e.state.to_density(), e.label, adv, eps, 1e-5) {
                invalid.push(format!("state {source} at eps {eps}: {msg}"));
            }
        }
    };
    let study = generate_qubit_study(&QubitStudy::default()).unwrap();
    for eps in [0.001, 0.004] {
        check(&study.classifier, &study.train, eps, AdversaryMode::Mixed);
        check(&study.classifier, &study.val, eps, AdversaryMode::Pure);
    }
    let mut rng = rng_from_seed(606);
    for (dim, classes) in [(2usize, 2usize), (4, 2), (4, 3)] {
        let c = random_classifier(&mut rng, dim, classes, 2);
        let mut d = LabeledDataset::default();
        for i in 0..30 {
            let state = if i % 2 == 0 {
                DataState::Pure(random_pure_state(&mut rng, dim))
            } else {
                DataState::Density(random_density(&mut rng, dim, 1 + i % dim))
            };
            let label = c.classify(&state.to_density()).unwrap().label;
            d.push(state, label);
        }
        for eps in [0.02, 0.1] {
            check(&c, &d, eps, AdversaryMode::Mixed);
            check(&c, &d, eps, AdversaryMode::Pure);
        }
    }
    let detail = match invalid.first() {
        Some(first) => format!("{} of {total} witnesses invalid, first: {first}", invalid.len()),
        None => format!("{total} witnesses, all valid"),
    };
    outcome(invalid.is_empty() && total > 0, detail)
}

fn criterion_7() -> Outcome {
    let study = generate_qubit_study(&QubitStudy::default()).unwrap();
    let epsilons = [0.001, 0.002, 0.003, 0.004];
    let reports: Vec<_> = epsilons
        .iter()
        .map(|&e| verify_dataset(&study.classifier, &study.train, e, &VerifyOptions::default()).unwrap())
        .collect();
    let mut failures = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        if r.under_approx_robust_accuracy > r.robust_accuracy {
            failures.push(format!("URA > RA at eps {}", r.epsilon));
        }
        if i > 0 {
            let p = &reports[i - 1];
            if r.robust_accuracy > p.robust_accuracy || r.under_approx_robust_accuracy > p.under_approx_robust_accuracy {
                failures.push(format!("accuracy increases from eps {} to {}", p.epsilon, r.epsilon));
            }
        }
        if r.solver.sdp_solves > 0 && 10.0 * r.timings.under_approximation > r.timings.exact {
            failures.push(format!(
                "eps {}: URA time {:.3e} s not 10x below RA time {:.3e} s",
                r.epsilon, r.timings.under_approximation, r.timings.exact
            ));
        }
        if r.counts.inconclusive > 0 {
            failures.push(format!("eps {}: {} inconclusive", r.epsilon, r.counts.inconclusive));
        }
    }
    let cols = |f: &dyn Fn(&qrv::verifier::VerificationReport) -> String| {
        reports.iter().map(f).collect::<Vec<_>>().join(" / ")
    };
    let table = format!(
        "URA {} | RA {} | URA s {} | RA s {}",
        cols(&|r| format!("{:.2}", 100.0 * r.under_approx_robust_accuracy)),
        cols(&|r| format!("{:.2}", 100.0 * r.robust_accuracy)),
        cols(&|r| format!("{:.1e}", r.timings.under_approximation)),
        cols(&|r| format!("{:.1e}", r.timings.exact)),
    );
    let pass = failures.is_empty() && study.train.len() == 800;
    let detail = if pass { table } else { format!("{}; {table}", failures.join("; ")) };
    outcome(pass, detail)
}

fn criterion_8() -> Outcome {
    let mut rng = rng_from_seed(808);
    let mut order_violations = 0;
    let mut sweep_violations = 0;
    let mut worst_sweep = 0.0f64;
    for _ in 0..30 {
        let (c, psi) = loop {
            let kraus = rng.random_range(1..=2);
            let c = random_classifier(&mut rng, 2, 2, kraus);
            let psi = random_pure_state(&mut rng, 2);
            if !c.classify_pure(&psi).unwrap().tie {
                break (c, psi);
            }
        };
        let l = c.classify_pure(&psi).unwrap().label;
        let pure = pure_state_optimal_bound(&c, &psi, l, &QcqpOptions::default()).unwrap();
        let mixed = compute_optimal_bound(&c, &psi.to_density(), l).unwrap();
        let sweep = bloch_sphere_sweep(&c, &psi, l, 2e-3).unwrap();
        match (pure.delta, mixed.delta) {
            (Some(p), Some(m)) if p < m - 1e-5 => order_violations += 1,
            (Some(_), None) => order_violations += 1,
            _ => {}
        }
        match (pure.delta, sweep.delta_hat) {
            (Some(p), Some(s)) => {
                worst_sweep = worst_sweep.max((p - s).abs());
                if (p - s).abs() > 2e-3 {
                    sweep_violations += 1;
                }
            }
            (None, None) => {}
            _ => sweep_violations += 1,
        }
    }
    outcome(
        order_violations == 0 && sweep_violations == 0,
        format!(
            "30 qubit pure states, {order_violations} with delta_pure < delta_mixed - 1e-5, max |delta_pure - sweep| = {worst_sweep:.2e}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = rng_from_seed(909);
    let mut fid_violations = 0;
    for i in 0..100 {
        let dim = 2 + i % 3;
        let e = random_channel(&mut rng, dim, 1 + i % 4);
        let rho = random_density(&mut rng, dim, 1 + i % dim);
        let sigma = random_density(&mut rng, dim, 1 + (i / 3) % dim);
        let before = fidelity(&rho, &sigma).unwrap();
        let after = fidelity(&e.apply(&rho).unwrap(), &e.apply(&sigma).unwrap()).unwrap();
        let after_ref = eig_fidelity(&e.apply(&rho).unwrap(), &e.apply(&sigma).unwrap());
        if after < before - 1e-7 || after_ref < eig_fidelity(&rho, &sigma) - 1e-7 {
            fid_violations += 1;
        }
    }
    let mut eps_violations = 0;
    for i in 0..50 {
        let dim = if i % 2 == 0 { 2 } else { 4 };
        let (c, rho, l) = untied_instance(&mut rng, dim, i % 3 == 0);
        let b = compute_optimal_bound(&c, &rho, l).unwrap();
        let scale = b.delta.filter(|d| *d > 1e-3 && *d < 0.6).unwrap_or(0.2);
        let mut e = [scale * rng.random_range(0.3..1.7), scale * rng.random_range(0.3..1.7)];
        e.sort_by(f64::total_cmp);
        let r1 = check_epsilon_robust(&c, &rho, l, e[0]).unwrap().robust;
        let r2 = check_epsilon_robust(&c, &rho, l, e[1]).unwrap().robust;
        if r2 && !r1 {
            eps_violations += 1;
        }
    }
    outcome(
        fid_violations == 0 && eps_violations == 0,
        format!("100 channel instances, {fid_violations} fidelity decreases; 50 epsilon pairs, {eps_violations} verdict inversions"),
    )
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_qrv"))
        .args(args)
        .output()
        .expect("qrv binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    let mut problems = Vec::new();
    for dir in &dirs {
        let d = dir.to_str().unwrap();
        let (code, _) = run_cli(&["gen-qubit", "--seed", "7", "--out-dir", d]);
        if code != 0 {
            problems.push(format!("gen-qubit exited {code}"));
        }
    }
    let mut stdouts = Vec::new();
    for dir in &dirs {
        let path = |f: &str| dir.join(f).to_str().unwrap().to_string();
        let (code, stdout) = run_cli(&[
            "verify",
            &path("classifier.json"),
            &path("train.json"),
            "-e",
            "0.001",
            "0.004",
            "--no-timings",
            "--report",
            &path("report.json"),
        ]);
        if code != 0 {
            problems.push(format!("verify exited {code}"));
        }
        stdouts.push(stdout);
    }
    let same = |f: &str| {
        let read = |d: &Path| std::fs::read(d.join(f)).unwrap_or_default();
        let (a, b) = (read(&dirs[0]), read(&dirs[1]));
        !a.is_empty() && a == b
    };
    for f in ["classifier.json", "train.json", "val.json", "report.json", "report.adversarial.json"] {
        if !same(f) {
            problems.push(format!("{f} differs"));
        }
    }
    if stdouts[0] != stdouts[1] {
        problems.push("summary output differs".into());
    }
    let lib = |seed| dataset_to_json(&generate_qubit_study(&QubitStudy { seed, ..QubitStudy::default() }).unwrap().train);
    if lib(11) != lib(11) || lib(11) == lib(12) {
        problems.push("library generator not seed-deterministic".into());
    }
    let detail = if problems.is_empty() {
        "datasets, reports, sidecars and summaries byte-identical across two runs".to_string()
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("fidelity eigen/SDP agreement", criterion_1),
        ("Fuchs-van de Graaf bounds", criterion_2),
        ("margin certificate soundness", criterion_3),
        ("tie-vector closed form", criterion_4),
        ("qubit grid oracle agreement", criterion_5),
        ("adversarial example validity", criterion_6),
        ("qubit case-study table structure", criterion_7),
        ("pure vs mixed radius ordering", criterion_8),
        ("monotonicity suites", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} {name}: {} [{:.1} s]",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
