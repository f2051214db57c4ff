//! Command-line front end.
//!
//! Exit codes: 0 success, 1 non-robust states under `--strict` (or an
//! oracle disagreement), 2 input error, 3 solver failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::casestudy::{encode_pgm, generate_qubit_study, QubitStudy};
use crate::classifier::{Classifier, DataState, LabeledDataset};
use crate::error::{Error, Result};
use crate::formats::{
    adversarial_to_json, classifier_from_json, classifier_to_json, dataset_from_json, dataset_to_json,
    policy_from_json, read_text, report_to_json, state_to_json, write_text,
};
use crate::oracle::{bloch_grid_min_distance, SearchGrid};
use crate::policy::{NumericPolicy, MAX_DIM_ENV};
use crate::verifier::{
    compute_optimal_bound, under_robust_accuracy, verify_dataset, AdversaryMode, VerdictStatus, VerificationReport,
    VerifyOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_ROBUST: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Accuracy below which `verify` warns that the classifier is not well trained.
const WELL_TRAINED: f64 = 0.95;

/// Verdicts within this distance of epsilon may disagree with the oracle.
const ORACLE_BAND: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "qrv", version, about = "Robustness verification of quantum classifiers")]
pub struct Cli {
    /// Tolerance overrides (`kind: "policy"` file).
    #[arg(long, global = true, value_name = "PATH")]
    pub policy: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Mixed,
    Pure,
}

impl From<ModeArg> for AdversaryMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mixed => AdversaryMode::Mixed,
            ModeArg::Pure => AdversaryMode::Pure,
        }
    }
}

#[derive(Debug, Args)]
pub struct Inputs {
    pub classifier: PathBuf,
    pub dataset: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every dataset entry and report accuracy.
    Classify {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Robust accuracy with exact verdicts and adversarial examples.
    Verify {
        #[command(flatten)]
        inputs: Inputs,
        /// Robustness radius in (0, 1); repeat for several columns.
        #[arg(long, short, required = true, num_args = 1..)]
        epsilon: Vec<f64>,
        #[arg(long, value_enum, default_value = "mixed")]
        mode: ModeArg,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Cross-check qubit verdicts against the Bloch-grid oracle.
        #[arg(long)]
        oracle: bool,
        /// Exit with 1 when any state is not robust.
        #[arg(long)]
        strict: bool,
        /// Report JSON; adversarial states go to `<stem>.adversarial.json`.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
        /// Leave wall-clock times out of the report and summary.
        #[arg(long)]
        no_timings: bool,
    },
    /// Under-approximated robust accuracy only (no optimization).
    Bound {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, short, required = true, num_args = 1..)]
        epsilon: Vec<f64>,
    },
    /// Write the two-anchor qubit classifier and datasets.
    GenQubit {
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        theta_a: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.23)]
        theta_b: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.4835)]
        theta_star: f64,
        #[arg(long, default_value_t = 800)]
        n_train: usize,
        #[arg(long, default_value_t = 200)]
        n_val: usize,
        #[arg(long, default_value_t = 0.15)]
        noise_std: f64,
        #[arg(long, default_value_t = 2021)]
        seed: u64,
        /// Receives `classifier.json`, `train.json` and `val.json`.
        #[arg(long, value_name = "DIR", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Amplitude-encode a plain PGM image as an 8-qubit pure state.
    EncodeImage {
        image: PathBuf,
        #[arg(long, short, value_name = "PATH")]
        out: PathBuf,
    },
    /// Compare verifier radii with the Bloch-grid oracle (qubits only).
    OracleCheck {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, short, num_args = 1..)]
        epsilon: Vec<f64>,
        /// Grid intervals per axis.
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        /// Only the first N entries.
        #[arg(long)]
        limit: Option<usize>,
    },
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Solver(_) => EXIT_SOLVER,
        Error::AtState { source, .. } => exit_code_for(source),
        _ => EXIT_INPUT,
    }
}

fn load_policy(path: Option<&Path>) -> Result<NumericPolicy> {
    let mut policy = match path {
        Some(p) => policy_from_json(&read_text(p)?, &p.display().to_string())?,
        None => NumericPolicy::default(),
    };
    if let Ok(v) = std::env::var(MAX_DIM_ENV) {
        policy.max_dim = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{MAX_DIM_ENV} must be a positive integer, got {v:?}")))?;
    }
    Ok(policy)
}

fn load_inputs(inputs: &Inputs, policy: &NumericPolicy) -> Result<(Classifier, LabeledDataset)> {
    let c = classifier_from_json(&read_text(&inputs.classifier)?, &inputs.classifier.display().to_string(), policy)?;
    let d = dataset_from_json(&read_text(&inputs.dataset)?, &inputs.dataset.display().to_string(), policy)?;
    d.check_against(&c)?;
    Ok((c, d))
}

fn check_epsilons(eps: &[f64]) -> Result<()> {
    for &e in eps {
        if !(e.is_finite() && e > 0.0 && e < 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {e}")));
        }
    }
    Ok(())
}

/// Four significant digits.
pub fn sig4(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.000".into();
    }
    let decimals = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn io<T>(r: std::io::Result<T>) -> Result<T> {
    r.map_err(|source| Error::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let policy = load_policy(cli.policy.as_deref())?;
    match &cli.command {
        Command::Classify { inputs } => classify(inputs, &policy, out),
        Command::Verify {
            inputs,
            epsilon,
            mode,
            workers,
            oracle,
            strict,
            report,
            no_timings,
        } => {
            check_epsilons(epsilon)?;
            let (c, d) = load_inputs(inputs, &policy)?;
            let opts = VerifyOptions {
                mode: (*mode).into(),
                workers: *workers,
            };
            let reports = epsilon
                .iter()
                .map(|&e| verify_dataset(&c, &d, e, &opts))
                .collect::<Result<Vec<_>>>()?;
            if let Some(r) = reports.first() {
                let accuracy = 1.0 - r.counts.misclassified as f64 / r.counts.total as f64;
                if accuracy < WELL_TRAINED {
                    io(writeln!(
                        out,
                        "warning: classifier accuracy {} is below {}; robust accuracy counts misclassified states as non-robust",
                        sig4(accuracy),
                        sig4(WELL_TRAINED)
                    ))?;
                }
            }
            write_summary(&reports, !no_timings, out)?;
            if let Some(path) = report {
                let sidecar = sidecar_path(path);
                let name = sidecar.file_name().map(|n| n.to_string_lossy().into_owned());
                write_text(path, &report_to_json(&reports, !no_timings, name.as_deref()))?;
                write_text(&sidecar, &adversarial_to_json(&reports))?;
            }
            let mut code = EXIT_OK;
            if *oracle {
                if c.input_dim() == 2 {
                    let disagreements = oracle_cross_check(&c, &d, &reports, out)?;
                    if disagreements > 0 {
                        code = EXIT_NOT_ROBUST;
                    }
                } else {
                    io(writeln!(out, "oracle: skipped, the grid oracle needs a qubit classifier"))?;
                }
            }
            let all_failed = reports
                .iter()
                .any(|r| r.counts.solved > 0 && r.counts.inconclusive == r.counts.solved);
            if all_failed {
                return Ok(EXIT_SOLVER);
            }
            if *strict && reports.iter().any(|r| r.counts.not_robust > 0) {
                code = EXIT_NOT_ROBUST;
            }
            Ok(code)
        }
        Command::Bound { inputs, epsilon } => {
            check_epsilons(epsilon)?;
            let (c, d) = load_inputs(inputs, &policy)?;
            io(writeln!(out, "{:<12}{:>12}", "epsilon", "URA (%)"))?;
            for &e in epsilon {
                let ura = under_robust_accuracy(&c, &d, e)?;
                io(writeln!(out, "{:<12}{:>12}", sig4(e), sig4(100.0 * ura)))?;
            }
            Ok(EXIT_OK)
        }
        Command::GenQubit {
            theta_a,
            theta_b,
            theta_star,
            n_train,
            n_val,
            noise_std,
            seed,
            out_dir,
        } => {
            let study = generate_qubit_study(&QubitStudy {
                theta_a: *theta_a,
                theta_b: *theta_b,
                theta_star: *theta_star,
                n_train: *n_train,
                n_val: *n_val,
                noise_std: *noise_std,
                seed: *seed,
            })?;
            std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
                path: out_dir.display().to_string(),
                source,
            })?;
            write_text(&out_dir.join("classifier.json"), &classifier_to_json(&study.classifier))?;
            write_text(&out_dir.join("train.json"), &dataset_to_json(&study.train))?;
            write_text(&out_dir.join("val.json"), &dataset_to_json(&study.val))?;
            io(writeln!(
                out,
                "wrote classifier.json, train.json ({}) and val.json ({}) to {}",
                study.train.len(),
                study.val.len(),
                out_dir.display()
            ))?;
            Ok(EXIT_OK)
        }
        Command::EncodeImage { image, out: target } => {
            let enc = encode_pgm(&read_text(image)?).map_err(|e| Error::Schema {
                path: image.display().to_string(),
                location: ".".into(),
                message: e.to_string(),
            })?;
            write_text(target, &state_to_json(&DataState::Pure(enc.state.clone())))?;
            io(writeln!(
                out,
                "encoded {} amplitudes (norm {}) to {}",
                enc.state.dim(),
                sig4(enc.norm),
                target.display()
            ))?;
            Ok(EXIT_OK)
        }
        Command::OracleCheck {
            inputs,
            epsilon,
            resolution,
            limit,
        } => {
            check_epsilons(epsilon)?;
            let (c, d) = load_inputs(inputs, &policy)?;
            oracle_check(&c, &d, epsilon, *resolution, *limit, out)
        }
    }
}

fn sidecar_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    report.with_file_name(format!("{stem}.adversarial.json"))
}

fn classify(inputs: &Inputs, policy: &NumericPolicy, out: &mut dyn Write) -> Result<i32> {
    let (c, d) = load_inputs(inputs, policy)?;
    io(writeln!(out, "{:>6}  {:>8}  {:>9}  {:>10}  {:>10}", "index", "label", "predicted", "p_max", "margin"))?;
    let mut correct = 0usize;
    for (i, e) in d.entries().iter().enumerate() {
        let cls = c.classify(&e.state.to_density()).map_err(|err| err.at_state(i))?;
        if cls.label == e.label {
            correct += 1;
        }
        let name = |k: usize| c.labels().get(k).cloned().unwrap_or_else(|| k.to_string());
        io(writeln!(
            out,
            "{:>6}  {:>8}  {:>9}  {:>10}  {:>10}{}",
            i,
            name(e.label),
            name(cls.label),
            sig4(cls.distribution.probabilities[cls.label]),
            sig4(cls.margin),
            if cls.tie { "  tie" } else { "" }
        ))?;
    }
    io(writeln!(out, "accuracy: {} ({correct}/{})", sig4(correct as f64 / d.len() as f64), d.len()))?;
    Ok(EXIT_OK)
}

/// Two-row layout: URA and RA per epsilon column, then the timing rows.
pub fn write_summary(reports: &[VerificationReport], timings: bool, out: &mut dyn Write) -> Result<()> {
    let row = |name: &str, cells: Vec<String>| {
        let mut s = format!("{name:<22}");
        for c in cells {
            s.push_str(&format!("{c:>12}"));
        }
        s
    };
    let col = |f: &dyn Fn(&VerificationReport) -> String| reports.iter().map(f).collect::<Vec<_>>();
    let mut lines = vec![
        row("epsilon", col(&|r| sig4(r.epsilon))),
        row("Robust accuracy (%)", vec![]),
        row("  URA (under-approx.)", col(&|r| sig4(100.0 * r.under_approx_robust_accuracy))),
        row("  RA (exact)", col(&|r| sig4(100.0 * r.robust_accuracy))),
    ];
    if timings {
        lines.push(row("Verification time (s)", vec![]));
        lines.push(row("  URA", col(&|r| sig4(r.timings.under_approximation))));
        lines.push(row("  RA", col(&|r| sig4(r.timings.exact))));
    }
    lines.push(row("non-robust", col(&|r| r.counts.not_robust.to_string())));
    lines.push(row("SDP solves", col(&|r| r.solver.sdp_solves.to_string())));
    lines.push(row("inconclusive", col(&|r| r.counts.inconclusive.to_string())));
    lines.push(row("misclassified", col(&|r| r.counts.misclassified.to_string())));
    for l in lines {
        io(writeln!(out, "{}", l.trim_end()))?;
    }
    Ok(())
}

/// Compares each exact verdict with the grid oracle's; returns the number of
/// disagreements outside the boundary band.
fn oracle_cross_check(c: &Classifier, d: &LabeledDataset, reports: &[VerificationReport], out: &mut dyn Write) -> Result<usize> {
    let grid = SearchGrid::new(SearchGrid::CERTIFIED);
    let mut checked = 0usize;
    let mut bad = 0usize;
    let mut cache: Vec<Option<Option<f64>>> = vec![None; d.len()];
    for r in reports {
        for v in &r.verdicts {
            if !matches!(v.status, VerdictStatus::Robust | VerdictStatus::NotRobust) || v.lemma_bound_certifies {
                continue;
            }
            let delta_hat = match cache[v.state_index] {
                Some(h) => h,
                None => {
                    let rho = d.entries()[v.state_index].state.to_density();
                    let h = bloch_grid_min_distance(c, &rho, v.label, grid)?.delta_hat;
                    cache[v.state_index] = Some(h);
                    h
                }
            };
            checked += 1;
            let oracle_robust = delta_hat.is_none_or(|h| r.epsilon <= h);
            let near = v.optimal_robust_bound.is_some_and(|dl| (dl - r.epsilon).abs() <= ORACLE_BAND);
            if oracle_robust != v.robust_at_epsilon && !near {
                bad += 1;
                io(writeln!(
                    out,
                    "oracle disagreement: state {} at epsilon {}: verifier {:?}, grid radius {:?}",
                    v.state_index,
                    sig4(r.epsilon),
                    v.optimal_robust_bound,
                    delta_hat
                ))?;
            }
        }
    }
    io(writeln!(out, "oracle: {checked} exact verdicts checked, {bad} disagreements"))?;
    Ok(bad)
}

fn oracle_check(
    c: &Classifier,
    d: &LabeledDataset,
    epsilon: &[f64],
    resolution: usize,
    limit: Option<usize>,
    out: &mut dyn Write,
) -> Result<i32> {
    if c.input_dim() != 2 {
        return Err(Error::invalid("oracle-check needs a qubit classifier"));
    }
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be at least 2"));
    }
    let grid = SearchGrid::new(resolution);
    io(writeln!(out, "{:>6}  {:>12}  {:>12}  {:>12}", "index", "delta", "grid", "difference"))?;
    let n = limit.map_or(d.len(), |k| k.min(d.len()));
    let mut bad = 0usize;
    let mut max_diff = 0.0f64;
    for (i, e) in d.entries().iter().take(n).enumerate() {
        let rho = e.state.to_density();
        if c.classify(&rho)?.label != e.label {
            io(writeln!(out, "{i:>6}  misclassified"))?;
            continue;
        }
        let b = compute_optimal_bound(c, &rho, e.label).map_err(|err| err.at_state(i))?;
        if b.unsolved() > 0 {
            return Err(Error::Solver(format!("state {i}: optimal-bound solve did not converge")));
        }
        let g = bloch_grid_min_distance(c, &rho, e.label, grid)?;
        let show = |x: Option<f64>| x.map_or_else(|| "inf".to_string(), sig4);
        let diff = match (b.delta, g.delta_hat) {
            (Some(a), Some(h)) => Some(h - a),
            (None, None) => Some(0.0),
            _ => None,
        };
        if let Some(df) = diff {
            max_diff = max_diff.max(df.abs());
        }
        io(writeln!(
            out,
            "{i:>6}  {:>12}  {:>12}  {:>12}",
            show(b.delta),
            show(g.delta_hat),
            diff.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3e}"))
        ))?;
        for &eps in epsilon {
            let verifier = b.robust_at(eps);
            let oracle = g.delta_hat.is_none_or(|h| eps <= h);
            let near = b.delta.is_some_and(|dl| (dl - eps).abs() <= ORACLE_BAND);
            if verifier != oracle && !near {
                bad += 1;
                io(writeln!(out, "        disagreement at epsilon {}", sig4(eps)))?;
            }
        }
    }
    io(writeln!(out, "max |grid - delta| = {max_diff:.3e}; {bad} verdict disagreements"))?;
    Ok(if bad > 0 { EXIT_NOT_ROBUST } else { EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_significant_digits() {
        assert_eq!(sig4(100.0), "100.0");
        assert_eq!(sig4(88.125), "88.12");
        assert_eq!(sig4(0.001), "0.001000");
        assert_eq!(sig4(12345.6), "12346");
        assert_eq!(sig4(0.0), "0.000");
    }

    #[test]
    fn sidecar_next_to_report() {
        assert_eq!(sidecar_path(Path::new("out/run.json")), PathBuf::from("out/run.adversarial.json"));
    }

    #[test]
    fn bad_flags_are_input_errors() {
        let mut o = Vec::new();
        let mut e = Vec::new();
        assert_eq!(run(["qrv", "verify"], &mut o, &mut e), EXIT_INPUT);
        assert_eq!(run(["qrv", "nonsense"], &mut o, &mut e), EXIT_INPUT);
    }
}
