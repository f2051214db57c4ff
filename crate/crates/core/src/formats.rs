//! JSON file formats. Every file carries `"format": "qrv/1"`; complex
//! numbers are `[re, im]` pairs and matrices are arrays of rows.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::qstate::{ComplexMatrix, ComplexVector, C64};

pub const FORMAT: &str = "qrv/1";

/// `C64` as `[re, im]`.
pub mod cnum {
    use super::*;

    pub fn serialize<S: Serializer>(v: &C64, s: S) -> Result<S::Ok, S::Error> {
        [v.re, v.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

/// `ComplexVector` as `[[re, im], ...]`.
pub mod cvector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &ComplexVector, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexVector, D::Error> {
        let rows = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(ComplexVector::from_iterator(
            rows.len(),
            rows.into_iter().map(|[re, im]| C64::new(re, im)),
        ))
    }
}

/// `ComplexMatrix` as rows of `[re, im]`.
pub mod cmatrix {
    use super::*;
    use serde::de::Error as _;

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = m
            .row_iter()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(ComplexMatrix::from_fn(nrows, ncols, |r, c| {
            let [re, im] = rows[r][c];
            C64::new(re, im)
        }))
    }
}

/// `Vec<ComplexMatrix>` with each element as in [`cmatrix`].
pub mod cmatrices {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::cmatrix")] ComplexMatrix);

    pub fn serialize<S: Serializer>(v: &[ComplexMatrix], s: S) -> Result<S::Ok, S::Error> {
        let w: Vec<Wrap> = v.iter().cloned().map(Wrap).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<ComplexMatrix>, D::Error> {
        Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

use std::path::Path;

use crate::classifier::{Classifier, DataState, LabeledDataset, LabeledEntry, Measurement};
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::qchannel::KrausChannel;
use crate::qstate::{DensityMatrix, PureState};
use crate::verifier::{AdversaryMode, Counts, SolverStats, Timings, VerdictStatus, VerificationReport};

fn schema_err(origin: &str, location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: origin.to_string(),
        location: location.into(),
        message: message.into(),
    }
}

/// Parses `text` into `T`, reporting the JSON path of the first mismatch.
fn parse<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let location = e.path().to_string();
        schema_err(origin, location, e.inner().to_string())
    })
}

fn check_format(format: &str, origin: &str) -> Result<()> {
    if format != FORMAT {
        return Err(schema_err(origin, "format", format!("expected \"{FORMAT}\", found \"{format}\"")));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file types always serialize");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// A state as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateJson {
    Pure {
        #[serde(with = "cvector")]
        data: ComplexVector,
    },
    Density {
        #[serde(with = "cmatrix")]
        data: ComplexMatrix,
    },
}

impl StateJson {
    pub fn from_state(s: &DataState) -> Self {
        match s {
            DataState::Pure(p) => StateJson::Pure {
                data: p.amplitudes().clone(),
            },
            DataState::Density(d) => StateJson::Density {
                data: d.matrix().clone(),
            },
        }
    }

    pub fn into_state(self, policy: &NumericPolicy) -> Result<DataState> {
        Ok(match self {
            StateJson::Pure { data } => DataState::Pure(PureState::with_policy(data, policy)?),
            StateJson::Density { data } => DataState::Density(DensityMatrix::with_policy(data, policy)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StateFile {
    format: String,
    #[serde(flatten)]
    state: StateJson,
}

pub fn state_to_json(s: &DataState) -> String {
    to_json(&StateFile {
        format: FORMAT.into(),
        state: StateJson::from_state(s),
    })
}

pub fn state_from_json(text: &str, origin: &str, policy: &NumericPolicy) -> Result<DataState> {
    let f: StateFile = parse(text, origin)?;
    check_format(&f.format, origin)?;
    f.state
        .into_state(policy)
        .map_err(|e| schema_err(origin, "data", e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelJson {
    /// Optional on input; must match the Kraus operator size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(with = "cmatrices")]
    kraus: Vec<ComplexMatrix>,
}

impl ChannelJson {
    fn from_channel(c: &KrausChannel) -> Self {
        ChannelJson {
            dim: Some(c.dim_in()),
            kraus: c.kraus().to_vec(),
        }
    }

    fn into_channel(self, origin: &str, prefix: &str, policy: &NumericPolicy) -> Result<KrausChannel> {
        let channel = KrausChannel::with_policy(self.kraus, policy)
            .map_err(|e| schema_err(origin, format!("{prefix}kraus"), e.to_string()))?;
        if let Some(dim) = self.dim {
            if dim != channel.dim_in() {
                return Err(schema_err(
                    origin,
                    format!("{prefix}dim"),
                    format!("dim {dim} does not match {}x{} Kraus operators", channel.dim_out(), channel.dim_in()),
                ));
            }
        }
        Ok(channel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ChannelFile {
    format: String,
    kind: String,
    #[serde(flatten)]
    channel: ChannelJson,
}

pub fn channel_to_json(c: &KrausChannel) -> String {
    to_json(&ChannelFile {
        format: FORMAT.into(),
        kind: "channel".into(),
        channel: ChannelJson::from_channel(c),
    })
}

pub fn channel_from_json(text: &str, origin: &str, policy: &NumericPolicy) -> Result<KrausChannel> {
    let f: ChannelFile = parse(text, origin)?;
    check_format(&f.format, origin)?;
    expect_kind(&f.kind, "channel", origin)?;
    f.channel.into_channel(origin, "", policy)
}

fn expect_kind(kind: &str, expected: &str, origin: &str) -> Result<()> {
    if kind != expected {
        return Err(schema_err(origin, "kind", format!("expected \"{expected}\", found \"{kind}\"")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementJson {
    #[serde(with = "cmatrices")]
    operators: Vec<ComplexMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifierFile {
    format: String,
    kind: String,
    channel: ChannelJson,
    measurement: MeasurementJson,
    labels: Vec<String>,
}

pub fn classifier_to_json(c: &Classifier) -> String {
    to_json(&ClassifierFile {
        format: FORMAT.into(),
        kind: "classifier".into(),
        channel: ChannelJson::from_channel(c.channel()),
        measurement: MeasurementJson {
            operators: c.measurement().operators().to_vec(),
        },
        labels: c.labels().to_vec(),
    })
}

pub fn classifier_from_json(text: &str, origin: &str, policy: &NumericPolicy) -> Result<Classifier> {
    let f: ClassifierFile = parse(text, origin)?;
    check_format(&f.format, origin)?;
    expect_kind(&f.kind, "classifier", origin)?;
    let channel = f.channel.into_channel(origin, "channel.", policy)?;
    let measurement = Measurement::with_policy(f.measurement.operators, policy)
        .map_err(|e| schema_err(origin, "measurement.operators", e.to_string()))?;
    Classifier::with_policy(channel, measurement, f.labels, *policy)
        .map_err(|e| schema_err(origin, ".", e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryJson {
    #[serde(flatten)]
    pub state: StateJson,
    pub label: usize,
    /// Index of the dataset entry an adversarial state was derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    format: String,
    kind: String,
    entries: Vec<EntryJson>,
}

pub fn dataset_to_json(d: &LabeledDataset) -> String {
    to_json(&DatasetFile {
        format: FORMAT.into(),
        kind: "dataset".into(),
        entries: d
            .entries()
            .iter()
            .map(|e| EntryJson {
                state: StateJson::from_state(&e.state),
                label: e.label,
                source: None,
                epsilon: None,
                distance: None,
            })
            .collect(),
    })
}

pub fn dataset_from_json(text: &str, origin: &str, policy: &NumericPolicy) -> Result<LabeledDataset> {
    let f: DatasetFile = parse(text, origin)?;
    check_format(&f.format, origin)?;
    if f.kind != "dataset" && f.kind != "adversarial" {
        return Err(schema_err(origin, "kind", format!("expected \"dataset\", found \"{}\"", f.kind)));
    }
    let mut out = Vec::with_capacity(f.entries.len());
    for (i, e) in f.entries.into_iter().enumerate() {
        let state = e
            .state
            .into_state(policy)
            .map_err(|err| schema_err(origin, format!("entries[{i}].data"), err.to_string()))?;
        out.push(LabeledEntry { state, label: e.label });
    }
    Ok(LabeledDataset::new(out))
}

/// Adversarial states of one or more runs, in the dataset entry schema.
pub fn adversarial_to_json(reports: &[VerificationReport]) -> String {
    let mut entries = Vec::new();
    for r in reports {
        for (a, source) in r.adversarial_set() {
            entries.push(EntryJson {
                state: StateJson::Density {
                    data: a.sigma.matrix().clone(),
                },
                label: a.target_class,
                source: Some(source),
                epsilon: Some(r.epsilon),
                distance: Some(a.distance),
            });
        }
    }
    to_json(&DatasetFile {
        format: FORMAT.into(),
        kind: "adversarial".into(),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialRef {
    /// Position in the adversarial sidecar file.
    pub sidecar_index: usize,
    pub target_class: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub index: usize,
    pub label: usize,
    pub predicted_label: usize,
    pub correctly_classified: bool,
    pub tie: bool,
    pub margin: f64,
    pub lemma_certifies: bool,
    /// `null` when not computed or unbounded.
    pub delta: Option<f64>,
    pub unbounded: bool,
    pub robust: bool,
    pub status: VerdictStatus,
    pub adversarial: Option<AdversarialRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunJson {
    pub epsilon: f64,
    pub mode: AdversaryMode,
    pub robust_accuracy: f64,
    pub under_approx_robust_accuracy: f64,
    pub counts: Counts,
    pub solver: SolverStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
    pub verdicts: Vec<VerdictJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format: String,
    pub kind: String,
    /// File name of the adversarial sidecar, when written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversarial_file: Option<String>,
    pub runs: Vec<RunJson>,
}

/// Report JSON for a sequence of runs. Sidecar indices number the
/// adversarial states across runs in the order of [`adversarial_to_json`].
pub fn report_to_json(reports: &[VerificationReport], include_timings: bool, sidecar: Option<&str>) -> String {
    let mut next = 0usize;
    let runs = reports
        .iter()
        .map(|r| RunJson {
            epsilon: r.epsilon,
            mode: r.mode,
            robust_accuracy: r.robust_accuracy,
            under_approx_robust_accuracy: r.under_approx_robust_accuracy,
            counts: r.counts,
            solver: r.solver,
            timings: include_timings.then_some(r.timings),
            verdicts: r
                .verdicts
                .iter()
                .map(|v| VerdictJson {
                    index: v.state_index,
                    label: v.label,
                    predicted_label: v.predicted_label,
                    correctly_classified: v.correctly_classified,
                    tie: v.tie,
                    margin: v.margin,
                    lemma_certifies: v.lemma_bound_certifies,
                    delta: v.optimal_robust_bound,
                    unbounded: v.unbounded,
                    robust: v.robust_at_epsilon,
                    status: v.status,
                    adversarial: v.adversarial.as_ref().map(|a| {
                        next += 1;
                        AdversarialRef {
                            sidecar_index: next - 1,
                            target_class: a.target_class,
                            distance: a.distance,
                        }
                    }),
                    note: v.note.clone(),
                })
                .collect(),
        })
        .collect();
    to_json(&ReportFile {
        format: FORMAT.into(),
        kind: "report".into(),
        adversarial_file: sidecar.map(str::to_string),
        runs,
    })
}

pub fn report_from_json(text: &str, origin: &str) -> Result<ReportFile> {
    let f: ReportFile = parse(text, origin)?;
    check_format(&f.format, origin)?;
    expect_kind(&f.kind, "report", origin)?;
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    format: String,
    kind: String,
    #[serde(default)]
    policy: NumericPolicy,
}

/// Tolerance overrides: `{"format": "qrv/1", "kind": "policy", "policy": {..}}`;
/// omitted fields keep their defaults.
pub fn policy_from_json(text: &str, origin: &str) -> Result<NumericPolicy> {
    let f: PolicyFile = parse(text, origin)?;
    check_format(&f.format, origin)?;
    expect_kind(&f.kind, "policy", origin)?;
    Ok(f.policy)
}

pub fn policy_to_json(p: &NumericPolicy) -> String {
    to_json(&PolicyFile {
        format: FORMAT.into(),
        kind: "policy".into(),
        policy: *p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_classifier, random_mixed_state, random_pure_state, rng_from_seed};

    #[test]
    fn state_round_trip_is_exact() {
        let mut rng = rng_from_seed(3);
        let p = NumericPolicy::default();
        let pure = DataState::Pure(random_pure_state(&mut rng, 4));
        assert_eq!(state_from_json(&state_to_json(&pure), "t", &p).unwrap(), pure);
        let mixed = DataState::Density(random_mixed_state(&mut rng, 3));
        assert_eq!(state_from_json(&state_to_json(&mixed), "t", &p).unwrap(), mixed);
    }

    #[test]
    fn classifier_round_trip_is_exact() {
        let mut rng = rng_from_seed(4);
        let c = random_classifier(&mut rng, 4, 3, 2);
        let back = classifier_from_json(&classifier_to_json(&c), "t", &NumericPolicy::default()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn channel_dim_is_optional_but_checked() {
        let policy = NumericPolicy::default();
        let id = r#"[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]"#;
        let without = format!(r#"{{"format": "qrv/1", "kind": "channel", "kraus": [{id}]}}"#);
        assert_eq!(channel_from_json(&without, "c", &policy).unwrap().dim_in(), 2);
        let text = channel_to_json(&KrausChannel::identity(2));
        assert!(text.contains("\"dim\": 2"), "{text}");
        let wrong = format!(r#"{{"format": "qrv/1", "kind": "channel", "dim": 3, "kraus": [{id}]}}"#);
        match channel_from_json(&wrong, "c", &policy).unwrap_err() {
            Error::Schema { location, .. } => assert_eq!(location, "dim"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors_name_the_location() {
        let text = r#"{"format": "qrv/1", "kind": "dataset", "entries": [{"kind": "pure", "data": [[1, 0], [0]], "label": 0}]}"#;
        let err = dataset_from_json(text, "d.json", &NumericPolicy::default()).unwrap_err();
        match err {
            Error::Schema { path, location, .. } => {
                assert_eq!(path, "d.json");
                assert!(location.starts_with("entries[0]"), "{location}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let wrong = r#"{"format": "qrv/2", "kind": "pure", "data": [[1, 0]]}"#;
        assert!(matches!(
            state_from_json(wrong, "s", &NumericPolicy::default()),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn policy_overrides_keep_defaults() {
        let text = r#"{"format": "qrv/1", "kind": "policy", "policy": {"tie_tol": 1e-9}}"#;
        let p = policy_from_json(text, "p").unwrap();
        assert_eq!(p.tie_tol, 1e-9);
        assert_eq!(p.max_dim, NumericPolicy::default().max_dim);
    }
}
