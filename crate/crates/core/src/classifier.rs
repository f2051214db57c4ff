//! Quantum classifiers `(E, {M_k})` and labeled datasets.
//!
//! A classifier runs its channel, measures, and reports the outcome with the
//! largest probability. Ties go to the lowest index and are flagged.

use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::qchannel::{completeness_deviation, KrausChannel};
use crate::qstate::{ensure_finite, trace_product, ComplexMatrix, DensityMatrix, PureState};

/// Measurement operators `{M_k}`, one per class, with `sum M_k^dagger M_k = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    dim: usize,
    operators: Vec<ComplexMatrix>,
    /// `M_k^dagger M_k`, cached.
    effects: Vec<ComplexMatrix>,
}

impl Measurement {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_policy(operators, &NumericPolicy::default())
    }

    pub fn with_policy(operators: Vec<ComplexMatrix>, policy: &NumericPolicy) -> Result<Self> {
        if operators.len() < 2 {
            return Err(Error::invalid("a measurement needs at least two operators"));
        }
        for m in &operators {
            ensure_finite(m)?;
        }
        let dim = operators[0].ncols();
        if operators.iter().any(|m| m.shape() != (dim, dim)) {
            return Err(Error::invalid("measurement operators must be square and share one shape"));
        }
        let deviation = completeness_deviation(&operators).unwrap_or(f64::INFINITY);
        if deviation > policy.completeness_tol {
            return Err(Error::NotTracePreserving { deviation });
        }
        let effects = operators.iter().map(|m| m.adjoint() * m).collect();
        Ok(Measurement {
            dim,
            operators,
            effects,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

/// Outcome probabilities `p_k = tr(M_k^dagger M_k E(rho))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub probabilities: Vec<f64>,
}

impl ClassDistribution {
    /// Indices of the largest and second largest probability; ties resolved
    /// toward the lower index.
    pub fn top_two(&self) -> (usize, usize) {
        let mut order: Vec<usize> = (0..self.probabilities.len()).collect();
        order.sort_by(|&a, &b| self.probabilities[b].total_cmp(&self.probabilities[a]).then(a.cmp(&b)));
        (order[0], order[1])
    }

    /// `sqrt(p1) - sqrt(p2)` for the two largest probabilities.
    pub fn margin(&self) -> f64 {
        let (first, second) = self.top_two();
        self.probabilities[first].sqrt() - self.probabilities[second].sqrt()
    }
}

/// Outcome of [`Classifier::classify`].
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: usize,
    pub distribution: ClassDistribution,
    /// `sqrt(p1) - sqrt(p2)`.
    pub margin: f64,
    /// Another class is within `tie_tol` of the winner.
    pub tie: bool,
    /// Every class tied with the winner (including it).
    pub tied_classes: Vec<usize>,
}

impl Classification {
    /// The classifier did not strictly prefer `label`: either it picked
    /// another class or `label` is tied with another class.
    pub fn changes_or_ties(&self, label: usize) -> bool {
        self.label != label || self.tie
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    channel: KrausChannel,
    measurement: Measurement,
    labels: Vec<String>,
    policy: NumericPolicy,
}

impl Classifier {
    pub fn new(channel: KrausChannel, measurement: Measurement, labels: Vec<String>) -> Result<Self> {
        Self::with_policy(channel, measurement, labels, NumericPolicy::default())
    }

    pub fn with_policy(
        channel: KrausChannel,
        measurement: Measurement,
        labels: Vec<String>,
        policy: NumericPolicy,
    ) -> Result<Self> {
        if channel.dim_out() != measurement.dim() {
            return Err(Error::DimensionMismatch {
                expected: channel.dim_out(),
                found: measurement.dim(),
            });
        }
        if channel.dim_in() != channel.dim_out() {
            return Err(Error::invalid(
                "classifier channels must keep the dimension (dim_in = dim_out)",
            ));
        }
        if labels.len() != measurement.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} measurement operators",
                labels.len(),
                measurement.len()
            )));
        }
        Ok(Classifier {
            channel,
            measurement,
            labels,
            policy,
        })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn measurement(&self) -> &Measurement {
        &self.measurement
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn policy(&self) -> &NumericPolicy {
        &self.policy
    }

    pub fn set_policy(&mut self, policy: NumericPolicy) {
        self.policy = policy;
    }

    pub fn num_classes(&self) -> usize {
        self.measurement.len()
    }

    pub fn input_dim(&self) -> usize {
        self.channel.dim_in()
    }

    /// Effect operator of class `k` pulled back through the channel:
    /// `E^dagger(M_k^dagger M_k)`.
    pub fn pulled_back_effect(&self, k: usize) -> Result<ComplexMatrix> {
        self.channel.dual_apply(&self.measurement.effects()[k])
    }

    /// `E^dagger(M_l^dagger M_l - M_k^dagger M_k)`; `tr(W sigma) <= 0` means
    /// class `k` scores at least as high as `l` on `sigma`.
    pub fn decision_operator(&self, l: usize, k: usize) -> Result<ComplexMatrix> {
        let effects = self.measurement.effects();
        self.channel.dual_apply(&(&effects[l] - &effects[k]))
    }

    pub fn class_probabilities(&self, rho: &DensityMatrix) -> Result<ClassDistribution> {
        let out = self.channel.apply(rho)?;
        let probabilities = self
            .measurement
            .effects()
            .iter()
            .map(|e| trace_product(e, out.matrix()).re.clamp(0.0, 1.0))
            .collect();
        Ok(ClassDistribution { probabilities })
    }

    pub fn classify(&self, rho: &DensityMatrix) -> Result<Classification> {
        let distribution = self.class_probabilities(rho)?;
        Ok(self.classification_from(distribution))
    }

    pub fn classify_pure(&self, psi: &PureState) -> Result<Classification> {
        self.classify(&psi.to_density())
    }

    pub(crate) fn classification_from(&self, distribution: ClassDistribution) -> Classification {
        let (best_index, _) = distribution.top_two();
        let best = distribution.probabilities[best_index];
        let tied_classes: Vec<usize> = distribution
            .probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| best - p <= self.policy.tie_tol)
            .map(|(k, _)| k)
            .collect();
        let margin = distribution.margin();
        Classification {
            label: tied_classes[0],
            margin,
            tie: tied_classes.len() > 1,
            tied_classes,
            distribution,
        }
    }

    /// Fraction of entries whose predicted label matches the stored one.
    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::invalid("accuracy of an empty dataset is undefined"));
        }
        let mut correct = 0usize;
        for (i, entry) in data.entries().iter().enumerate() {
            let rho = entry.state.to_density();
            let c = self.classify(&rho).map_err(|e| e.at_state(i))?;
            if c.label == entry.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

/// A dataset state, kept in the form it was given.
#[derive(Debug, Clone, PartialEq)]
pub enum DataState {
    Pure(PureState),
    Density(DensityMatrix),
}

impl DataState {
    pub fn dim(&self) -> usize {
        match self {
            DataState::Pure(p) => p.dim(),
            DataState::Density(d) => d.dim(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            DataState::Pure(p) => p.to_density(),
            DataState::Density(d) => d.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            DataState::Pure(p) => Some(p),
            DataState::Density(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEntry {
    pub state: DataState,
    pub label: usize,
}

/// `T = {(rho_i, c_i)}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    entries: Vec<LabeledEntry>,
}

impl LabeledDataset {
    pub fn new(entries: Vec<LabeledEntry>) -> Self {
        LabeledDataset { entries }
    }

    pub fn push(&mut self, state: DataState, label: usize) {
        self.entries.push(LabeledEntry { state, label });
    }

    pub fn entries(&self) -> &[LabeledEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks labels and dimensions against a classifier.
    pub fn check_against(&self, classifier: &Classifier) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.label >= classifier.num_classes() {
                return Err(Error::invalid(format!(
                    "label {} out of range for {} classes",
                    e.label,
                    classifier.num_classes()
                ))
                .at_state(i));
            }
            if e.state.dim() != classifier.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: classifier.input_dim(),
                    found: e.state.dim(),
                }
                .at_state(i));
            }
        }
        Ok(())
    }
}
