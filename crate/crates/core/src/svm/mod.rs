//! Linear SVM decision mathematics.
//!
//! A trained model is a list of support vectors with coefficients `alpha_i * y_i`
//! and a threshold `b`. Under a linear kernel the decision value for an instance
//! `x` is `sum_i coeff_i * (sv_i . x) - b`. Because the kernel is linear, the
//! support vectors can be folded offline into one accumulated weight vector
//! (`ac = sum_i coeff_i * sv_i`), which turns online classification into a
//! single dot product whose cost no longer depends on the number of support
//! vectors.
//!
//! All sums run in a fixed order (ascending support-vector index, then
//! ascending feature index) so that results are reproducible bit for bit.

pub mod artifact;
pub mod instances;
pub mod model_file;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use artifact::{parse_weight_artifact, serialize_weight_artifact};
pub use instances::{parse_instance_file, serialize_instances, Instance};
pub use model_file::{parse_model_file, serialize_model_file};

/// Dense feature vector. Never empty, never holds NaN or infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Structural("feature vector must not be empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Structural(format!(
                "feature {} is not finite ({})",
                i + 1,
                values[i]
            )));
        }
        Ok(FeatureVector(values))
    }

    /// All-zero vector of the given dimension.
    pub fn zeros(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        FeatureVector(vec![0.0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        FeatureVector::new(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    /// `alpha_i * y_i`
    pub coefficient: f64,
    pub features: FeatureVector,
}

impl SupportVector {
    pub fn new(coefficient: f64, features: FeatureVector) -> Result<Self> {
        if !coefficient.is_finite() || coefficient == 0.0 {
            return Err(Error::Structural(format!(
                "support vector coefficient must be finite and nonzero, got {coefficient}"
            )));
        }
        Ok(SupportVector {
            coefficient,
            features,
        })
    }
}

/// A trained linear SVM as produced by an offline trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    name: String,
    dimension: usize,
    bias: f64,
    support_vectors: Vec<SupportVector>,
}

impl SvmModel {
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        bias: f64,
        support_vectors: Vec<SupportVector>,
    ) -> Result<Self> {
        let name = name.into();
        validate_name(&name)?;
        if dimension == 0 {
            return Err(Error::Structural("model dimension must be positive".into()));
        }
        if !bias.is_finite() {
            return Err(Error::Structural(format!("model bias is not finite ({bias})")));
        }
        if support_vectors.is_empty() {
            return Err(Error::Structural("model has no support vectors".into()));
        }
        for (i, sv) in support_vectors.iter().enumerate() {
            if sv.features.dimension() != dimension {
                return Err(Error::Structural(format!(
                    "support vector {} has dimension {}, model dimension is {}",
                    i + 1,
                    sv.features.dimension(),
                    dimension
                )));
            }
        }
        Ok(SvmModel {
            name,
            dimension,
            bias,
            support_vectors,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn support_vectors(&self) -> &[SupportVector] {
        &self.support_vectors
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        validate_name(&name)?;
        self.name = name;
        Ok(self)
    }
}

/// The deployable per-core payload: accumulated weight vector plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightArtifact {
    name: String,
    ac: Vec<f64>,
    bias: f64,
}

impl WeightArtifact {
    pub fn new(name: impl Into<String>, ac: Vec<f64>, bias: f64) -> Result<Self> {
        let name = name.into();
        validate_name(&name)?;
        if ac.is_empty() {
            return Err(Error::Structural("weight vector must not be empty".into()));
        }
        if ac.iter().any(|v| !v.is_finite()) || !bias.is_finite() {
            return Err(Error::Structural("weight artifact holds a non-finite value".into()));
        }
        Ok(WeightArtifact { name, ac, bias })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.ac.len()
    }

    pub fn ac(&self) -> &[f64] {
        &self.ac
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        validate_name(&name)?;
        self.name = name;
        Ok(self)
    }

    pub fn norm(&self) -> f64 {
        self.ac.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Identifiers end up as whitespace-delimited tokens in text formats.
pub(crate) fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == '#') {
        return Err(Error::Structural(format!("invalid identifier {name:?}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum ClassLabel {
    /// -1, non-melanoma
    Negative,
    /// +1, melanoma
    Positive,
}

impl ClassLabel {
    pub fn value(self) -> i8 {
        match self {
            ClassLabel::Positive => 1,
            ClassLabel::Negative => -1,
        }
    }

    /// Sign rule: zero distance counts as positive.
    pub fn from_distance(distance: f64) -> Self {
        if distance >= 0.0 {
            ClassLabel::Positive
        } else {
            ClassLabel::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == ClassLabel::Positive
    }
}

impl From<ClassLabel> for i8 {
    fn from(l: ClassLabel) -> i8 {
        l.value()
    }
}

impl TryFrom<i8> for ClassLabel {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(ClassLabel::Positive),
            -1 => Ok(ClassLabel::Negative),
            other => Err(format!("class label must be +1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Positive => f.write_str("+1"),
            ClassLabel::Negative => f.write_str("-1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionOutcome {
    pub label: ClassLabel,
    pub distance: f64,
}

impl DecisionOutcome {
    pub fn from_distance(distance: f64) -> Self {
        DecisionOutcome {
            label: ClassLabel::from_distance(distance),
            distance,
        }
    }
}

/// Arithmetic used for evaluation. `Single` mirrors a 32-bit float datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    Single,
}

/// Folds the support vectors into the accumulated weight vector.
///
/// Fails only if the sum overflows to a non-finite value.
pub fn accumulate_weights(model: &SvmModel) -> Result<WeightArtifact> {
    let mut ac = vec![0.0f64; model.dimension];
    for sv in &model.support_vectors {
        for (acc, v) in ac.iter_mut().zip(sv.features.values()) {
            *acc += sv.coefficient * v;
        }
    }
    WeightArtifact::new(model.name.clone(), ac, model.bias)
}

pub fn decision_value(weights: &WeightArtifact, x: &FeatureVector) -> Result<f64> {
    decision_value_with(weights, x, Precision::Double)
}

pub fn decision_value_with(
    weights: &WeightArtifact,
    x: &FeatureVector,
    precision: Precision,
) -> Result<f64> {
    if weights.dimension() != x.dimension() {
        return Err(Error::dim(weights.dimension(), x.dimension()));
    }
    Ok(match precision {
        Precision::Double => dot(&weights.ac, x.values()) - weights.bias,
        Precision::Single => {
            let mut acc = 0.0f32;
            for (w, v) in weights.ac.iter().zip(x.values()) {
                acc += *w as f32 * *v as f32;
            }
            (acc - weights.bias as f32) as f64
        }
    })
}

pub fn classify(weights: &WeightArtifact, x: &FeatureVector) -> Result<DecisionOutcome> {
    decision_value(weights, x).map(DecisionOutcome::from_distance)
}

pub fn classify_with(
    weights: &WeightArtifact,
    x: &FeatureVector,
    precision: Precision,
) -> Result<DecisionOutcome> {
    decision_value_with(weights, x, precision).map(DecisionOutcome::from_distance)
}

/// Evaluates the kernel expansion directly, one support vector at a time,
/// without the accumulated-weight factorization.
pub fn classify_direct(model: &SvmModel, x: &FeatureVector) -> Result<DecisionOutcome> {
    classify_direct_with(model, x, Precision::Double)
}

pub fn classify_direct_with(
    model: &SvmModel,
    x: &FeatureVector,
    precision: Precision,
) -> Result<DecisionOutcome> {
    if model.dimension != x.dimension() {
        return Err(Error::dim(model.dimension, x.dimension()));
    }
    let distance = match precision {
        Precision::Double => {
            let mut sum = 0.0f64;
            for sv in &model.support_vectors {
                sum += sv.coefficient * dot(sv.features.values(), x.values());
            }
            sum - model.bias
        }
        Precision::Single => {
            let mut sum = 0.0f32;
            for sv in &model.support_vectors {
                let mut k = 0.0f32;
                for (a, b) in sv.features.values().iter().zip(x.values()) {
                    k += *a as f32 * *b as f32;
                }
                sum += sv.coefficient as f32 * k;
            }
            (sum - model.bias as f32) as f64
        }
    };
    Ok(DecisionOutcome::from_distance(distance))
}

/// Guard band below which the two evaluation routes may disagree on the sign.
pub fn label_guard_band(weights: &WeightArtifact, x: &FeatureVector) -> f64 {
    1e-9 * (1.0 + x.norm() * weights.norm())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}
