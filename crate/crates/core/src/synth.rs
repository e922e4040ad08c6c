//! Seeded synthetic models and instance streams.
//!
//! Everything here is driven by a caller-supplied RNG so that a seed fully
//! determines the output. The two-stage generator mimics the screening setup:
//! a ground-truth hyperplane, one stage shifted towards the positive class and
//! one shifted towards the negative class.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::svm::{accumulate_weights, ClassLabel, FeatureVector, Instance, SupportVector, SvmModel, WeightArtifact};

fn coefficient(rng: &mut impl Rng) -> f64 {
    let magnitude = rng.gen_range(0.05..1.0);
    if rng.gen_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

fn uniform_vector(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Random linear-kernel model: features in [-1, 1), coefficients of either sign.
pub fn random_model(rng: &mut impl Rng, name: &str, dim: usize, n_svs: usize) -> Result<SvmModel> {
    let svs = (0..n_svs.max(1))
        .map(|_| SupportVector::new(coefficient(rng), FeatureVector::new(uniform_vector(rng, dim, 1.0))?))
        .collect::<Result<Vec<_>>>()?;
    SvmModel::new(name, dim, rng.gen_range(-1.0..1.0), svs)
}

/// Model whose accumulated weights come out (up to rounding) as `target_ac`.
/// The first `n_svs - 1` vectors are random; the last one, with coefficient 1,
/// carries the remainder.
pub fn model_with_weights(
    rng: &mut impl Rng,
    name: &str,
    target_ac: &[f64],
    bias: f64,
    n_svs: usize,
) -> Result<SvmModel> {
    let dim = target_ac.len();
    let mut svs = Vec::with_capacity(n_svs.max(1));
    let mut rest = target_ac.to_vec();
    for _ in 1..n_svs.max(1) {
        let c = coefficient(rng);
        let v = uniform_vector(rng, dim, 1.0);
        for (r, x) in rest.iter_mut().zip(&v) {
            *r -= c * x;
        }
        svs.push(SupportVector::new(c, FeatureVector::new(v)?)?);
    }
    svs.push(SupportVector::new(1.0, FeatureVector::new(rest)?)?);
    SvmModel::new(name, dim, bias, svs)
}

#[derive(Debug, Clone)]
pub struct ScreeningTask {
    /// Ground-truth separating hyperplane.
    pub truth: WeightArtifact,
    /// Stage 1: leans positive, few false negatives.
    pub sensitive: SvmModel,
    /// Stage 2: leans negative, few false positives.
    pub specific: SvmModel,
}

impl ScreeningTask {
    pub fn stage_weights(&self) -> Result<(WeightArtifact, WeightArtifact)> {
        Ok((accumulate_weights(&self.sensitive)?, accumulate_weights(&self.specific)?))
    }
}

/// Two-stage screening problem. `shift` moves each stage's threshold away from
/// the truth in opposite directions; `noise` perturbs each stage's weights.
pub fn screening_task(
    rng: &mut impl Rng,
    dim: usize,
    svs: (usize, usize),
    shift: f64,
    noise: f64,
) -> Result<ScreeningTask> {
    let w = uniform_vector(rng, dim, 1.0);
    let b = rng.gen_range(-0.1..0.1);
    let truth = WeightArtifact::new("truth", w.clone(), b)?;
    let m_ac: Vec<f64> = w.iter().map(|x| x + noise * rng.gen_range(-1.0..1.0)).collect();
    let n_ac: Vec<f64> = w.iter().map(|x| x + noise * rng.gen_range(-1.0..1.0)).collect();
    let sensitive = model_with_weights(rng, "M", &m_ac, b - shift, svs.0)?;
    let specific = model_with_weights(rng, "N", &n_ac, b + shift, svs.1)?;
    Ok(ScreeningTask { truth, sensitive, specific })
}

/// Instances in [-1, 1)^d labeled by `truth`, each label flipped with
/// probability `flip`.
pub fn labeled_instances(rng: &mut impl Rng, truth: &WeightArtifact, n: usize, flip: f64) -> Result<Vec<Instance>> {
    (0..n)
        .map(|_| {
            let features = FeatureVector::new(uniform_vector(rng, truth.dimension(), 1.0))?;
            let mut label = crate::svm::classify(truth, &features)?.label;
            if flip > 0.0 && rng.gen_bool(flip) {
                label = match label {
                    ClassLabel::Positive => ClassLabel::Negative,
                    ClassLabel::Negative => ClassLabel::Positive,
                };
            }
            Ok(Instance { label: Some(label), features })
        })
        .collect()
}

/// Deterministic RNG for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
