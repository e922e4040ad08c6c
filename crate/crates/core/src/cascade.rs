//! Multi-stage cascade classification with early exit.
//!
//! Every stage sees the raw instance. Stages run in order and the first one
//! that answers +1 ends the cascade with a positive verdict; if none does, the
//! last stage's -1 stands. With a melanoma-sensitive first stage this makes
//! the cascade's positive set the union of the stages' positive sets, which
//! can only lower false negatives (and can only raise false positives).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{read_file, Error, Result};
use crate::svm::artifact::load_weight_artifact;
use crate::svm::{classify, validate_name, ClassLabel, FeatureVector, Instance, WeightArtifact};

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeStage {
    pub name: String,
    pub weights: WeightArtifact,
}

impl CascadeStage {
    pub fn new(name: impl Into<String>, weights: WeightArtifact) -> Result<Self> {
        let name = name.into();
        validate_name(&name)?;
        Ok(CascadeStage { name, weights })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSpec {
    stages: Vec<CascadeStage>,
}

impl CascadeSpec {
    pub fn new(stages: Vec<CascadeStage>) -> Result<Self> {
        let first = stages
            .first()
            .ok_or_else(|| Error::Structural("cascade needs at least one stage".into()))?;
        let dim = first.weights.dimension();
        let mut seen = HashSet::new();
        for s in &stages {
            if s.weights.dimension() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: s.weights.dimension(),
                    context: Some(format!("stage `{}`", s.name)),
                });
            }
            if !seen.insert(s.name.as_str()) {
                return Err(Error::Structural(format!("duplicate stage name `{}`", s.name)));
            }
        }
        Ok(CascadeSpec { stages })
    }

    /// A cascade whose stages are named after their weight artifacts.
    pub fn from_weights(weights: impl IntoIterator<Item = WeightArtifact>) -> Result<Self> {
        let stages = weights
            .into_iter()
            .map(|w| CascadeStage::new(w.name().to_string(), w))
            .collect::<Result<Vec<_>>>()?;
        CascadeSpec::new(stages)
    }

    pub fn stages(&self) -> &[CascadeStage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dimension(&self) -> usize {
        self.stages[0].weights.dimension()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeResult {
    pub label: ClassLabel,
    /// 1-based index of the stage that produced the verdict.
    pub exit_stage: usize,
    /// One distance per evaluated stage.
    pub per_stage_distances: Vec<f64>,
}

pub fn cascade_classify(spec: &CascadeSpec, x: &FeatureVector) -> Result<CascadeResult> {
    let mut distances = Vec::with_capacity(spec.len());
    for (k, stage) in spec.stages.iter().enumerate() {
        let o = classify(&stage.weights, x)?;
        distances.push(o.distance);
        if o.label.is_positive() || k + 1 == spec.len() {
            return Ok(CascadeResult {
                label: o.label,
                exit_stage: k + 1,
                per_stage_distances: distances,
            });
        }
    }
    unreachable!("cascade has at least one stage")
}

/// Classifies every instance; results are in input order. A dimension
/// mismatch reports the index of the first offending instance.
pub fn cascade_classify_batch<T>(spec: &CascadeSpec, instances: &[T]) -> Result<Vec<CascadeResult>>
where
    T: AsRef<FeatureVector> + Sync,
{
    let dim = spec.dimension();
    if let Some((i, x)) = instances
        .iter()
        .enumerate()
        .find(|(_, x)| x.as_ref().dimension() != dim)
    {
        return Err(Error::Dimension {
            expected: dim,
            found: x.as_ref().dimension(),
            context: Some(format!("instance {i}")),
        });
    }
    instances
        .par_iter()
        .map(|x| cascade_classify(spec, x.as_ref()))
        .collect()
}

impl AsRef<FeatureVector> for FeatureVector {
    fn as_ref(&self) -> &FeatureVector {
        self
    }
}

impl AsRef<FeatureVector> for Instance {
    fn as_ref(&self) -> &FeatureVector {
        &self.features
    }
}

/// Confusion counts with +1 (melanoma) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        match (truth, predicted) {
            (ClassLabel::Positive, ClassLabel::Positive) => self.tp += 1,
            (ClassLabel::Negative, ClassLabel::Negative) => self.tn += 1,
            (ClassLabel::Negative, ClassLabel::Positive) => self.fp += 1,
            (ClassLabel::Positive, ClassLabel::Negative) => self.fn_ += 1,
        }
    }

    pub fn tally(pairs: impl IntoIterator<Item = (ClassLabel, ClassLabel)>) -> Self {
        let mut c = ConfusionCounts::default();
        for (t, p) in pairs {
            c.record(t, p);
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub counts: ConfusionCounts,
    /// `None` when the ratio's denominator is zero.
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    /// Entry `k` counts instances that exited at stage `k + 1`.
    pub exit_histogram: Vec<usize>,
}

impl EvaluationReport {
    pub fn from_results(
        n_stages: usize,
        truths: impl IntoIterator<Item = ClassLabel>,
        results: &[CascadeResult],
    ) -> Self {
        let mut counts = ConfusionCounts::default();
        let mut exit_histogram = vec![0; n_stages];
        for (t, r) in truths.into_iter().zip(results) {
            counts.record(t, r.label);
            exit_histogram[r.exit_stage - 1] += 1;
        }
        EvaluationReport {
            counts,
            accuracy: counts.accuracy(),
            sensitivity: counts.sensitivity(),
            specificity: counts.specificity(),
            exit_histogram,
        }
    }
}

/// Runs the cascade over labeled instances and tallies the outcome.
pub fn evaluate(spec: &CascadeSpec, instances: &[Instance]) -> Result<EvaluationReport> {
    let truths = labels_of(instances)?;
    let results = cascade_classify_batch(spec, instances)?;
    Ok(EvaluationReport::from_results(spec.len(), truths, &results))
}

pub(crate) fn labels_of(instances: &[Instance]) -> Result<Vec<ClassLabel>> {
    instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            inst.label
                .ok_or_else(|| Error::Structural(format!("instance {i} has no label")))
        })
        .collect()
}

/// Entries of a cascade spec file: `cascade v1` then `stage <name> <path>` lines.
pub fn parse_cascade_file(bytes: &[u8]) -> Result<Vec<(String, PathBuf)>> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::parse(1, "invalid UTF-8"))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| {
        let l = l.trim();
        !l.is_empty() && !l.starts_with('#')
    });
    match lines.next() {
        Some((_, l)) if l.trim() == "cascade v1" => {}
        Some((i, l)) => return Err(Error::parse(i + 1, format!("expected `cascade v1`, found {l:?}"))),
        None => return Err(Error::parse(1, "empty cascade file")),
    }
    let mut out = Vec::new();
    for (i, l) in lines {
        let mut tok = l.split_whitespace();
        match (tok.next(), tok.next(), tok.next(), tok.next()) {
            (Some("stage"), Some(name), Some(path), None) => {
                out.push((name.to_string(), PathBuf::from(path)))
            }
            _ => return Err(Error::parse(i + 1, format!("expected `stage <name> <path>`, found {l:?}"))),
        }
    }
    if out.is_empty() {
        return Err(Error::Structural("cascade file lists no stages".into()));
    }
    Ok(out)
}

pub fn serialize_cascade_file(entries: &[(String, PathBuf)]) -> Vec<u8> {
    let mut out = String::from("cascade v1\n");
    for (name, path) in entries {
        out.push_str(&format!("stage {} {}\n", name, path.display()));
    }
    out.into_bytes()
}

/// Loads a cascade file; relative artifact paths resolve against its directory.
pub fn load_cascade(path: &Path) -> Result<CascadeSpec> {
    let bytes = read_file(path)?;
    let entries = parse_cascade_file(&bytes).map_err(|e| e.context(path.display().to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let stages = entries
        .into_iter()
        .map(|(name, p)| {
            let p = if p.is_absolute() { p } else { base.join(p) };
            CascadeStage::new(name, load_weight_artifact(&p)?)
        })
        .collect::<Result<Vec<_>>>()?;
    CascadeSpec::new(stages).map_err(|e| e.context(path.display().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::classify;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(name: &str, ac: &[f64], b: f64) -> WeightArtifact {
        WeightArtifact::new(name, ac.to_vec(), b).unwrap()
    }

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    // Stage 1 fires on x0 >= 1, stage 2 on x1 >= 1.
    fn two_stage() -> CascadeSpec {
        CascadeSpec::from_weights([w("M", &[1.0, 0.0], 1.0), w("N", &[0.0, 1.0], 1.0)]).unwrap()
    }

    #[test]
    fn stage_one_positive_exits_early() {
        let r = cascade_classify(&two_stage(), &fv(&[2.0, 5.0])).unwrap();
        assert_eq!(r.label, ClassLabel::Positive);
        assert_eq!(r.exit_stage, 1);
        assert_eq!(r.per_stage_distances, vec![1.0]);
    }

    #[test]
    fn all_negative_exits_last() {
        let r = cascade_classify(&two_stage(), &fv(&[0.0, 0.0])).unwrap();
        assert_eq!((r.label, r.exit_stage), (ClassLabel::Negative, 2));
        assert_eq!(r.per_stage_distances.len(), 2);
    }

    #[test]
    fn second_stage_can_confirm_positive() {
        let r = cascade_classify(&two_stage(), &fv(&[0.0, 3.0])).unwrap();
        assert_eq!((r.label, r.exit_stage), (ClassLabel::Positive, 2));
        assert_eq!(r.per_stage_distances, vec![-1.0, 2.0]);
    }

    #[test]
    fn spec_invariants() {
        assert!(CascadeSpec::new(vec![]).is_err());
        let e = CascadeSpec::from_weights([w("A", &[1.0], 0.0), w("B", &[1.0, 2.0], 0.0)]).unwrap_err();
        assert!(matches!(e, Error::Dimension { .. }));
        let e = CascadeSpec::from_weights([w("A", &[1.0], 0.0), w("A", &[2.0], 0.0)]).unwrap_err();
        assert!(matches!(e, Error::Structural(_)));
    }

    #[test]
    fn single_stage_matches_classify() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let wt = w("S", &[0.3, -0.7, 1.1], 0.1);
        let spec = CascadeSpec::from_weights([wt.clone()]).unwrap();
        for _ in 0..100 {
            let x = fv(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            let r = cascade_classify(&spec, &x).unwrap();
            let o = classify(&wt, &x).unwrap();
            assert_eq!(r.label, o.label);
            assert_eq!(r.exit_stage, 1);
            assert_eq!(r.per_stage_distances, vec![o.distance]);
        }
    }

    #[test]
    fn batch_edge_cases() {
        let spec = two_stage();
        let empty: Vec<FeatureVector> = vec![];
        assert!(cascade_classify_batch(&spec, &empty).unwrap().is_empty());
        let one = vec![fv(&[0.0, 3.0])];
        assert_eq!(
            cascade_classify_batch(&spec, &one).unwrap(),
            vec![cascade_classify(&spec, &one[0]).unwrap()]
        );
        let bad = vec![fv(&[0.0, 3.0]), fv(&[1.0]), fv(&[1.0, 2.0, 3.0])];
        match cascade_classify_batch(&spec, &bad).unwrap_err() {
            Error::Dimension { context: Some(c), .. } => assert_eq!(c, "instance 1"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn batch_matches_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = two_stage();
        let xs: Vec<_> = (0..2000)
            .map(|_| fv(&[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]))
            .collect();
        let seq: Vec<_> = xs.iter().map(|x| cascade_classify(&spec, x).unwrap()).collect();
        assert_eq!(cascade_classify_batch(&spec, &xs).unwrap(), seq);
    }

    #[test]
    fn evaluation_perfect_and_missed() {
        let spec = two_stage();
        let insts = vec![
            Instance { label: Some(ClassLabel::Positive), features: fv(&[2.0, 0.0]) },
            Instance { label: Some(ClassLabel::Negative), features: fv(&[0.0, 0.0]) },
        ];
        let r = evaluate(&spec, &insts).unwrap();
        assert_eq!(r.accuracy, Some(1.0));
        assert_eq!(r.counts.fn_, 0);
        assert_eq!(r.exit_histogram, vec![1, 1]);

        let missed = vec![Instance { label: Some(ClassLabel::Positive), features: fv(&[0.0, 0.0]) }];
        let r = evaluate(&spec, &missed).unwrap();
        assert_eq!(r.counts.fn_, 1);
        assert_eq!(r.sensitivity, Some(0.0));
        assert_eq!(r.specificity, None);

        let unlabeled = vec![Instance { label: None, features: fv(&[0.0, 0.0]) }];
        assert!(evaluate(&spec, &unlabeled).is_err());
    }

    #[test]
    fn evaluation_matches_tally_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = CascadeSpec::from_weights([
            w("A", &[0.5, -0.2, 0.9], -0.1),
            w("B", &[-0.4, 0.8, 0.1], 0.3),
            w("C", &[0.2, 0.2, -0.6], 0.0),
        ])
        .unwrap();
        let insts: Vec<Instance> = (0..500)
            .map(|_| Instance {
                label: Some(if rng.gen_bool(0.4) { ClassLabel::Positive } else { ClassLabel::Negative }),
                features: fv(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]),
            })
            .collect();
        let report = evaluate(&spec, &insts).unwrap();
        // Oracle: recompute each stage's sign by hand and apply first-positive-wins.
        let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
        let mut hist = [0usize; 3];
        for inst in &insts {
            let mut pred = -1;
            let mut exit = 3;
            for (k, s) in spec.stages().iter().enumerate() {
                let d: f64 = s.weights.ac().iter().zip(inst.features.values()).map(|(a, b)| a * b).sum::<f64>()
                    - s.weights.bias();
                if d >= 0.0 {
                    pred = 1;
                    exit = k + 1;
                    break;
                }
            }
            hist[exit - 1] += 1;
            match (inst.label.unwrap().value(), pred) {
                (1, 1) => tp += 1,
                (-1, -1) => tn += 1,
                (-1, 1) => fp += 1,
                _ => fn_ += 1,
            }
        }
        assert_eq!(report.counts, ConfusionCounts { tp, tn, fp, fn_ });
        assert_eq!(report.exit_histogram, hist.to_vec());
        assert_eq!(report.counts.total(), insts.len());
    }

    #[test]
    fn cascade_file_parsing() {
        let e = parse_cascade_file(b"cascade v1\nstage M m.ac\nstage N /abs/n.ac\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0], ("M".to_string(), PathBuf::from("m.ac")));
        assert_eq!(serialize_cascade_file(&e), b"cascade v1\nstage M m.ac\nstage N /abs/n.ac\n");
        assert!(matches!(parse_cascade_file(b"cascade v2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_cascade_file(b"cascade v1\nstage M\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_cascade_file(b"cascade v1\n").is_err());
    }
}
