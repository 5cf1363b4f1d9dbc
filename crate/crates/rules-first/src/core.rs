//! Domain types shared by every trainer: sparse examples, rule sets,
//! linear models and their composition into rules-first classifiers,
//! plus the four loss functions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("feature index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },
    #[error("non-finite feature value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("label must be -1 or +1, got {0}")]
    BadLabel(f64),
    #[error("duplicate rule for feature {0}")]
    DuplicateRule(usize),
    #[error("duplicate feature index {0}")]
    DuplicateIndex(usize),
    #[error("weight vector has length {got}, expected {expected}")]
    WeightLength { got: usize, expected: usize },
    #[error("norm bound must be positive, got {0}")]
    NonPositiveBound(f64),
    #[error("{0}-norm {1} exceeds bound {2}")]
    NormViolation(&'static str, f64, f64),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dimension must be positive")]
    ZeroDimension,
}

/// Binary class label, encoded as the sign it contributes to margins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn signum(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    /// Prediction convention: a zero score maps to the negative class.
    pub fn from_score(score: f64) -> Label {
        if score > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn from_signum(v: f64) -> Result<Label, CoreError> {
        if v == 1.0 {
            Ok(Label::Positive)
        } else if v == -1.0 {
            Ok(Label::Negative)
        } else {
            Err(CoreError::BadLabel(v))
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

/// Sparse feature vector: (index, value) pairs sorted by index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct SparseVec {
    entries: Vec<(usize, f64)>,
}

impl SparseVec {
    /// Builds a sparse vector from arbitrary-order entries. Zero values are
    /// dropped; duplicate indices are rejected via the sort order check.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<SparseVec, CoreError> {
        entries.retain(|&(_, v)| v != 0.0);
        for &(i, v) in &entries {
            if !v.is_finite() {
                return Err(CoreError::NonFiniteValue { index: i });
            }
        }
        entries.sort_unstable_by_key(|&(i, _)| i);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(CoreError::DuplicateIndex(pair[0].0));
            }
        }
        Ok(SparseVec { entries })
    }

    pub fn from_dense(values: &[f64]) -> SparseVec {
        SparseVec {
            entries: values
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, v)| v * dense.get(i).copied().unwrap_or(0.0))
            .sum()
    }

    /// Copy with the given feature coordinates removed.
    pub fn without_features(&self, drop: &[usize]) -> SparseVec {
        SparseVec {
            entries: self
                .entries
                .iter()
                .filter(|&&(i, _)| !drop.contains(&i))
                .copied()
                .collect(),
        }
    }
}

/// One labeled training or test point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: SparseVec,
    pub label: Label,
}

impl Example {
    pub fn new(features: SparseVec, label: Label) -> Example {
        Example { features, label }
    }
}

/// A fixed-dimension collection of examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    examples: Vec<Example>,
    dimension: usize,
}

impl Dataset {
    pub fn new(dimension: usize, examples: Vec<Example>) -> Result<Dataset, CoreError> {
        if dimension == 0 {
            return Err(CoreError::ZeroDimension);
        }
        for ex in &examples {
            if let Some(max) = ex.features.max_index() {
                if max >= dimension {
                    return Err(CoreError::IndexOutOfRange {
                        index: max,
                        dimension,
                    });
                }
            }
        }
        Ok(Dataset {
            examples,
            dimension,
        })
    }

    pub fn empty(dimension: usize) -> Result<Dataset, CoreError> {
        Dataset::new(dimension, Vec::new())
    }

    pub fn push(&mut self, ex: Example) -> Result<(), CoreError> {
        if let Some(max) = ex.features.max_index() {
            if max >= self.dimension {
                return Err(CoreError::IndexOutOfRange {
                    index: max,
                    dimension: self.dimension,
                });
            }
        }
        self.examples.push(ex);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn iter(&self) -> impl Iterator<Item = &Example> {
        self.examples.iter()
    }

    /// New dataset keeping the examples selected by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&Example) -> bool) -> Dataset {
        Dataset {
            dimension: self.dimension,
            examples: self.examples.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    /// Split into (first `n`, rest), preserving order.
    pub fn split_at(&self, n: usize) -> (Dataset, Dataset) {
        let n = n.min(self.examples.len());
        (
            Dataset {
                dimension: self.dimension,
                examples: self.examples[..n].to_vec(),
            },
            Dataset {
                dimension: self.dimension,
                examples: self.examples[n..].to_vec(),
            },
        )
    }

    pub fn concat(&self, other: &Dataset) -> Result<Dataset, CoreError> {
        let mut examples = self.examples.clone();
        examples.extend(other.examples.iter().cloned());
        Dataset::new(self.dimension.max(other.dimension), examples)
    }
}

/// A single-feature rule: fires on strictly positive values of its feature
/// and then forces the attached label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub feature: usize,
    pub label: Label,
}

impl Rule {
    pub fn fires_on(&self, x: &SparseVec) -> bool {
        x.get(self.feature) > 0.0
    }
}

/// Ordered rule list; the first firing rule decides the prediction.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<RuleSet, CoreError> {
        for (i, r) in rules.iter().enumerate() {
            if rules[..i].iter().any(|p| p.feature == r.feature) {
                return Err(CoreError::DuplicateRule(r.feature));
            }
        }
        Ok(RuleSet { rules })
    }

    pub fn empty() -> RuleSet {
        RuleSet { rules: Vec::new() }
    }

    pub fn push(&mut self, rule: Rule) -> Result<(), CoreError> {
        if self.rules.iter().any(|p| p.feature == rule.feature) {
            return Err(CoreError::DuplicateRule(rule.feature));
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn feature_indices(&self) -> Vec<usize> {
        self.rules.iter().map(|r| r.feature).collect()
    }

    /// First rule that fires on `x`, scanning in insertion order.
    pub fn first_fired(&self, x: &SparseVec) -> Option<Rule> {
        self.rules.iter().copied().find(|r| r.fires_on(x))
    }

    pub fn covers(&self, x: &SparseVec) -> bool {
        self.first_fired(x).is_some()
    }
}

/// Norm regime a linear model was trained under. Ball regimes are hard
/// constraints on the weight vector; penalty regimes scale a regularizer
/// by 1/C in the training objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormRegime {
    L2Ball(f64),
    L1Ball(f64),
    L2Penalty(f64),
    L1Penalty(f64),
}

/// Relative slack absorbed by ball-constraint checks, covering projection
/// round-off.
pub const NORM_SLACK: f64 = 1e-9;

impl NormRegime {
    pub fn bound(&self) -> f64 {
        match *self {
            NormRegime::L2Ball(b)
            | NormRegime::L1Ball(b)
            | NormRegime::L2Penalty(b)
            | NormRegime::L1Penalty(b) => b,
        }
    }

    pub fn is_ball(&self) -> bool {
        matches!(self, NormRegime::L2Ball(_) | NormRegime::L1Ball(_))
    }

    pub fn is_penalty(&self) -> bool {
        !self.is_ball()
    }
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dense linear classifier under a declared norm regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub norm_regime: NormRegime,
    pub margin_scale: f64,
}

impl LinearModel {
    pub fn new(
        weights: Vec<f64>,
        bias: f64,
        norm_regime: NormRegime,
    ) -> Result<LinearModel, CoreError> {
        let bound = norm_regime.bound();
        if bound <= 0.0 {
            return Err(CoreError::NonPositiveBound(bound));
        }
        match norm_regime {
            NormRegime::L2Ball(b) => {
                let n = l2_norm(&weights);
                if n > b * (1.0 + NORM_SLACK) {
                    return Err(CoreError::NormViolation("l2", n, b));
                }
            }
            NormRegime::L1Ball(b) => {
                let n = l1_norm(&weights);
                if n > b * (1.0 + NORM_SLACK) {
                    return Err(CoreError::NormViolation("l1", n, b));
                }
            }
            _ => {}
        }
        Ok(LinearModel {
            weights,
            bias,
            norm_regime,
            margin_scale: 1.0,
        })
    }

    pub fn zeros(dimension: usize, norm_regime: NormRegime) -> Result<LinearModel, CoreError> {
        LinearModel::new(vec![0.0; dimension], 0.0, norm_regime)
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, x: &SparseVec) -> f64 {
        self.margin_scale * (x.dot(&self.weights) + self.bias)
    }

    pub fn predict(&self, x: &SparseVec) -> Label {
        Label::from_score(self.score(x))
    }
}

/// Where a rules-first prediction came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Attribution {
    /// The rule on this feature index fired.
    Rule(usize),
    /// No rule fired; the linear fallback decided.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub attribution: Attribution,
}

/// Rule set composed with a linear fallback; rules take precedence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RulesFirstModel {
    pub rule_set: RuleSet,
    pub linear: LinearModel,
}

impl RulesFirstModel {
    pub fn new(rule_set: RuleSet, linear: LinearModel) -> RulesFirstModel {
        RulesFirstModel { rule_set, linear }
    }

    pub fn predict(&self, x: &SparseVec) -> Prediction {
        match self.rule_set.first_fired(x) {
            Some(rule) => Prediction {
                label: rule.label,
                attribution: Attribution::Rule(rule.feature),
            },
            None => Prediction {
                label: self.linear.predict(x),
                attribution: Attribution::None,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Selector for the loss functions below.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    Mis,
    Hinge,
    Ramp,
    Margin,
}

/// Zero-one loss: 1 iff score and label disagree in sign (zero counts as a
/// mistake).
pub fn loss_mis(score: f64, label: Label) -> f64 {
    if score * label.signum() > 0.0 {
        0.0
    } else {
        1.0
    }
}

/// max(0, 1 - score * label).
pub fn loss_hinge(score: f64, label: Label) -> f64 {
    (1.0 - score * label.signum()).max(0.0)
}

/// Hinge clamped to [0, 1].
pub fn loss_ramp(score: f64, label: Label) -> f64 {
    (1.0 - score * label.signum()).clamp(0.0, 1.0)
}

/// Zero-one loss at margin 1: a margin of exactly 1 incurs no loss.
pub fn loss_margin(score: f64, label: Label) -> f64 {
    if score * label.signum() < 1.0 {
        1.0
    } else {
        0.0
    }
}

fn loss_of_margin(kind: LossKind, margin: f64) -> f64 {
    match kind {
        LossKind::Mis => {
            if margin > 0.0 {
                0.0
            } else {
                1.0
            }
        }
        LossKind::Hinge => (1.0 - margin).max(0.0),
        LossKind::Ramp => (1.0 - margin).clamp(0.0, 1.0),
        LossKind::Margin => {
            if margin < 1.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Signed margin y * score on an example; rule-fired predictions surrogate
/// the score with +/- infinity so that an agreeing rule incurs zero loss and
/// a disagreeing one the maximal loss of the selected kind.
pub trait MarginModel {
    fn signed_margin(&self, ex: &Example) -> f64;
}

impl MarginModel for LinearModel {
    fn signed_margin(&self, ex: &Example) -> f64 {
        self.score(&ex.features) * ex.label.signum()
    }
}

impl MarginModel for RulesFirstModel {
    fn signed_margin(&self, ex: &Example) -> f64 {
        match self.rule_set.first_fired(&ex.features) {
            Some(rule) => {
                if rule.label == ex.label {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
            None => self.linear.signed_margin(ex),
        }
    }
}

/// Arithmetic mean of the selected loss over the dataset.
pub fn empirical_loss<M: MarginModel>(
    model: &M,
    data: &Dataset,
    kind: LossKind,
) -> Result<f64, CoreError> {
    if data.is_empty() {
        return Err(CoreError::EmptyDataset);
    }
    let total: f64 = data
        .iter()
        .map(|ex| loss_of_margin(kind, model.signed_margin(ex)))
        .sum();
    Ok(total / data.len() as f64)
}

/// Fraction of correctly classified examples.
pub fn accuracy<M: MarginModel>(model: &M, data: &Dataset) -> Result<f64, CoreError> {
    Ok(1.0 - empirical_loss(model, data, LossKind::Mis)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(entries: &[(usize, f64)]) -> SparseVec {
        SparseVec::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn loss_mis_examples() {
        assert_eq!(loss_mis(2.0, Label::Positive), 0.0);
        assert_eq!(loss_mis(0.0, Label::Positive), 1.0);
        assert_eq!(loss_mis(-0.5, Label::Negative), 0.0);
    }

    #[test]
    fn loss_hinge_examples() {
        assert!((loss_hinge(0.3, Label::Positive) - 0.7).abs() < 1e-12);
        assert!((loss_hinge(-1.0, Label::Positive) - 2.0).abs() < 1e-12);
        assert_eq!(loss_hinge(5.0, Label::Positive), 0.0);
    }

    #[test]
    fn loss_ramp_examples() {
        assert_eq!(loss_ramp(-3.0, Label::Positive), 1.0);
        assert!((loss_ramp(0.5, Label::Positive) - 0.5).abs() < 1e-12);
        assert_eq!(loss_ramp(1.0, Label::Positive), 0.0);
    }

    #[test]
    fn loss_margin_examples() {
        assert_eq!(loss_margin(1.0, Label::Positive), 0.0);
        assert_eq!(loss_margin(0.99, Label::Positive), 1.0);
        assert_eq!(loss_margin(-2.0, Label::Negative), 0.0);
    }

    #[test]
    fn empirical_loss_linear_mis() {
        let model =
            LinearModel::new(vec![1.0, 0.0], 0.0, NormRegime::L2Ball(2.0)).unwrap();
        let data = Dataset::new(
            2,
            vec![
                Example::new(sv(&[(0, 1.0)]), Label::Positive),
                Example::new(sv(&[(0, -1.0)]), Label::Positive),
            ],
        )
        .unwrap();
        assert!((empirical_loss(&model, &data, LossKind::Mis).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empirical_loss_ramp_zero_at_margin() {
        let model =
            LinearModel::new(vec![2.0], 0.0, NormRegime::L2Ball(3.0)).unwrap();
        let data = Dataset::new(
            1,
            vec![Example::new(sv(&[(0, 1.0)]), Label::Positive)],
        )
        .unwrap();
        assert_eq!(empirical_loss(&model, &data, LossKind::Ramp).unwrap(), 0.0);
    }

    #[test]
    fn empirical_loss_fired_rule_disagrees() {
        let rules = RuleSet::new(vec![Rule {
            feature: 0,
            label: Label::Positive,
        }])
        .unwrap();
        let linear = LinearModel::zeros(2, NormRegime::L2Ball(1.0)).unwrap();
        let model = RulesFirstModel::new(rules, linear);
        let data = Dataset::new(
            2,
            vec![Example::new(sv(&[(0, 1.0)]), Label::Negative)],
        )
        .unwrap();
        assert_eq!(empirical_loss(&model, &data, LossKind::Mis).unwrap(), 1.0);
        // Maximal ramp loss for the disagreeing fired rule.
        assert_eq!(empirical_loss(&model, &data, LossKind::Ramp).unwrap(), 1.0);
    }

    #[test]
    fn empirical_loss_empty_dataset_errors() {
        let model = LinearModel::zeros(2, NormRegime::L2Ball(1.0)).unwrap();
        let data = Dataset::empty(2).unwrap();
        assert!(matches!(
            empirical_loss(&model, &data, LossKind::Mis),
            Err(CoreError::EmptyDataset)
        ));
    }

    #[test]
    fn predict_examples() {
        let rules = RuleSet::new(vec![
            Rule {
                feature: 3,
                label: Label::Positive,
            },
            Rule {
                feature: 5,
                label: Label::Negative,
            },
        ])
        .unwrap();
        let mut weights = vec![0.0; 6];
        weights[0] = -0.2;
        let linear = LinearModel::new(weights, 0.0, NormRegime::L2Ball(1.0)).unwrap();
        let model = RulesFirstModel::new(rules, linear);

        let p = model.predict(&sv(&[(3, 1.0)]));
        assert_eq!(p.label, Label::Positive);
        assert_eq!(p.attribution, Attribution::Rule(3));

        let p = model.predict(&sv(&[(0, 1.0)]));
        assert_eq!(p.label, Label::Negative);
        assert_eq!(p.attribution, Attribution::None);

        let p = model.predict(&sv(&[(5, 2.0)]));
        assert_eq!(p.label, Label::Negative);
        assert_eq!(p.attribution, Attribution::Rule(5));
    }

    #[test]
    fn fired_prediction_ignores_linear_weights() {
        let rules = RuleSet::new(vec![Rule {
            feature: 0,
            label: Label::Positive,
        }])
        .unwrap();
        let x = sv(&[(0, 1.0), (1, 5.0)]);
        let a = RulesFirstModel::new(
            rules.clone(),
            LinearModel::new(vec![0.0, -9.0], 0.0, NormRegime::L2Ball(10.0)).unwrap(),
        );
        let b = RulesFirstModel::new(
            rules,
            LinearModel::new(vec![0.0, 9.0], 1.0, NormRegime::L2Ball(10.0)).unwrap(),
        );
        assert_eq!(a.predict(&x), b.predict(&x));
    }

    #[test]
    fn sign_zero_is_negative() {
        let model = LinearModel::zeros(1, NormRegime::L2Ball(1.0)).unwrap();
        assert_eq!(model.predict(&sv(&[(0, 1.0)])), Label::Negative);
    }

    #[test]
    fn ball_invariant_enforced() {
        assert!(LinearModel::new(vec![3.0, 4.0], 0.0, NormRegime::L2Ball(1.0)).is_err());
        assert!(LinearModel::new(vec![0.6, 0.8], 0.0, NormRegime::L2Ball(1.0)).is_ok());
        assert!(LinearModel::new(vec![0.6, 0.8], 0.0, NormRegime::L1Ball(1.0)).is_err());
    }

    #[test]
    fn ruleset_rejects_duplicates() {
        let r = Rule {
            feature: 1,
            label: Label::Positive,
        };
        assert!(RuleSet::new(vec![r, r]).is_err());
    }

    #[test]
    fn dataset_rejects_out_of_range() {
        let ex = Example::new(sv(&[(5, 1.0)]), Label::Positive);
        assert!(Dataset::new(5, vec![ex]).is_err());
    }
}
