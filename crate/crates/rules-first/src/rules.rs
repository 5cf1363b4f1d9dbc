//! Rule detection and the greedy learners.
//!
//! `greedy_rule` is the coverage-thresholded algorithm: adopt perfect rules
//! while one covers more than m/(coverage_constant * k * (B+1)) of the
//! remaining sample, then fit a ball-constrained hinge classifier on what is
//! left. `greedy_eval_loss` is the evaluation-driven variant: forward
//! selection over candidate rules, refitting a penalized logistic classifier
//! with the rule columns removed and keeping the candidate that minimizes
//! held-out mis-classification loss.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{
    empirical_loss, CoreError, Dataset, Label, LinearModel, LossKind, NormRegime, Rule,
    RuleSet, RulesFirstModel,
};
use crate::linear::{
    train_constrained_hinge, train_penalized_logistic_warm, LinearError, TrainConfig,
};

#[derive(Debug, Error)]
pub enum RulesError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("rule budget k must be positive")]
    ZeroRuleBudget,
}

/// Tie handling when several perfect rules share the maximal coverage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    LowestIndex,
    HighestIndex,
}

#[derive(Clone, Debug)]
pub struct GreedyConfig {
    /// Target rule count entering the coverage threshold.
    pub k: usize,
    /// Linear-part norm budget entering the coverage threshold.
    pub b: f64,
    /// Constant in the admission bar m/(coverage_constant * k * (B+1)).
    pub coverage_constant: f64,
    pub train: TrainConfig,
    pub tie_break: TieBreak,
}

impl GreedyConfig {
    pub fn new(k: usize, b: f64) -> GreedyConfig {
        GreedyConfig {
            k,
            b,
            coverage_constant: 100.0,
            train: TrainConfig::new(NormRegime::L2Ball(b)),
            tie_break: TieBreak::LowestIndex,
        }
    }

    /// Admission bar: a rule must cover strictly more remaining examples.
    pub fn coverage_threshold(&self, m: usize) -> f64 {
        m as f64 / (self.coverage_constant * self.k as f64 * (self.b + 1.0))
    }

    /// Upper bound on how many rules the greedy loop can adopt.
    pub fn max_rules(&self, _m: usize) -> usize {
        (self.coverage_constant * self.k as f64 * (self.b + 1.0)).ceil() as usize
    }
}

/// Every feature that is a perfect rule for `for_label`: all examples with
/// x(j) > 0 carry that label, and at least one does. Sorted by coverage
/// descending, feature index ascending on ties.
pub fn find_perfect_rules(data: &Dataset, for_label: Label) -> Vec<(usize, usize)> {
    let d = data.dimension();
    let mut fired = vec![0usize; d];
    let mut matching = vec![0usize; d];
    for ex in data.iter() {
        for (j, v) in ex.features.iter() {
            if v > 0.0 {
                fired[j] += 1;
                if ex.label == for_label {
                    matching[j] += 1;
                }
            }
        }
    }
    let mut out: Vec<(usize, usize)> = (0..d)
        .filter(|&j| fired[j] > 0 && fired[j] == matching[j])
        .map(|j| (j, fired[j]))
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

/// The coverage-thresholded greedy learner. Adopts positive-label perfect
/// rules by maximal remaining coverage while one clears the admission bar,
/// discards covered examples, then trains the ball-constrained hinge
/// classifier on the remainder.
pub fn greedy_rule(data: &Dataset, config: &GreedyConfig) -> Result<RulesFirstModel, RulesError> {
    if data.is_empty() {
        return Err(RulesError::EmptyDataset);
    }
    if config.k == 0 {
        return Err(RulesError::ZeroRuleBudget);
    }
    let threshold = config.coverage_threshold(data.len());
    let mut remaining = data.clone();
    let mut rule_set = RuleSet::empty();

    loop {
        if remaining.is_empty() {
            break;
        }
        let candidates = find_perfect_rules(&remaining, Label::Positive);
        let admitted = candidates
            .iter()
            .filter(|&&(_, cov)| cov as f64 > threshold);
        let pick = match config.tie_break {
            // candidates are sorted (coverage desc, index asc)
            TieBreak::LowestIndex => admitted.take(1).next().copied(),
            TieBreak::HighestIndex => {
                let mut best: Option<(usize, usize)> = None;
                for &(j, cov) in admitted {
                    match best {
                        Some((bj, bcov)) if cov < bcov || (cov == bcov && j < bj) => {}
                        _ => best = Some((j, cov)),
                    }
                }
                best
            }
        };
        let Some((feature, _)) = pick else { break };
        rule_set.push(Rule {
            feature,
            label: Label::Positive,
        })?;
        remaining = remaining.filtered(|ex| ex.features.get(feature) <= 0.0);
    }

    let linear = if remaining.is_empty() {
        LinearModel::zeros(data.dimension(), config.train.regime)?
    } else {
        train_constrained_hinge(&remaining, &config.train)?
    };
    Ok(RulesFirstModel::new(rule_set, linear))
}

// ---------------------------------------------------------------------------
// Evaluation-loss greedy variant
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct EvalGreedyConfig {
    /// Maximum number of rules to adopt.
    pub budget: usize,
    /// Penalty-regime config for the committed and final linear fits.
    pub train: TrainConfig,
    /// Epochs for the short warm-started refits inside the candidate scan.
    pub candidate_epochs: usize,
    /// Keep adopting the best candidate even when evaluation loss does not
    /// improve, until the budget is exhausted.
    pub force_budget: bool,
}

impl EvalGreedyConfig {
    pub fn new(budget: usize, train: TrainConfig) -> EvalGreedyConfig {
        EvalGreedyConfig {
            budget,
            train,
            candidate_epochs: 15,
            force_budget: false,
        }
    }
}

/// Outcome of the forward selection: the final model plus the rule order
/// and the evaluation-loss trajectory (entry 0 is the rule-free baseline).
#[derive(Clone, Debug)]
pub struct GreedySelection {
    pub model: RulesFirstModel,
    pub chosen: Vec<Rule>,
    pub eval_loss_path: Vec<f64>,
}

/// Fits the linear part for a fixed rule list: trains on the examples not
/// covered by any rule, with the rule feature columns zeroed out, so that
/// dimension stays stable. Weights on rule features are pinned to zero.
fn fit_masked_linear(
    data: &Dataset,
    rules: &[Rule],
    cfg: &TrainConfig,
    warm: Option<(&[f64], f64)>,
) -> Result<LinearModel, RulesError> {
    let mask: Vec<usize> = rules.iter().map(|r| r.feature).collect();
    let subset = data.filtered(|ex| !rules.iter().any(|r| r.fires_on(&ex.features)));
    if subset.is_empty() {
        return Ok(LinearModel::zeros(data.dimension(), cfg.regime)?);
    }
    let masked = Dataset::new(
        data.dimension(),
        subset
            .iter()
            .map(|ex| {
                crate::core::Example::new(ex.features.without_features(&mask), ex.label)
            })
            .collect(),
    )?;
    let warm_zeroed: Option<Vec<f64>> = warm.map(|(w, _)| {
        let mut w = w.to_vec();
        for &j in &mask {
            if j < w.len() {
                w[j] = 0.0;
            }
        }
        w
    });
    let mut model = train_penalized_logistic_warm(
        &masked,
        cfg,
        warm_zeroed.as_deref().map(|w| (w, warm.unwrap().1)),
    )?;
    for &j in &mask {
        model.weights[j] = 0.0;
    }
    Ok(model)
}

/// Retrains the full rules-first model for a fixed rule list on `data`.
pub fn refit_with_rules(
    data: &Dataset,
    rules: &[Rule],
    cfg: &TrainConfig,
) -> Result<RulesFirstModel, RulesError> {
    let linear = fit_masked_linear(data, rules, cfg, None)?;
    Ok(RulesFirstModel::new(
        RuleSet::new(rules.to_vec())?,
        linear,
    ))
}

/// Forward greedy selection over candidate rules, driven by held-out
/// mis-classification loss. The final model is retrained on the union of
/// the training and evaluation examples with the chosen rules.
pub fn greedy_eval_loss(
    train: &Dataset,
    eval: &Dataset,
    candidates: &[Rule],
    config: &EvalGreedyConfig,
) -> Result<GreedySelection, RulesError> {
    if train.is_empty() || eval.is_empty() {
        return Err(RulesError::EmptyDataset);
    }
    let scan_cfg = TrainConfig {
        max_epochs: config.candidate_epochs.max(1),
        ..config.train.clone()
    };

    let mut chosen: Vec<Rule> = Vec::new();
    let mut current = fit_masked_linear(train, &chosen, &config.train, None)?;
    let eval_loss = |rules: &[Rule], linear: &LinearModel| -> Result<f64, RulesError> {
        let model = RulesFirstModel::new(RuleSet::new(rules.to_vec())?, linear.clone());
        Ok(empirical_loss(&model, eval, LossKind::Mis)?)
    };
    let mut current_loss = eval_loss(&chosen, &current)?;
    let mut path = vec![current_loss];

    for _ in 0..config.budget {
        let mut best: Option<(f64, usize, LinearModel)> = None;
        for (pos, cand) in candidates.iter().enumerate() {
            if chosen.iter().any(|r| r.feature == cand.feature) {
                continue;
            }
            let mut tentative = chosen.clone();
            tentative.push(*cand);
            let linear = fit_masked_linear(
                train,
                &tentative,
                &scan_cfg,
                Some((&current.weights, current.bias)),
            )?;
            let loss = eval_loss(&tentative, &linear)?;
            let better = match &best {
                Some((bl, _, _)) => loss < *bl,
                None => true,
            };
            if better {
                best = Some((loss, pos, linear));
            }
        }
        let Some((loss, pos, linear)) = best else { break };
        if !config.force_budget && loss >= current_loss {
            break;
        }
        chosen.push(candidates[pos]);
        current = linear;
        current_loss = loss;
        path.push(loss);
    }

    let full = train.concat(eval)?;
    let model = refit_with_rules(&full, &chosen, &config.train)?;
    Ok(GreedySelection {
        model,
        chosen,
        eval_loss_path: path,
    })
}

// ---------------------------------------------------------------------------
// Near-rule candidate mining
// ---------------------------------------------------------------------------

/// Thresholds for mining near rules out of noisy binary data. The count and
/// probability floors are polarity-specific; the defaults keep the stricter
/// floors on the positive side.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NearRuleConfig {
    pub min_count_pos: usize,
    pub min_count_neg: usize,
    pub min_prob_pos: f64,
    pub min_prob_neg: f64,
    pub top_k: usize,
}

impl Default for NearRuleConfig {
    fn default() -> NearRuleConfig {
        NearRuleConfig {
            min_count_pos: 16,
            min_count_neg: 4,
            min_prob_pos: 0.9,
            min_prob_neg: 0.75,
            top_k: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NearRule {
    pub feature: usize,
    pub label: Label,
    pub score: f64,
}

/// Mines near-rule candidates from binary-feature data. For each feature
/// and polarity: M is the number of examples containing the feature and
/// p-hat the fraction of those carrying the polarity label. Candidates
/// failing their polarity's count or probability floor are discarded;
/// survivors score sqrt(M) * p-hat and must clear `score_threshold` for the
/// negative polarity and four times it for the positive polarity.
pub fn select_near_rules(
    data: &Dataset,
    config: &NearRuleConfig,
    score_threshold: f64,
) -> Vec<NearRule> {
    let d = data.dimension();
    let mut fired = vec![0usize; d];
    let mut fired_pos = vec![0usize; d];
    for ex in data.iter() {
        for (j, v) in ex.features.iter() {
            if v > 0.0 {
                fired[j] += 1;
                if ex.label == Label::Positive {
                    fired_pos[j] += 1;
                }
            }
        }
    }
    let mut out: Vec<NearRule> = Vec::new();
    for j in 0..d {
        let m = fired[j];
        if m == 0 {
            continue;
        }
        let p_pos = fired_pos[j] as f64 / m as f64;
        for (label, p_hat, min_count, min_prob, bar) in [
            (
                Label::Positive,
                p_pos,
                config.min_count_pos,
                config.min_prob_pos,
                4.0 * score_threshold,
            ),
            (
                Label::Negative,
                1.0 - p_pos,
                config.min_count_neg,
                config.min_prob_neg,
                score_threshold,
            ),
        ] {
            if m < min_count || p_hat < min_prob {
                continue;
            }
            let score = (m as f64).sqrt() * p_hat;
            if score >= bar {
                out.push(NearRule {
                    feature: j,
                    label,
                    score,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.feature.cmp(&b.feature))
    });
    out.truncate(config.top_k);
    out
}

/// Ranks every firing feature as a rule candidate by label purity, then
/// coverage, then index. Unlike [`find_perfect_rules`] this keeps impure
/// features, which makes it suitable for forced-budget sweeps past the true
/// rule count.
pub fn rank_candidates_by_purity(data: &Dataset, limit: usize) -> Vec<Rule> {
    let d = data.dimension();
    let mut fired = vec![0usize; d];
    let mut fired_pos = vec![0usize; d];
    for ex in data.iter() {
        for (j, v) in ex.features.iter() {
            if v > 0.0 {
                fired[j] += 1;
                if ex.label == Label::Positive {
                    fired_pos[j] += 1;
                }
            }
        }
    }
    let mut scored: Vec<(f64, usize, usize, Label)> = (0..d)
        .filter(|&j| fired[j] > 0)
        .map(|j| {
            let p_pos = fired_pos[j] as f64 / fired[j] as f64;
            if p_pos >= 0.5 {
                (p_pos, fired[j], j, Label::Positive)
            } else {
                (1.0 - p_pos, fired[j], j, Label::Negative)
            }
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(&b.2))
    });
    scored
        .into_iter()
        .take(limit)
        .map(|(_, _, feature, label)| Rule { feature, label })
        .collect()
}
