//! AdaBoost over the greedy rule learner.
//!
//! The weak learner consumes unweighted samples, so example weights are
//! bridged by drawing a weighted resample (with replacement, size m) each
//! round. Stage weights follow the usual half-log-odds formula with the
//! weighted error clamped away from 0 and 1.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{
    CoreError, Dataset, Example, Label, MarginModel, RulesFirstModel, SparseVec,
};
use crate::rules::{greedy_rule, GreedyConfig, RulesError};

#[derive(Debug, Error)]
pub enum BoostError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Rules(#[from] RulesError),
    #[error("empty dataset")]
    EmptyDataset,
}

const EPSILON_CLAMP: f64 = 1e-8;
const MAX_RESAMPLE_RETRIES: usize = 3;

/// Weighted ensemble of rules-first models with sign-vote aggregation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub stages: Vec<(RulesFirstModel, f64)>,
    pub rounds: usize,
    /// Weighted error of each adopted stage, in round order.
    pub stage_errors: Vec<f64>,
}

impl BoostedModel {
    pub fn vote(&self, x: &SparseVec) -> f64 {
        self.stages
            .iter()
            .map(|(model, alpha)| alpha * model.predict(x).label.signum())
            .sum()
    }

    pub fn predict(&self, x: &SparseVec) -> Label {
        Label::from_score(self.vote(x))
    }

    /// AdaBoost exponential bound on the training error:
    /// product over rounds of 2 sqrt(eps (1 - eps)).
    pub fn error_bound(&self) -> f64 {
        self.stage_errors
            .iter()
            .map(|&e| {
                let e = e.clamp(EPSILON_CLAMP, 1.0 - EPSILON_CLAMP);
                2.0 * (e * (1.0 - e)).sqrt()
            })
            .product()
    }
}

impl MarginModel for BoostedModel {
    fn signed_margin(&self, ex: &Example) -> f64 {
        self.vote(&ex.features) * ex.label.signum()
    }
}

fn weighted_resample(data: &Dataset, weights: &[f64], rng: &mut ChaCha8Rng) -> Dataset {
    // inverse-CDF sampling over the cumulative weights
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        cumulative.push(acc);
    }
    let total = acc;
    let examples: Vec<Example> = (0..data.len())
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            let idx = cumulative.partition_point(|&c| c < u).min(data.len() - 1);
            data.examples()[idx].clone()
        })
        .collect();
    Dataset::new(data.dimension(), examples).expect("resample keeps dimension")
}

/// AdaBoost with `greedy_rule` as the weak learner. Each round trains on a
/// weighted resample and measures the weighted error on the original
/// sample. A round with error >= 1/2 is retried on a fresh resample up to
/// three times and then stops boosting early; a round with zero error is
/// adopted with the capped stage weight and also stops early.
pub fn boost_rule(
    data: &Dataset,
    config: &GreedyConfig,
    rounds: usize,
    seed: u64,
) -> Result<BoostedModel, BoostError> {
    if data.is_empty() {
        return Err(BoostError::EmptyDataset);
    }
    let m = data.len();
    let mut weights = vec![1.0 / m as f64; m];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stages: Vec<(RulesFirstModel, f64)> = Vec::new();
    let mut stage_errors: Vec<f64> = Vec::new();

    'rounds: for round in 0..rounds {
        let mut adopted: Option<(RulesFirstModel, f64)> = None;
        for retry in 0..=MAX_RESAMPLE_RETRIES {
            let sample = weighted_resample(data, &weights, &mut rng);
            let weak_cfg = GreedyConfig {
                train: config
                    .train
                    .clone()
                    .with_seed(config.train.seed ^ (round as u64 * 131 + retry as u64 + 1)),
                ..config.clone()
            };
            let model = greedy_rule(&sample, &weak_cfg)?;
            let eps: f64 = data
                .iter()
                .zip(&weights)
                .filter(|(ex, _)| model.predict(&ex.features).label != ex.label)
                .map(|(_, &w)| w)
                .sum();
            if eps < 0.5 {
                adopted = Some((model, eps));
                break;
            }
        }
        let Some((model, eps)) = adopted else {
            break 'rounds;
        };
        let clamped = eps.clamp(EPSILON_CLAMP, 1.0 - EPSILON_CLAMP);
        let alpha = 0.5 * ((1.0 - clamped) / clamped).ln();
        stage_errors.push(eps);

        // reweight before pushing so the closure can borrow the model
        let mut total = 0.0;
        for (w, ex) in weights.iter_mut().zip(data.iter()) {
            let agree = model.predict(&ex.features).label == ex.label;
            *w *= if agree { (-alpha).exp() } else { alpha.exp() };
            total += *w;
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        let perfect = eps == 0.0;
        stages.push((model, alpha));
        if perfect {
            break;
        }
    }

    Ok(BoostedModel {
        rounds: stages.len(),
        stages,
        stage_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{empirical_loss, LossKind};

    fn ex(values: &[f64], label: f64) -> Example {
        Example::new(
            SparseVec::from_dense(values),
            Label::from_signum(label).unwrap(),
        )
    }

    fn separable_with_rule() -> Dataset {
        let mut examples = Vec::new();
        for i in 0..30 {
            if i % 3 == 0 {
                examples.push(ex(&[1.0, 0.0], 1.0));
            } else if i % 2 == 0 {
                examples.push(ex(&[0.0, 1.0], 1.0));
            } else {
                examples.push(ex(&[0.0, -1.0], -1.0));
            }
        }
        Dataset::new(2, examples).unwrap()
    }

    #[test]
    fn single_round_matches_weak_learner_predictions() {
        let data = separable_with_rule();
        let cfg = GreedyConfig::new(1, 2.0);
        let boosted = boost_rule(&data, &cfg, 1, 7).unwrap();
        assert_eq!(boosted.stages.len(), 1);
        assert!(boosted.stages[0].1 > 0.0);
        let weak = &boosted.stages[0].0;
        for e in data.iter() {
            assert_eq!(
                boosted.predict(&e.features),
                weak.predict(&e.features).label
            );
        }
    }

    #[test]
    fn perfect_round_caps_alpha_and_stops() {
        let data = separable_with_rule();
        let cfg = GreedyConfig::new(1, 2.0);
        let boosted = boost_rule(&data, &cfg, 10, 7).unwrap();
        // the weak learner nails this dataset, so boosting exits after one
        // perfect round with the capped stage weight
        let last = boosted.stages.last().unwrap();
        if *boosted.stage_errors.last().unwrap() == 0.0 {
            let cap = 0.5 * (1e8f64 - 1.0).ln();
            assert!((last.1 - 0.5 * ((1.0 - 1e-8) / 1e-8f64).ln()).abs() < 1e-6);
            assert!(last.1 <= cap + 1.0);
            assert!(boosted.stages.len() < 10);
        }
        let err = empirical_loss(&boosted, &data, LossKind::Mis).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn empty_dataset_rejected() {
        let data = Dataset::empty(2).unwrap();
        assert!(matches!(
            boost_rule(&data, &GreedyConfig::new(1, 1.0), 3, 0),
            Err(BoostError::EmptyDataset)
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let data = separable_with_rule();
        let cfg = GreedyConfig::new(1, 2.0);
        let a = boost_rule(&data, &cfg, 5, 42).unwrap();
        let b = boost_rule(&data, &cfg, 5, 42).unwrap();
        assert_eq!(a, b);
    }
}
