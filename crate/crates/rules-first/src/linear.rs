//! Norm-constrained and penalized linear trainers.
//!
//! The constrained trainer is projected subgradient descent on the mean
//! hinge loss with a 1/sqrt(t) step schedule and best-iterate return. The
//! penalized trainer minimizes the logistic objective
//! `mean log(1+exp(-y(w.x+c))) + R(w)/C` with an unpenalized bias. Both are
//! deterministic given the config seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{
    l1_norm, l2_norm, CoreError, Dataset, LinearModel, NormRegime,
};

#[derive(Debug, Error)]
pub enum LinearError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("trainer requires a {expected} norm regime, got {got:?}")]
    RegimeMismatch {
        expected: &'static str,
        got: NormRegime,
    },
    #[error("norm bound must be positive, got {0}")]
    NonPositiveBound(f64),
    #[error("not margin-separable within budget (B_max = {b_max})")]
    NotSeparable { b_max: f64 },
}

/// Optimizer settings shared by the trainers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub regime: NormRegime,
    pub max_epochs: usize,
    /// Initial step size; step at update t is `step0 / sqrt(t+1)`.
    pub step0: f64,
    pub seed: u64,
    /// Stop once the epoch-average objective stops improving by at least
    /// this much (with a few epochs of patience for SGD noise).
    pub tolerance: f64,
}

impl TrainConfig {
    pub fn new(regime: NormRegime) -> TrainConfig {
        TrainConfig {
            regime,
            max_epochs: 200,
            step0: 0.5,
            seed: 0,
            tolerance: 1e-6,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> TrainConfig {
        self.seed = seed;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> TrainConfig {
        self.max_epochs = epochs.max(1);
        self
    }
}

const PATIENCE: usize = 5;

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

/// Euclidean projection onto the l2 ball of radius `b`: radial scaling.
pub fn project_l2(v: &[f64], b: f64) -> Result<Vec<f64>, LinearError> {
    if b <= 0.0 {
        return Err(LinearError::NonPositiveBound(b));
    }
    let mut out = v.to_vec();
    project_l2_in_place(&mut out, b);
    Ok(out)
}

fn project_l2_in_place(v: &mut [f64], b: f64) {
    let n = l2_norm(v);
    if n > b {
        let s = b / n;
        for x in v.iter_mut() {
            *x *= s;
        }
    }
}

/// Euclidean projection onto the l1 ball of radius `b`: soft thresholding
/// with the exact threshold found by sorting absolute values.
pub fn project_l1(v: &[f64], b: f64) -> Result<Vec<f64>, LinearError> {
    if b <= 0.0 {
        return Err(LinearError::NonPositiveBound(b));
    }
    let mut out = v.to_vec();
    project_l1_in_place(&mut out, b);
    Ok(out)
}

fn project_l1_in_place(v: &mut [f64], b: f64) {
    if l1_norm(v) <= b {
        return;
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, c| c.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - b) / (j + 1) as f64;
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        let shrunk = (x.abs() - theta).max(0.0);
        *x = x.signum() * shrunk;
    }
}

fn project_for_regime(v: &mut [f64], regime: NormRegime) {
    match regime {
        NormRegime::L2Ball(b) => project_l2_in_place(v, b),
        NormRegime::L1Ball(b) => project_l1_in_place(v, b),
        _ => {}
    }
}

// ---------------------------------------------------------------------------
// Constrained hinge trainer
// ---------------------------------------------------------------------------

fn mean_hinge(data: &Dataset, w: &[f64]) -> f64 {
    data.iter()
        .map(|ex| (1.0 - ex.features.dot(w) * ex.label.signum()).max(0.0))
        .sum::<f64>()
        / data.len() as f64
}

/// Projected subgradient descent on the mean hinge loss inside the ball of
/// the config regime. Returns the iterate with the best empirical hinge
/// loss seen (evaluated at epoch boundaries), never the raw last iterate.
pub fn train_constrained_hinge(
    data: &Dataset,
    config: &TrainConfig,
) -> Result<LinearModel, LinearError> {
    train_constrained_hinge_warm(data, config, None)
}

pub fn train_constrained_hinge_warm(
    data: &Dataset,
    config: &TrainConfig,
    warm_start: Option<&[f64]>,
) -> Result<LinearModel, LinearError> {
    if data.is_empty() {
        return Err(LinearError::EmptyDataset);
    }
    if !config.regime.is_ball() {
        return Err(LinearError::RegimeMismatch {
            expected: "ball",
            got: config.regime,
        });
    }
    let b = config.regime.bound();
    if b <= 0.0 {
        return Err(LinearError::NonPositiveBound(b));
    }
    let d = data.dimension();
    let mut w = match warm_start {
        Some(init) => {
            let mut w = init.to_vec();
            w.resize(d, 0.0);
            project_for_regime(&mut w, config.regime);
            w
        }
        None => vec![0.0; d],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();

    let mut best_w = w.clone();
    let mut best_loss = mean_hinge(data, &w);
    let mut stall = 0usize;
    let mut t = 0usize;

    for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let ex = &data.examples()[i];
            let y = ex.label.signum();
            let eta = config.step0 / ((t + 1) as f64).sqrt();
            t += 1;
            if ex.features.dot(&w) * y < 1.0 {
                for (j, v) in ex.features.iter() {
                    w[j] += eta * y * v;
                }
                project_for_regime(&mut w, config.regime);
            }
        }
        let loss = mean_hinge(data, &w);
        if loss < best_loss - config.tolerance {
            best_loss = loss;
            best_w = w.clone();
            stall = 0;
        } else {
            if loss < best_loss {
                best_loss = loss;
                best_w = w.clone();
            }
            stall += 1;
            if stall >= PATIENCE {
                break;
            }
        }
        if best_loss == 0.0 {
            break;
        }
    }
    Ok(LinearModel::new(best_w, 0.0, config.regime)?)
}

// ---------------------------------------------------------------------------
// Penalized logistic trainer
// ---------------------------------------------------------------------------

fn softplus(z: f64) -> f64 {
    if z > 35.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logistic_objective(data: &Dataset, w: &[f64], c: f64, regime: NormRegime) -> f64 {
    let data_term: f64 = data
        .iter()
        .map(|ex| softplus(-ex.label.signum() * (ex.features.dot(w) + c)))
        .sum::<f64>()
        / data.len() as f64;
    let penalty = match regime {
        NormRegime::L2Penalty(cap) => 0.5 * w.iter().map(|x| x * x).sum::<f64>() / cap,
        NormRegime::L1Penalty(cap) => l1_norm(w) / cap,
        _ => 0.0,
    };
    data_term + penalty
}

/// Stochastic (sub)gradient descent on the penalized logistic objective,
/// bias unpenalized, best-objective iterate returned.
pub fn train_penalized_logistic(
    data: &Dataset,
    config: &TrainConfig,
) -> Result<LinearModel, LinearError> {
    train_penalized_logistic_warm(data, config, None)
}

/// Same as [`train_penalized_logistic`] but optionally starting from an
/// existing (weights, bias) point, which makes short re-fits inside greedy
/// candidate scans cheap.
pub fn train_penalized_logistic_warm(
    data: &Dataset,
    config: &TrainConfig,
    warm_start: Option<(&[f64], f64)>,
) -> Result<LinearModel, LinearError> {
    if data.is_empty() {
        return Err(LinearError::EmptyDataset);
    }
    if !config.regime.is_penalty() {
        return Err(LinearError::RegimeMismatch {
            expected: "penalty",
            got: config.regime,
        });
    }
    let cap = config.regime.bound();
    if cap <= 0.0 {
        return Err(LinearError::NonPositiveBound(cap));
    }
    let d = data.dimension();
    let (mut w, mut c) = match warm_start {
        Some((init_w, init_c)) => {
            let mut w = init_w.to_vec();
            w.resize(d, 0.0);
            (w, init_c)
        }
        None => (vec![0.0; d], 0.0),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();

    let mut best = (w.clone(), c);
    let mut best_obj = logistic_objective(data, &w, c, config.regime);
    let mut stall = 0usize;

    // per-coordinate adaptive steps (diagonal accumulated squared
    // gradients) so rarely-firing features are not starved relative to
    // dense ones; the penalty is applied as a proximal step at each
    // coordinate's own rate
    const G_EPS: f64 = 1e-12;
    let mut gsq = vec![G_EPS; d];
    let mut gsq_c = G_EPS;

    for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let ex = &data.examples()[i];
            let y = ex.label.signum();
            let s = ex.features.dot(&w) + c;
            let g = -y * sigmoid(-y * s);
            for (j, v) in ex.features.iter() {
                let gj = g * v;
                gsq[j] += gj * gj;
                w[j] -= config.step0 / gsq[j].sqrt() * gj;
            }
            gsq_c += g * g;
            c -= config.step0 / gsq_c.sqrt() * g;
            match config.regime {
                NormRegime::L2Penalty(cap) => {
                    for (x, &gs) in w.iter_mut().zip(&gsq) {
                        let shrink = (config.step0 / gs.sqrt() / cap).min(1.0);
                        *x -= shrink * *x;
                    }
                }
                NormRegime::L1Penalty(cap) => {
                    for (x, &gs) in w.iter_mut().zip(&gsq) {
                        // soft-threshold step for the l1 subgradient
                        let shrink = config.step0 / gs.sqrt() / cap;
                        let mag = (x.abs() - shrink).max(0.0);
                        *x = x.signum() * mag;
                    }
                }
                _ => unreachable!(),
            }
        }
        let obj = logistic_objective(data, &w, c, config.regime);
        if obj < best_obj - config.tolerance {
            best_obj = obj;
            best = (w.clone(), c);
            stall = 0;
        } else {
            if obj < best_obj {
                best_obj = obj;
                best = (w.clone(), c);
            }
            stall += 1;
            if stall >= PATIENCE {
                break;
            }
        }
    }
    Ok(LinearModel::new(best.0, best.1, config.regime)?)
}

// ---------------------------------------------------------------------------
// Minimum-norm margin oracle
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
}

/// A margin-1 separator together with its recomputed margin and norms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarginCertificate {
    pub weights: Vec<f64>,
    pub achieved_min_margin: f64,
    pub l1_norm: f64,
    pub l2_norm: f64,
}

#[derive(Clone, Debug)]
pub struct MinNormOptions {
    pub b_max: f64,
    pub bisection_iters: usize,
    /// Mean hinge loss below which a radius counts as feasible.
    pub feasibility_hinge: f64,
    pub epochs: usize,
    pub step0: f64,
    pub seed: u64,
}

impl Default for MinNormOptions {
    fn default() -> MinNormOptions {
        MinNormOptions {
            b_max: 64.0,
            bisection_iters: 12,
            feasibility_hinge: 1e-4,
            epochs: 2000,
            step0: 0.5,
            seed: 0,
        }
    }
}

fn min_margin(data: &Dataset, w: &[f64]) -> f64 {
    data.iter()
        .map(|ex| ex.features.dot(w) * ex.label.signum())
        .fold(f64::INFINITY, f64::min)
}

/// Finds an approximately minimum-norm weight vector with margin >= 1 on
/// every example, by binary search over the ball radius composed with the
/// constrained hinge trainer. The returned weights are rescaled so the
/// recomputed margin is at least 1; the certificate norms therefore always
/// upper-bound nothing and lower-bound the true optimum.
pub fn min_norm_margin_solver(
    data: &Dataset,
    norm: NormKind,
    options: &MinNormOptions,
) -> Result<MarginCertificate, LinearError> {
    if data.is_empty() {
        return Err(LinearError::EmptyDataset);
    }
    let regime_for = |b: f64| match norm {
        NormKind::L1 => NormRegime::L1Ball(b),
        NormKind::L2 => NormRegime::L2Ball(b),
    };
    let try_radius = |b: f64| -> Result<Option<Vec<f64>>, LinearError> {
        let cfg = TrainConfig {
            regime: regime_for(b),
            max_epochs: options.epochs,
            step0: options.step0,
            seed: options.seed,
            tolerance: 0.0,
        };
        let model = train_constrained_hinge(data, &cfg)?;
        if mean_hinge(data, &model.weights) <= options.feasibility_hinge {
            Ok(Some(model.weights))
        } else {
            Ok(None)
        }
    };

    // Doubling phase to bracket the smallest feasible radius.
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut feasible = loop {
        match try_radius(hi)? {
            Some(w) => break w,
            None => {
                lo = hi;
                hi *= 2.0;
                if hi > options.b_max {
                    return Err(LinearError::NotSeparable {
                        b_max: options.b_max,
                    });
                }
            }
        }
    };
    for _ in 0..options.bisection_iters {
        let mid = 0.5 * (lo + hi);
        match try_radius(mid)? {
            Some(w) => {
                hi = mid;
                feasible = w;
            }
            None => lo = mid,
        }
    }

    let mu = min_margin(data, &feasible);
    debug_assert!(mu > 0.0);
    let weights: Vec<f64> = feasible.iter().map(|x| x / mu).collect();
    let achieved = min_margin(data, &weights);
    Ok(MarginCertificate {
        l1_norm: l1_norm(&weights),
        l2_norm: l2_norm(&weights),
        achieved_min_margin: achieved,
        weights,
    })
}

// ---------------------------------------------------------------------------
// Two-part ball trainer (l2 ball + l1 ball), the convex-relaxation baseline
// ---------------------------------------------------------------------------

/// Hinge training of w = w_a + w_b with alternating projected steps:
/// after every subgradient update, w_a is projected onto the l2 ball of
/// radius `b2` and w_b onto the l1 ball of radius `b1`. The returned model
/// carries the combined vector, which lives in the l2 ball of radius
/// b2 + b1.
pub fn train_two_part_ball(
    data: &Dataset,
    b2: f64,
    b1: f64,
    max_epochs: usize,
    step0: f64,
    seed: u64,
) -> Result<LinearModel, LinearError> {
    if data.is_empty() {
        return Err(LinearError::EmptyDataset);
    }
    if b2 <= 0.0 || b1 <= 0.0 {
        return Err(LinearError::NonPositiveBound(b2.min(b1)));
    }
    let d = data.dimension();
    let mut wa = vec![0.0; d];
    let mut wb = vec![0.0; d];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();

    let combined = |wa: &[f64], wb: &[f64]| -> Vec<f64> {
        wa.iter().zip(wb).map(|(a, b)| a + b).collect()
    };
    let mut best = combined(&wa, &wb);
    let mut best_loss = mean_hinge(data, &best);
    let mut t = 0usize;
    for _ in 0..max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let ex = &data.examples()[i];
            let y = ex.label.signum();
            let eta = step0 / ((t + 1) as f64).sqrt();
            t += 1;
            let s: f64 = ex
                .features
                .iter()
                .map(|(j, v)| v * (wa[j] + wb[j]))
                .sum();
            if s * y < 1.0 {
                for (j, v) in ex.features.iter() {
                    wa[j] += eta * y * v;
                    wb[j] += eta * y * v;
                }
                project_l2_in_place(&mut wa, b2);
                project_l1_in_place(&mut wb, b1);
            }
        }
        let w = combined(&wa, &wb);
        let loss = mean_hinge(data, &w);
        if loss < best_loss {
            best_loss = loss;
            best = w;
        }
        if best_loss == 0.0 {
            break;
        }
    }
    Ok(LinearModel::new(best, 0.0, NormRegime::L2Ball(b2 + b1))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{Example, Label, SparseVec};

    fn point(values: &[f64], label: f64) -> Example {
        Example::new(
            SparseVec::from_dense(values),
            Label::from_signum(label).unwrap(),
        )
    }

    fn dataset(points: Vec<Example>, d: usize) -> Dataset {
        Dataset::new(d, points).unwrap()
    }

    #[test]
    fn project_l2_examples() {
        let p = project_l2(&[3.0, 4.0], 1.0).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-12 && (p[1] - 0.8).abs() < 1e-12);
        assert_eq!(project_l2(&[0.1, 0.0], 1.0).unwrap(), vec![0.1, 0.0]);
        assert_eq!(project_l2(&[0.0, 0.0], 5.0).unwrap(), vec![0.0, 0.0]);
        assert!(project_l2(&[1.0], 0.0).is_err());
    }

    #[test]
    fn project_l1_examples() {
        let p = project_l1(&[2.0, 0.0], 1.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1] == 0.0);
        let p = project_l1(&[1.0, 1.0], 1.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        assert_eq!(
            project_l1(&[0.3, -0.3], 1.0).unwrap(),
            vec![0.3, -0.3]
        );
        assert!(project_l1(&[1.0], -1.0).is_err());
    }

    #[test]
    fn hinge_two_point_separable() {
        let data = dataset(
            vec![point(&[1.0, 0.0], 1.0), point(&[-1.0, 0.0], -1.0)],
            2,
        );
        let cfg = TrainConfig::new(NormRegime::L2Ball(2.0));
        let model = train_constrained_hinge(&data, &cfg).unwrap();
        assert!(mean_hinge(&data, &model.weights) <= 1e-3);
    }

    #[test]
    fn hinge_binding_constraint() {
        let data = dataset(vec![point(&[1.0], 1.0)], 1);
        let cfg = TrainConfig::new(NormRegime::L2Ball(0.5));
        let model = train_constrained_hinge(&data, &cfg).unwrap();
        // best attainable score is 0.5, so hinge is at least 0.5
        let loss = mean_hinge(&data, &model.weights);
        assert!(loss >= 0.5 - 1e-9 && loss <= 0.5 + 1e-6, "loss = {loss}");
        assert!(l2_norm(&model.weights) <= 0.5 * (1.0 + 1e-9));
    }

    #[test]
    fn hinge_requires_ball_regime() {
        let data = dataset(vec![point(&[1.0], 1.0)], 1);
        let cfg = TrainConfig::new(NormRegime::L2Penalty(1.0));
        assert!(matches!(
            train_constrained_hinge(&data, &cfg),
            Err(LinearError::RegimeMismatch { .. })
        ));
    }

    #[test]
    fn logistic_zero_features_balanced() {
        let data = dataset(vec![point(&[0.0], 1.0), point(&[0.0], -1.0)], 1);
        let cfg = TrainConfig::new(NormRegime::L2Penalty(1.0));
        let model = train_penalized_logistic(&data, &cfg).unwrap();
        assert_eq!(model.weights, vec![0.0]);
        assert_eq!(model.bias, 0.0);
        let obj = logistic_objective(&data, &model.weights, model.bias, cfg.regime);
        assert!((obj - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn logistic_unregularized_separable_limit() {
        let data = dataset(vec![point(&[1.0], 1.0)], 1);
        let cfg = TrainConfig::new(NormRegime::L2Penalty(1e9))
            .with_epochs(20_000);
        let model = train_penalized_logistic(&data, &cfg).unwrap();
        let score = model.weights[0] + model.bias;
        assert!(score > 2.0, "score = {score}");
        let obj = logistic_objective(&data, &model.weights, model.bias, cfg.regime);
        assert!(obj < 0.15, "objective = {obj}");
    }

    #[test]
    fn logistic_matches_grid_oracle() {
        // two-point separable set in one dimension, C = 1, L2 penalty
        let data = dataset(vec![point(&[1.0], 1.0), point(&[-1.0], -1.0)], 1);
        let regime = NormRegime::L2Penalty(1.0);
        // brute-force grid over (w, c) with step 0.01
        let mut oracle = f64::INFINITY;
        let mut wi = -300i64;
        while wi <= 300 {
            let w = wi as f64 * 0.01;
            let mut ci = -300i64;
            while ci <= 300 {
                let c = ci as f64 * 0.01;
                let obj = logistic_objective(&data, &[w], c, regime);
                if obj < oracle {
                    oracle = obj;
                }
                ci += 1;
            }
            wi += 1;
        }
        let cfg = TrainConfig::new(regime).with_epochs(5000);
        let model = train_penalized_logistic(&data, &cfg).unwrap();
        let obj = logistic_objective(&data, &model.weights, model.bias, regime);
        assert!(
            (obj - oracle).abs() <= 1e-3,
            "obj = {obj}, oracle = {oracle}"
        );
    }

    #[test]
    fn regularization_path_monotone() {
        let data = dataset(
            vec![
                point(&[1.0, 0.2], 1.0),
                point(&[0.8, -0.1], 1.0),
                point(&[-1.0, 0.4], -1.0),
                point(&[-0.6, -0.7], -1.0),
                point(&[0.3, 1.0], 1.0),
                point(&[-0.2, -1.2], -1.0),
            ],
            2,
        );
        let grid = [10.0, 3.0, 1.0, 0.3, 0.1];
        let mut prev_norm = f64::INFINITY;
        for &c in &grid {
            let cfg = TrainConfig::new(NormRegime::L2Penalty(c)).with_epochs(2000);
            let model = train_penalized_logistic(&data, &cfg).unwrap();
            let n = l2_norm(&model.weights);
            assert!(
                n <= prev_norm + 0.05,
                "norm grew when C decreased: {n} > {prev_norm} at C={c}"
            );
            prev_norm = n;
        }
    }

    #[test]
    fn min_norm_one_dimensional() {
        let data = dataset(vec![point(&[1.0], 1.0), point(&[-1.0], -1.0)], 1);
        let cert =
            min_norm_margin_solver(&data, NormKind::L2, &MinNormOptions::default()).unwrap();
        assert!(cert.achieved_min_margin >= 1.0 - 1e-6);
        assert!(
            (cert.l2_norm - 1.0).abs() <= 0.05,
            "l2 = {}",
            cert.l2_norm
        );
    }

    #[test]
    fn min_norm_rejects_inseparable() {
        let data = dataset(vec![point(&[1.0], 1.0), point(&[1.0], -1.0)], 1);
        let opts = MinNormOptions {
            b_max: 8.0,
            epochs: 200,
            ..MinNormOptions::default()
        };
        assert!(matches!(
            min_norm_margin_solver(&data, NormKind::L2, &opts),
            Err(LinearError::NotSeparable { .. })
        ));
    }

    #[test]
    fn two_part_ball_fits_separable() {
        let data = dataset(
            vec![point(&[1.0, 0.0], 1.0), point(&[-1.0, 0.0], -1.0)],
            2,
        );
        let model = train_two_part_ball(&data, 1.0, 1.0, 200, 0.5, 0).unwrap();
        assert!(mean_hinge(&data, &model.weights) <= 1e-2);
        assert!(l2_norm(&model.weights) <= 2.0 * (1.0 + 1e-9));
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-3.0f64..3.0, 3)
    }

    proptest! {
        #[test]
        fn l2_projection_feasible_and_idempotent(v in vec3(), b in 0.1f64..4.0) {
            let p = project_l2(&v, b).unwrap();
            prop_assert!(l2_norm(&p) <= b * (1.0 + 1e-9));
            let pp = project_l2(&p, b).unwrap();
            for (a, c) in p.iter().zip(&pp) {
                prop_assert!((a - c).abs() < 1e-12);
            }
        }

        #[test]
        fn l1_projection_feasible_and_idempotent(v in vec3(), b in 0.1f64..4.0) {
            let p = project_l1(&v, b).unwrap();
            prop_assert!(l1_norm(&p) <= b * (1.0 + 1e-9));
            let pp = project_l1(&p, b).unwrap();
            for (a, c) in p.iter().zip(&pp) {
                prop_assert!((a - c).abs() < 1e-9);
            }
        }

        #[test]
        fn projections_non_expansive(u in vec3(), v in vec3(), b in 0.1f64..4.0) {
            let dist = |a: &[f64], c: &[f64]| {
                a.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            };
            let pu2 = project_l2(&u, b).unwrap();
            let pv2 = project_l2(&v, b).unwrap();
            prop_assert!(dist(&pu2, &pv2) <= dist(&u, &v) + 1e-9);
            let pu1 = project_l1(&u, b).unwrap();
            let pv1 = project_l1(&v, b).unwrap();
            prop_assert!(dist(&pu1, &pv1) <= dist(&u, &v) + 1e-9);
        }
    }
}
