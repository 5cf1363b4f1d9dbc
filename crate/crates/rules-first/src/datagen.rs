//! Seeded generators for the synthetic rules-plus-linear distribution and
//! the norm lower-bound construction, plus realizability checkers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{
    l2_norm, CoreError, Dataset, Example, Label, SparseVec, NORM_SLACK,
};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("p_rule must lie in [0, 1), got {0}")]
    BadRuleProbability(f64),
    #[error("rule count k = {k} must be smaller than d_total = {d}")]
    TooManyRules { k: usize, d: usize },
    #[error("m must be at least 1")]
    ZeroSamples,
    #[error("w_star has length {got}, expected {expected}")]
    WStarLength { got: usize, expected: usize },
    #[error("mixed sample family needs k >= 1 and B >= 1")]
    DegenerateMixedFamily,
}

/// Synthetic distribution: the first `k` coordinates are i.i.d. Bernoulli
/// rule features, the remaining `d_total - k` are i.i.d. Gaussians. The
/// label is +1 when any rule coordinate fires and the sign of the linear
/// score on the standard coordinates otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub d_total: usize,
    pub k: usize,
    pub p_rule: f64,
    pub gauss_mean: f64,
    pub gauss_var: f64,
    /// Linear labeling vector over all d_total coordinates; zero on the
    /// rule coordinates. `None` means all-ones on the standard coordinates.
    pub w_star: Option<Vec<f64>>,
    /// When set, standard coordinates are resampled until the normalized
    /// linear score has magnitude at least this floor, so that a weight
    /// vector of norm 1/min_linear_margin realizes margin 1.
    pub min_linear_margin: Option<f64>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> SyntheticSpec {
        SyntheticSpec {
            d_total: 420,
            k: 20,
            p_rule: 1.0 / 60.0,
            gauss_mean: -0.02,
            gauss_var: 1.0,
            w_star: None,
            min_linear_margin: None,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn with_seed(mut self, seed: u64) -> SyntheticSpec {
        self.seed = seed;
        self
    }

    /// The labeling vector actually used: caller-provided or all-ones on
    /// the standard coordinates.
    pub fn effective_w_star(&self) -> Result<Vec<f64>, DatagenError> {
        match &self.w_star {
            Some(w) => {
                if w.len() != self.d_total {
                    return Err(DatagenError::WStarLength {
                        got: w.len(),
                        expected: self.d_total,
                    });
                }
                Ok(w.clone())
            }
            None => {
                let mut w = vec![1.0; self.d_total];
                for x in w.iter_mut().take(self.k) {
                    *x = 0.0;
                }
                Ok(w)
            }
        }
    }

    pub fn rule_indices(&self) -> Vec<usize> {
        (0..self.k).collect()
    }
}

pub fn gen_synthetic(spec: &SyntheticSpec, m: usize) -> Result<Dataset, DatagenError> {
    if m == 0 {
        return Err(DatagenError::ZeroSamples);
    }
    if !(0.0..1.0).contains(&spec.p_rule) {
        return Err(DatagenError::BadRuleProbability(spec.p_rule));
    }
    if spec.k >= spec.d_total {
        return Err(DatagenError::TooManyRules {
            k: spec.k,
            d: spec.d_total,
        });
    }
    let w_star = spec.effective_w_star()?;
    let w_norm = l2_norm(&w_star);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(spec.gauss_mean, spec.gauss_var.sqrt()).expect("valid sigma");

    let mut examples = Vec::with_capacity(m);
    for _ in 0..m {
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(spec.d_total);
        let mut any_rule = false;
        for j in 0..spec.k {
            if rng.random::<f64>() < spec.p_rule {
                entries.push((j, 1.0));
                any_rule = true;
            }
        }
        // standard coordinates, optionally resampled to a margin floor
        loop {
            entries.truncate(entries.iter().filter(|&&(j, _)| j < spec.k).count());
            let mut score = 0.0;
            for j in spec.k..spec.d_total {
                let v: f64 = normal.sample(&mut rng);
                score += v * w_star[j];
                if v != 0.0 {
                    entries.push((j, v));
                }
            }
            match spec.min_linear_margin {
                Some(floor) if w_norm > 0.0 && (score / w_norm).abs() < floor => continue,
                _ => break,
            }
        }
        let score: f64 = entries
            .iter()
            .map(|&(j, v)| v * w_star[j])
            .sum();
        let label = if any_rule {
            Label::Positive
        } else {
            Label::from_score(score)
        };
        examples.push(Example::new(SparseVec::new(entries)?, label));
    }
    Ok(Dataset::new(spec.d_total, examples)?)
}

/// The lower-bound support: with d = k + B^2 and a the mean direction of
/// the last B^2 coordinates scaled by 1/B, the points are
/// (e_i + a)/sqrt(2) labeled +1 for i < k and e_{k+i} labeled -1.
/// All points have unit l2 norm.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LowerBoundSpec {
    pub k: usize,
    pub b: u32,
}

impl LowerBoundSpec {
    pub fn dimension(&self) -> usize {
        self.k + (self.b * self.b) as usize
    }
}

pub fn gen_lower_bound(spec: &LowerBoundSpec) -> Result<Dataset, DatagenError> {
    let b_sq = (spec.b * spec.b) as usize;
    let d = spec.k + b_sq;
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    let a_coord = 1.0 / spec.b as f64;
    let mut examples = Vec::with_capacity(d);
    for i in 0..spec.k {
        let mut entries = vec![(i, inv_sqrt2)];
        for j in 0..b_sq {
            entries.push((spec.k + j, a_coord * inv_sqrt2));
        }
        examples.push(Example::new(SparseVec::new(entries)?, Label::Positive));
    }
    for j in 0..b_sq {
        examples.push(Example::new(
            SparseVec::new(vec![(spec.k + j, 1.0)])?,
            Label::Negative,
        ));
    }
    Ok(Dataset::new(d, examples)?)
}

/// Distributional version of the lower-bound support, for sample-size
/// comparisons: positives are (e_i + a)/sqrt(2) with Gaussian noise on the
/// standard coordinates, negatives are jittered standard axes. Rule
/// coordinates stay noise-free so the k rules are exact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedSampleSpec {
    pub k: usize,
    pub b: u32,
    pub pos_prob: f64,
    /// Std-dev of the Gaussian noise on standard coordinates.
    pub noise_sigma: f64,
    /// Negative axis magnitudes are drawn from 1 ± scale_jitter uniformly.
    pub scale_jitter: f64,
    pub seed: u64,
}

impl MixedSampleSpec {
    pub fn new(k: usize, b: u32) -> MixedSampleSpec {
        MixedSampleSpec {
            k,
            b,
            pos_prob: 0.5,
            noise_sigma: 0.08,
            scale_jitter: 0.2,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> MixedSampleSpec {
        self.seed = seed;
        self
    }

    pub fn dimension(&self) -> usize {
        self.k + (self.b * self.b) as usize
    }
}

pub fn gen_mixed_sample(spec: &MixedSampleSpec, m: usize) -> Result<Dataset, DatagenError> {
    if m == 0 {
        return Err(DatagenError::ZeroSamples);
    }
    if !(0.0..=1.0).contains(&spec.pos_prob) {
        return Err(DatagenError::BadRuleProbability(spec.pos_prob));
    }
    if spec.k == 0 || spec.b == 0 {
        return Err(DatagenError::DegenerateMixedFamily);
    }
    let b_sq = (spec.b * spec.b) as usize;
    let d = spec.k + b_sq;
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    let a_coord = inv_sqrt2 / spec.b as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).expect("valid sigma");
    let mut examples = Vec::with_capacity(m);
    for _ in 0..m {
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(d);
        let positive = rng.random::<f64>() < spec.pos_prob;
        if positive {
            let i = rng.random_range(0..spec.k);
            entries.push((i, inv_sqrt2));
            for j in 0..b_sq {
                let v = a_coord + noise.sample(&mut rng);
                if v != 0.0 {
                    entries.push((spec.k + j, v));
                }
            }
        } else {
            let axis = rng.random_range(0..b_sq);
            for j in 0..b_sq {
                let mut v = noise.sample(&mut rng);
                if j == axis {
                    v += 1.0 + spec.scale_jitter * (2.0 * rng.random::<f64>() - 1.0);
                }
                if v != 0.0 {
                    entries.push((spec.k + j, v));
                }
            }
        }
        let label = if positive {
            Label::Positive
        } else {
            Label::Negative
        };
        examples.push(Example::new(SparseVec::new(entries)?, label));
    }
    Ok(Dataset::new(d, examples)?)
}

/// True iff `kappa` and `w` certify (k,B)-realizability of the sample:
/// every example fired by a kappa feature is positive, every remaining
/// example has margin at least 1 under `w`, and the l2 norm of `w` is
/// within the bound.
pub fn check_kb_realizable(data: &Dataset, kappa: &[usize], w: &[f64], b: f64) -> bool {
    if l2_norm(w) > b * (1.0 + NORM_SLACK) {
        return false;
    }
    for ex in data.iter() {
        let covered = kappa.iter().any(|&j| ex.features.get(j) > 0.0);
        if covered {
            if ex.label != Label::Positive {
                return false;
            }
        } else {
            let margin = ex.features.dot(w) * ex.label.signum();
            if margin < 1.0 - 1e-9 {
                return false;
            }
        }
    }
    true
}

/// True iff the decomposition w_a + w_b certifies weak realizability:
/// l2 norm of w_a within B, at most k nonzeros in w_b, and margin at
/// least 1 everywhere under the sum.
pub fn check_weak_realizable(
    data: &Dataset,
    w_a: &[f64],
    w_b: &[f64],
    k: usize,
    b: f64,
) -> bool {
    if l2_norm(w_a) > b * (1.0 + NORM_SLACK) {
        return false;
    }
    if w_b.iter().filter(|&&x| x != 0.0).count() > k {
        return false;
    }
    let combined: Vec<f64> = w_a
        .iter()
        .zip(w_b.iter().chain(std::iter::repeat(&0.0)))
        .map(|(a, b)| a + b)
        .collect();
    data.iter().all(|ex| {
        ex.features.dot(&combined) * ex.label.signum() >= 1.0 - 1e-9
    })
}

/// Post-hoc (kappa, w, B) certificate for a synthetic sample: the
/// generating rule coordinates plus w_star rescaled by the minimum margin
/// observed on the non-covered examples. Returns `None` when some
/// non-covered example sits exactly on the decision boundary.
pub fn synthetic_certificate(
    spec: &SyntheticSpec,
    data: &Dataset,
) -> Result<Option<(Vec<usize>, Vec<f64>, f64)>, DatagenError> {
    let w_star = spec.effective_w_star()?;
    let kappa = spec.rule_indices();
    let mut min_margin = f64::INFINITY;
    for ex in data.iter() {
        let covered = kappa.iter().any(|&j| ex.features.get(j) > 0.0);
        if !covered {
            min_margin = min_margin.min(ex.features.dot(&w_star) * ex.label.signum());
        }
    }
    if !min_margin.is_finite() {
        // everything covered: any w works, keep w_star with its own norm
        let b = l2_norm(&w_star);
        return Ok(Some((kappa, w_star, b)));
    }
    if min_margin <= 0.0 {
        return Ok(None);
    }
    let w: Vec<f64> = w_star.iter().map(|x| x / min_margin).collect();
    let b = l2_norm(&w);
    Ok(Some((kappa, w, b)))
}
