//! Experiment harness: learning curves, rule-budget sweeps, threshold
//! sweeps on text corpora, and sample-size search. Every run is a pure
//! function of its parameters; CSV output is rendered in deterministic
//! sorted order with fixed column layouts.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boost::{boost_rule, BoostedModel};
use crate::core::{
    accuracy, Attribution, Dataset, Label, LinearModel, NormRegime, Rule, RulesFirstModel,
};
use crate::datagen::{gen_mixed_sample, gen_synthetic, MixedSampleSpec, SyntheticSpec};
use crate::linear::{train_penalized_logistic, train_two_part_ball, TrainConfig};
use crate::rules::{
    find_perfect_rules, greedy_eval_loss, greedy_rule, rank_candidates_by_purity,
    refit_with_rules, select_near_rules, EvalGreedyConfig, GreedyConfig, NearRuleConfig,
};
use crate::text::{build_vocab, parse_corpus_tsv, vectorize, Normalizer, Vocabulary};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
}

impl From<crate::core::CoreError> for ExperimentError {
    fn from(e: crate::core::CoreError) -> Self {
        ExperimentError::Config(e.to_string())
    }
}
impl From<crate::linear::LinearError> for ExperimentError {
    fn from(e: crate::linear::LinearError) -> Self {
        ExperimentError::Config(e.to_string())
    }
}
impl From<crate::rules::RulesError> for ExperimentError {
    fn from(e: crate::rules::RulesError) -> Self {
        ExperimentError::Config(e.to_string())
    }
}
impl From<crate::boost::BoostError> for ExperimentError {
    fn from(e: crate::boost::BoostError) -> Self {
        ExperimentError::Config(e.to_string())
    }
}
impl From<crate::datagen::DatagenError> for ExperimentError {
    fn from(e: crate::datagen::DatagenError) -> Self {
        ExperimentError::Config(e.to_string())
    }
}
impl From<crate::text::TextError> for ExperimentError {
    fn from(e: crate::text::TextError) -> Self {
        ExperimentError::Data(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Methods
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Penalized logistic regression, l2 penalty.
    L2,
    /// Penalized logistic regression, l1 penalty.
    L1,
    /// Evaluation-loss greedy rules over an l2-penalized logistic fallback.
    GreedyL2,
    /// Evaluation-loss greedy rules over an l1-penalized logistic fallback.
    GreedyL1,
    /// Coverage-thresholded greedy with a ball-constrained hinge fallback.
    GreedyRule,
    /// AdaBoost over the coverage-thresholded greedy.
    BoostRule,
    /// Convex-relaxation baseline: hinge training of an l2-ball plus
    /// l1-ball weight pair.
    Relax,
}

pub const ALL_METHODS: [Method; 7] = [
    Method::L2,
    Method::L1,
    Method::GreedyL2,
    Method::GreedyL1,
    Method::GreedyRule,
    Method::BoostRule,
    Method::Relax,
];

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::L2 => "l2",
            Method::L1 => "l1",
            Method::GreedyL2 => "greedy_l2",
            Method::GreedyL1 => "greedy_l1",
            Method::GreedyRule => "greedy_rule",
            Method::BoostRule => "boost_rule",
            Method::Relax => "relax",
        };
        f.write_str(name)
    }
}

impl FromStr for Method {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Method, ExperimentError> {
        for m in ALL_METHODS {
            if m.to_string() == s {
                return Ok(m);
            }
        }
        let valid: Vec<String> = ALL_METHODS.iter().map(|m| m.to_string()).collect();
        Err(ExperimentError::Config(format!(
            "unknown method `{s}`; valid methods: {}",
            valid.join(", ")
        )))
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic per-cell seed derivation.
fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    let mut x = splitmix64(base);
    for &p in parts {
        x = splitmix64(x ^ p);
    }
    x
}

enum Fitted {
    Linear(LinearModel),
    RulesFirst(RulesFirstModel),
    Boosted(BoostedModel),
}

impl Fitted {
    fn n_rules(&self) -> usize {
        match self {
            Fitted::Linear(_) => 0,
            Fitted::RulesFirst(m) => m.rule_set.len(),
            Fitted::Boosted(b) => b
                .stages
                .iter()
                .map(|(m, _)| m.rule_set.len())
                .max()
                .unwrap_or(0),
        }
    }

    fn accuracy_on(&self, data: &Dataset) -> Result<f64, ExperimentError> {
        let acc = match self {
            Fitted::Linear(m) => accuracy(m, data)?,
            Fitted::RulesFirst(m) => accuracy(m, data)?,
            Fitted::Boosted(m) => accuracy(m, data)?,
        };
        Ok(acc)
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}

fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Both-polarity perfect rules of a sample, positives first, each block in
/// coverage order.
fn perfect_rule_candidates(data: &Dataset) -> Vec<Rule> {
    let mut out: Vec<Rule> = find_perfect_rules(data, Label::Positive)
        .into_iter()
        .map(|(feature, _)| Rule {
            feature,
            label: Label::Positive,
        })
        .collect();
    out.extend(
        find_perfect_rules(data, Label::Negative)
            .into_iter()
            .map(|(feature, _)| Rule {
                feature,
                label: Label::Negative,
            }),
    );
    out
}

// ---------------------------------------------------------------------------
// Learning curve
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveParams {
    pub spec: SyntheticSpec,
    pub methods: Vec<Method>,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub test_size: usize,
    /// Penalty strength for the logistic methods.
    pub c: f64,
    /// Rule budget for the eval-loss greedy methods.
    pub budget: usize,
    /// Ball radius for greedy_rule / boost_rule / relax.
    pub b: f64,
    /// l1 radius for the relax baseline.
    pub b1: f64,
    /// Boosting rounds for boost_rule.
    pub rounds: usize,
    pub train_epochs: usize,
    pub candidate_epochs: usize,
    /// Append a wall_ms column to record rows (breaks byte-identical
    /// reruns, so off by default).
    pub include_timing: bool,
}

impl CurveParams {
    pub fn new(spec: SyntheticSpec, methods: Vec<Method>, m_grid: Vec<usize>) -> CurveParams {
        CurveParams {
            spec,
            methods,
            m_grid,
            trials: 20,
            test_size: 2000,
            c: 10000.0,
            budget: 30,
            b: 20.0,
            b1: 4.0,
            rounds: 10,
            train_epochs: 80,
            candidate_epochs: 12,
            include_timing: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CurveRecord {
    pub method: Method,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub n_rules: usize,
    pub wall_ms: u128,
}

#[derive(Clone, Debug)]
pub struct CurveAggregate {
    pub method: Method,
    pub m: usize,
    pub mean_test_acc: f64,
    pub sem_test_acc: f64,
}

#[derive(Clone, Debug)]
pub struct CurveOutput {
    pub records: Vec<CurveRecord>,
    pub aggregates: Vec<CurveAggregate>,
    pub csv: String,
}

fn fit_method(
    method: Method,
    data: &Dataset,
    params: &CurveParams,
    seed: u64,
) -> Result<Fitted, ExperimentError> {
    let logistic_cfg = |regime: NormRegime| TrainConfig {
        regime,
        max_epochs: params.train_epochs,
        step0: 0.5,
        seed,
        tolerance: 1e-6,
    };
    match method {
        Method::L2 => Ok(Fitted::Linear(train_penalized_logistic(
            data,
            &logistic_cfg(NormRegime::L2Penalty(params.c)),
        )?)),
        Method::L1 => Ok(Fitted::Linear(train_penalized_logistic(
            data,
            &logistic_cfg(NormRegime::L1Penalty(params.c)),
        )?)),
        Method::GreedyL2 | Method::GreedyL1 => {
            let regime = if method == Method::GreedyL2 {
                NormRegime::L2Penalty(params.c)
            } else {
                NormRegime::L1Penalty(params.c)
            };
            let (train, eval) = data.split_at(data.len() * 2 / 3);
            let candidates = perfect_rule_candidates(&train);
            let cfg = EvalGreedyConfig {
                budget: params.budget,
                train: logistic_cfg(regime),
                candidate_epochs: params.candidate_epochs,
                force_budget: false,
            };
            let sel = greedy_eval_loss(&train, &eval, &candidates, &cfg)?;
            Ok(Fitted::RulesFirst(sel.model))
        }
        Method::GreedyRule => {
            let mut cfg = GreedyConfig::new(self_k(&params.spec), params.b);
            cfg.train.seed = seed;
            Ok(Fitted::RulesFirst(greedy_rule(data, &cfg)?))
        }
        Method::BoostRule => {
            let mut cfg = GreedyConfig::new(self_k(&params.spec), params.b);
            cfg.train.seed = seed;
            Ok(Fitted::Boosted(boost_rule(data, &cfg, params.rounds, seed)?))
        }
        Method::Relax => Ok(Fitted::Linear(train_two_part_ball(
            data,
            params.b,
            params.b1,
            params.train_epochs,
            0.5,
            seed,
        )?)),
    }
}

fn self_k(spec: &SyntheticSpec) -> usize {
    spec.k.max(1)
}

pub fn run_learning_curve(params: &CurveParams) -> Result<CurveOutput, ExperimentError> {
    if params.trials == 0 {
        return Err(ExperimentError::Config("trials must be at least 1".into()));
    }
    if params.methods.is_empty() || params.m_grid.is_empty() {
        return Err(ExperimentError::Config(
            "methods and m grid must be non-empty".into(),
        ));
    }
    let mut records = Vec::new();
    for &m in &params.m_grid {
        for trial in 0..params.trials {
            let data_seed = mix_seed(params.spec.seed, &[1, m as u64, trial as u64]);
            let test_seed = mix_seed(params.spec.seed, &[2, m as u64, trial as u64]);
            let data = gen_synthetic(&params.spec.clone().with_seed(data_seed), m)?;
            let test =
                gen_synthetic(&params.spec.clone().with_seed(test_seed), params.test_size)?;
            for &method in &params.methods {
                let t0 = Instant::now();
                let fitted = fit_method(method, &data, params, data_seed)?;
                let wall_ms = t0.elapsed().as_millis();
                records.push(CurveRecord {
                    method,
                    m,
                    trial,
                    seed: data_seed,
                    train_acc: fitted.accuracy_on(&data)?,
                    test_acc: fitted.accuracy_on(&test)?,
                    n_rules: fitted.n_rules(),
                    wall_ms,
                });
            }
        }
    }
    records.sort_by(|a, b| {
        a.method
            .to_string()
            .cmp(&b.method.to_string())
            .then(a.m.cmp(&b.m))
            .then(a.trial.cmp(&b.trial))
    });
    let mut aggregates = Vec::new();
    for &method in &params.methods {
        for &m in &params.m_grid {
            let accs: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.m == m)
                .map(|r| r.test_acc)
                .collect();
            let (mean, sem) = mean_and_sem(&accs);
            aggregates.push(CurveAggregate {
                method,
                m,
                mean_test_acc: mean,
                sem_test_acc: sem,
            });
        }
    }
    aggregates.sort_by(|a, b| {
        a.method
            .to_string()
            .cmp(&b.method.to_string())
            .then(a.m.cmp(&b.m))
    });

    let mut csv = String::from("# rules-first curve csv v1\n");
    csv.push_str("row_type,method,m,trial,seed,train_acc,test_acc,n_rules,mean_test_acc,sem_test_acc");
    if params.include_timing {
        csv.push_str(",wall_ms");
    }
    csv.push('\n');
    for r in &records {
        csv.push_str(&format!(
            "record,{},{},{},{},{},{},{},,",
            r.method,
            r.m,
            r.trial,
            r.seed,
            fmt_f(r.train_acc),
            fmt_f(r.test_acc),
            r.n_rules
        ));
        if params.include_timing {
            csv.push_str(&format!(",{}", r.wall_ms));
        }
        csv.push('\n');
    }
    for a in &aggregates {
        csv.push_str(&format!(
            "aggregate,{},{},,,,,,{},{}",
            a.method,
            a.m,
            fmt_f(a.mean_test_acc),
            fmt_f(a.sem_test_acc)
        ));
        if params.include_timing {
            csv.push(',');
        }
        csv.push('\n');
    }
    Ok(CurveOutput {
        records,
        aggregates,
        csv,
    })
}

// ---------------------------------------------------------------------------
// Rule-budget sweep
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KappaParams {
    pub spec: SyntheticSpec,
    pub kappa_grid: Vec<usize>,
    pub m: usize,
    pub trials: usize,
    pub test_size: usize,
    pub c: f64,
    /// Size of the purity-ranked candidate pool; must cover the largest
    /// budget in the grid.
    pub candidate_pool: usize,
    pub train_epochs: usize,
    pub candidate_epochs: usize,
    pub include_timing: bool,
}

impl KappaParams {
    pub fn new(spec: SyntheticSpec, kappa_grid: Vec<usize>, m: usize) -> KappaParams {
        let max_budget = kappa_grid.iter().copied().max().unwrap_or(0);
        KappaParams {
            spec,
            kappa_grid,
            m,
            trials: 20,
            test_size: 2000,
            c: 10000.0,
            candidate_pool: (max_budget + 15).max(40),
            train_epochs: 80,
            candidate_epochs: 12,
            include_timing: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KappaRecord {
    pub budget: usize,
    pub trial: usize,
    pub seed: u64,
    pub test_acc: f64,
    pub n_rules: usize,
}

#[derive(Clone, Debug)]
pub struct KappaAggregate {
    pub budget: usize,
    pub mean_test_acc: f64,
    pub sem_test_acc: f64,
}

#[derive(Clone, Debug)]
pub struct KappaOutput {
    pub records: Vec<KappaRecord>,
    pub aggregates: Vec<KappaAggregate>,
    pub csv: String,
}

pub fn run_kappa_sweep(params: &KappaParams) -> Result<KappaOutput, ExperimentError> {
    if params.trials == 0 {
        return Err(ExperimentError::Config("trials must be at least 1".into()));
    }
    if params.kappa_grid.is_empty() {
        return Err(ExperimentError::Config("kappa grid must be non-empty".into()));
    }
    let max_budget = *params.kappa_grid.iter().max().unwrap();
    if params.candidate_pool < max_budget {
        return Err(ExperimentError::Config(format!(
            "candidate pool {} smaller than largest budget {}",
            params.candidate_pool, max_budget
        )));
    }
    let mut records = Vec::new();
    for trial in 0..params.trials {
        let data_seed = mix_seed(params.spec.seed, &[3, trial as u64]);
        let test_seed = mix_seed(params.spec.seed, &[4, trial as u64]);
        let data = gen_synthetic(&params.spec.clone().with_seed(data_seed), params.m)?;
        let test =
            gen_synthetic(&params.spec.clone().with_seed(test_seed), params.test_size)?;
        let (train, eval) = data.split_at(data.len() * 2 / 3);
        let candidates = rank_candidates_by_purity(&train, params.candidate_pool);
        let train_cfg = TrainConfig {
            regime: NormRegime::L2Penalty(params.c),
            max_epochs: params.train_epochs,
            step0: 0.5,
            seed: data_seed,
            tolerance: 1e-6,
        };
        let cfg = EvalGreedyConfig {
            budget: max_budget,
            train: train_cfg.clone(),
            candidate_epochs: params.candidate_epochs,
            force_budget: true,
        };
        let sel = greedy_eval_loss(&train, &eval, &candidates, &cfg)?;
        for &budget in &params.kappa_grid {
            let rules = &sel.chosen[..budget.min(sel.chosen.len())];
            let model = refit_with_rules(&data, rules, &train_cfg)?;
            records.push(KappaRecord {
                budget,
                trial,
                seed: data_seed,
                test_acc: accuracy(&model, &test)?,
                n_rules: rules.len(),
            });
        }
    }
    records.sort_by(|a, b| a.budget.cmp(&b.budget).then(a.trial.cmp(&b.trial)));
    let mut aggregates = Vec::new();
    let mut budgets: Vec<usize> = params.kappa_grid.clone();
    budgets.sort_unstable();
    budgets.dedup();
    for budget in budgets {
        let accs: Vec<f64> = records
            .iter()
            .filter(|r| r.budget == budget)
            .map(|r| r.test_acc)
            .collect();
        let (mean, sem) = mean_and_sem(&accs);
        aggregates.push(KappaAggregate {
            budget,
            mean_test_acc: mean,
            sem_test_acc: sem,
        });
    }

    let mut csv = String::from("# rules-first kappa csv v1\n");
    csv.push_str("row_type,method,m,budget,trial,seed,test_acc,n_rules,mean_test_acc,sem_test_acc\n");
    for r in &records {
        csv.push_str(&format!(
            "record,greedy_l2,{},{},{},{},{},{},,\n",
            params.m,
            r.budget,
            r.trial,
            r.seed,
            fmt_f(r.test_acc),
            r.n_rules
        ));
    }
    for a in &aggregates {
        csv.push_str(&format!(
            "aggregate,greedy_l2,{},{},,,,,{},{}\n",
            params.m,
            a.budget,
            fmt_f(a.mean_test_acc),
            fmt_f(a.sem_test_acc)
        ));
    }
    Ok(KappaOutput {
        records,
        aggregates,
        csv,
    })
}

// ---------------------------------------------------------------------------
// Threshold sweep on a text corpus
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub thresholds: Vec<f64>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub near: NearRuleConfig,
    pub budget: usize,
    pub c: f64,
    pub normalizer: Normalizer,
    pub train_frac: f64,
    pub eval_frac: f64,
    pub train_epochs: usize,
    pub candidate_epochs: usize,
}

impl Default for ThresholdParams {
    fn default() -> ThresholdParams {
        ThresholdParams {
            thresholds: vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
            methods: vec![Method::GreedyL2, Method::L2],
            seed: 0,
            near: NearRuleConfig::default(),
            budget: 20,
            c: 10000.0,
            normalizer: Normalizer::SuffixStrip,
            train_frac: 0.4,
            eval_frac: 0.2,
            train_epochs: 200,
            candidate_epochs: 30,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ThresholdRow {
    pub method: Method,
    pub threshold: f64,
    pub n_rules: usize,
    pub test_acc: f64,
}

/// One line per rule-attributed test prediction.
#[derive(Clone, Debug)]
pub struct AttributionRow {
    pub threshold: f64,
    pub example: usize,
    pub predicted: Label,
    pub actual: Label,
    pub token: String,
}

#[derive(Clone, Debug)]
pub struct ThresholdOutput {
    pub rows: Vec<ThresholdRow>,
    pub attributions: Vec<AttributionRow>,
    pub baseline_acc: f64,
    pub csv: String,
    pub attributions_tsv: String,
}

fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    items.shuffle(&mut rng);
}

pub fn run_threshold_sweep(
    corpus: &str,
    params: &ThresholdParams,
) -> Result<ThresholdOutput, ExperimentError> {
    let mut docs = parse_corpus_tsv(corpus)?;
    if docs.is_empty() {
        return Err(ExperimentError::Data("corpus has no documents".into()));
    }
    seeded_shuffle(&mut docs, mix_seed(params.seed, &[5]));
    let n = docs.len();
    let n_train = ((n as f64) * params.train_frac).round() as usize;
    let n_eval = ((n as f64) * params.eval_frac).round() as usize;
    if n_train == 0 || n_eval == 0 || n_train + n_eval >= n {
        return Err(ExperimentError::Config(
            "split fractions leave an empty train, eval or test set".into(),
        ));
    }
    // dictionary built over training and evaluation documents only
    let vocab_docs: Vec<&str> = docs[..n_train + n_eval]
        .iter()
        .map(|(t, _)| t.as_str())
        .collect();
    let mut vocab: Vocabulary = build_vocab(&vocab_docs, params.normalizer);
    vocab.freeze();
    let to_dataset = |slice: &[(String, Label)]| -> Result<Dataset, ExperimentError> {
        let pairs: Vec<(&str, Label)> =
            slice.iter().map(|(t, l)| (t.as_str(), *l)).collect();
        Ok(vectorize(&pairs, &vocab)?)
    };
    let train = to_dataset(&docs[..n_train])?;
    let eval = to_dataset(&docs[n_train..n_train + n_eval])?;
    let test = to_dataset(&docs[n_train + n_eval..])?;
    let full = train.concat(&eval)?;

    let logistic_cfg = TrainConfig {
        regime: NormRegime::L2Penalty(params.c),
        max_epochs: params.train_epochs,
        step0: 0.5,
        seed: params.seed,
        tolerance: 1e-6,
    };
    let baseline = train_penalized_logistic(&full, &logistic_cfg)?;
    let baseline_acc = accuracy(&baseline, &test)?;

    let mut rows = Vec::new();
    let mut attributions = Vec::new();
    for &threshold in &params.thresholds {
        for &method in &params.methods {
            match method {
                Method::L2 => rows.push(ThresholdRow {
                    method,
                    threshold,
                    n_rules: 0,
                    test_acc: baseline_acc,
                }),
                Method::GreedyL2 => {
                    let near = select_near_rules(&train, &params.near, threshold);
                    let candidates: Vec<Rule> = near
                        .iter()
                        .map(|nr| Rule {
                            feature: nr.feature,
                            label: nr.label,
                        })
                        .collect();
                    let cfg = EvalGreedyConfig {
                        budget: params.budget,
                        train: logistic_cfg.clone(),
                        candidate_epochs: params.candidate_epochs,
                        force_budget: false,
                    };
                    let sel = greedy_eval_loss(&train, &eval, &candidates, &cfg)?;
                    rows.push(ThresholdRow {
                        method,
                        threshold,
                        n_rules: sel.chosen.len(),
                        test_acc: accuracy(&sel.model, &test)?,
                    });
                    for (i, ex) in test.iter().enumerate() {
                        let p = sel.model.predict(&ex.features);
                        if let Attribution::Rule(feature) = p.attribution {
                            attributions.push(AttributionRow {
                                threshold,
                                example: i,
                                predicted: p.label,
                                actual: ex.label,
                                token: vocab
                                    .token(feature)
                                    .unwrap_or("<unknown>")
                                    .to_string(),
                            });
                        }
                    }
                }
                other => {
                    return Err(ExperimentError::Config(format!(
                        "method `{other}` is not supported by the threshold sweep"
                    )))
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        a.method
            .to_string()
            .cmp(&b.method.to_string())
            .then(a.threshold.partial_cmp(&b.threshold).unwrap())
    });

    let mut csv = String::from("# rules-first threshold csv v1\n");
    csv.push_str("row_type,method,threshold,n_rules,test_acc\n");
    for r in &rows {
        csv.push_str(&format!(
            "record,{},{},{},{}\n",
            r.method,
            fmt_f(r.threshold),
            r.n_rules,
            fmt_f(r.test_acc)
        ));
    }
    let mut attributions_tsv =
        String::from("threshold\texample\tpredicted\tactual\ttoken\n");
    for a in &attributions {
        attributions_tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            fmt_f(a.threshold),
            a.example,
            a.predicted.signum() as i64,
            a.actual.signum() as i64,
            a.token
        ));
    }
    Ok(ThresholdOutput {
        rows,
        attributions,
        baseline_acc,
        csv,
        attributions_tsv,
    })
}

// ---------------------------------------------------------------------------
// Sample-size search (smallest m reaching a target test error)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Table1Params {
    pub methods: Vec<Method>,
    pub k_grid: Vec<usize>,
    pub b_grid: Vec<u32>,
    pub trials: usize,
    pub epsilon: f64,
    pub m_min: usize,
    pub m_max: usize,
    pub test_size: usize,
    /// Noise level of the mixed-family standard coordinates.
    pub noise_sigma: f64,
    /// Jitter on the negative axis magnitudes.
    pub scale_jitter: f64,
    /// Boosting rounds when boost_rule is among the methods.
    pub rounds: usize,
    pub seed: u64,
    pub train_epochs: usize,
    /// l1 radii swept for the relax baseline; best picked on a held-out
    /// quarter of each training sample.
    pub b1_grid: Vec<f64>,
    pub bisection_iters: usize,
}

impl Default for Table1Params {
    fn default() -> Table1Params {
        Table1Params {
            methods: vec![Method::GreedyRule, Method::Relax],
            k_grid: vec![5],
            b_grid: vec![2, 4],
            trials: 3,
            epsilon: 0.1,
            m_min: 25,
            m_max: 6400,
            test_size: 1000,
            noise_sigma: 0.08,
            scale_jitter: 0.2,
            rounds: 5,
            seed: 0,
            train_epochs: 120,
            b1_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            bisection_iters: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Table1Probe {
    pub method: Method,
    pub k: usize,
    pub b: u32,
    pub m: usize,
    pub mean_test_err: f64,
}

#[derive(Clone, Debug)]
pub struct Table1Cell {
    pub method: Method,
    pub k: usize,
    pub b: u32,
    /// Smallest m observed to reach the target error, or `None` when the
    /// budget was exhausted (reported as UNREACHED).
    pub measured_m: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Table1Output {
    pub probes: Vec<Table1Probe>,
    pub cells: Vec<Table1Cell>,
    pub csv: String,
}

fn table1_spec(params: &Table1Params, k: usize, b: u32) -> MixedSampleSpec {
    MixedSampleSpec {
        k,
        b,
        pos_prob: 0.5,
        noise_sigma: params.noise_sigma,
        scale_jitter: params.scale_jitter,
        seed: params.seed,
    }
}

fn table1_error_at(
    params: &Table1Params,
    method: Method,
    k: usize,
    b: u32,
    m: usize,
) -> Result<f64, ExperimentError> {
    let spec = table1_spec(params, k, b);
    let mut errs = Vec::with_capacity(params.trials);
    for trial in 0..params.trials {
        let data_seed = mix_seed(params.seed, &[6, k as u64, b as u64, m as u64, trial as u64]);
        let test_seed = mix_seed(params.seed, &[7, k as u64, b as u64, trial as u64]);
        let data = gen_mixed_sample(&spec.clone().with_seed(data_seed), m)?;
        let test = gen_mixed_sample(&spec.clone().with_seed(test_seed), params.test_size)?;
        let err = match method {
            Method::GreedyRule => {
                let mut cfg = GreedyConfig::new(k, b as f64);
                cfg.train.seed = data_seed;
                cfg.train.max_epochs = params.train_epochs;
                let model = greedy_rule(&data, &cfg)?;
                1.0 - accuracy(&model, &test)?
            }
            Method::BoostRule => {
                let mut cfg = GreedyConfig::new(k, b as f64);
                cfg.train.seed = data_seed;
                cfg.train.max_epochs = params.train_epochs;
                let boosted = boost_rule(&data, &cfg, params.rounds, data_seed)?;
                1.0 - accuracy(&boosted, &test)?
            }
            Method::Relax => {
                let (fit, hold) = data.split_at(data.len() * 3 / 4);
                let (fit, hold) = if hold.is_empty() {
                    (data.clone(), data.clone())
                } else {
                    (fit, hold)
                };
                let mut best: Option<(f64, f64)> = None; // (hold_err, b1)
                for &b1 in &params.b1_grid {
                    let model = train_two_part_ball(
                        &fit,
                        b as f64,
                        b1,
                        params.train_epochs,
                        0.5,
                        data_seed,
                    )?;
                    let hold_err = 1.0 - accuracy(&model, &hold)?;
                    if best.map(|(e, _)| hold_err < e).unwrap_or(true) {
                        best = Some((hold_err, b1));
                    }
                }
                let b1 = best.expect("b1 grid is non-empty").1;
                let model = train_two_part_ball(
                    &data,
                    b as f64,
                    b1,
                    params.train_epochs,
                    0.5,
                    data_seed,
                )?;
                1.0 - accuracy(&model, &test)?
            }
            other => {
                return Err(ExperimentError::Config(format!(
                    "method `{other}` is not supported by the sample-size search"
                )))
            }
        };
        errs.push(err);
    }
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

pub fn run_table1_comparison(params: &Table1Params) -> Result<Table1Output, ExperimentError> {
    if params.k_grid.is_empty() || params.b_grid.is_empty() || params.methods.is_empty() {
        return Err(ExperimentError::Config("grids must be non-empty".into()));
    }
    if params.trials == 0 {
        return Err(ExperimentError::Config("trials must be at least 1".into()));
    }
    let mut probes = Vec::new();
    let mut cells = Vec::new();
    for &method in &params.methods {
        for &k in &params.k_grid {
            for &b in &params.b_grid {
                let probe = |m: usize,
                                 probes: &mut Vec<Table1Probe>|
                 -> Result<f64, ExperimentError> {
                    let err = table1_error_at(params, method, k, b, m)?;
                    probes.push(Table1Probe {
                        method,
                        k,
                        b,
                        m,
                        mean_test_err: err,
                    });
                    Ok(err)
                };
                // doubling until the target error is reached
                let mut m = params.m_min;
                let mut lo = 0usize;
                let mut hi: Option<usize> = None;
                while m <= params.m_max {
                    let err = probe(m, &mut probes)?;
                    if err <= params.epsilon {
                        hi = Some(m);
                        break;
                    }
                    lo = m;
                    m *= 2;
                }
                let measured = match hi {
                    None => None,
                    // no failing bracket below: m_min already reaches the target
                    Some(hi_m) if lo == 0 => Some(hi_m),
                    Some(mut hi_m) => {
                        let mut lo_m = lo;
                        for _ in 0..params.bisection_iters {
                            if hi_m.saturating_sub(lo_m) <= hi_m / 8 {
                                break;
                            }
                            let mid = (lo_m + hi_m) / 2;
                            if mid == lo_m || mid == hi_m {
                                break;
                            }
                            let err = probe(mid, &mut probes)?;
                            if err <= params.epsilon {
                                hi_m = mid;
                            } else {
                                lo_m = mid;
                            }
                        }
                        Some(hi_m)
                    }
                };
                cells.push(Table1Cell {
                    method,
                    k,
                    b,
                    measured_m: measured,
                });
            }
        }
    }
    probes.sort_by(|a, b| {
        a.method
            .to_string()
            .cmp(&b.method.to_string())
            .then(a.k.cmp(&b.k))
            .then(a.b.cmp(&b.b))
            .then(a.m.cmp(&b.m))
    });
    cells.sort_by(|a, b| {
        a.method
            .to_string()
            .cmp(&b.method.to_string())
            .then(a.k.cmp(&b.k))
            .then(a.b.cmp(&b.b))
    });

    let mut csv = String::from("# rules-first table1 csv v1\n");
    csv.push_str("row_type,method,k,B,m,mean_test_err,measured_m\n");
    for p in &probes {
        csv.push_str(&format!(
            "probe,{},{},{},{},{},\n",
            p.method,
            p.k,
            p.b,
            p.m,
            fmt_f(p.mean_test_err)
        ));
    }
    for c in &cells {
        let measured = c
            .measured_m
            .map(|m| m.to_string())
            .unwrap_or_else(|| "UNREACHED".to_string());
        csv.push_str(&format!(
            "aggregate,{},{},{},,,{}\n",
            c.method, c.k, c.b, measured
        ));
    }
    Ok(Table1Output {
        probes,
        cells,
        csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        assert_eq!("greedy_l2".parse::<Method>().unwrap(), Method::GreedyL2);
        let err = "nope".parse::<Method>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("valid methods"));
        assert!(msg.contains("boost_rule"));
    }

    #[test]
    fn curve_row_count_contract() {
        let spec = SyntheticSpec {
            d_total: 30,
            k: 4,
            ..SyntheticSpec::default()
        };
        let mut params = CurveParams::new(spec, vec![Method::L2], vec![60]);
        params.trials = 1;
        params.test_size = 100;
        params.train_epochs = 10;
        let out = run_learning_curve(&params).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.aggregates.len(), 1);
        let data_lines: Vec<&str> = out
            .csv
            .lines()
            .filter(|l| l.starts_with("record") || l.starts_with("aggregate"))
            .collect();
        assert_eq!(data_lines.len(), 2);
    }

    #[test]
    fn curve_deterministic() {
        let spec = SyntheticSpec {
            d_total: 25,
            k: 3,
            ..SyntheticSpec::default()
        };
        let mut params = CurveParams::new(spec, vec![Method::L2], vec![40]);
        params.trials = 2;
        params.test_size = 50;
        params.train_epochs = 10;
        let a = run_learning_curve(&params).unwrap();
        let b = run_learning_curve(&params).unwrap();
        assert_eq!(a.csv, b.csv);
    }

    #[test]
    fn kappa_budget_zero_equals_linear_baseline() {
        let spec = SyntheticSpec {
            d_total: 25,
            k: 3,
            ..SyntheticSpec::default()
        };
        let mut params = KappaParams::new(spec.clone(), vec![0], 90);
        params.trials = 1;
        params.test_size = 200;
        params.train_epochs = 30;
        let out = run_kappa_sweep(&params).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].n_rules, 0);

        // reproduce the baseline by hand
        let data_seed = mix_seed(spec.seed, &[3, 0]);
        let test_seed = mix_seed(spec.seed, &[4, 0]);
        let data = gen_synthetic(&spec.clone().with_seed(data_seed), 90).unwrap();
        let test = gen_synthetic(&spec.clone().with_seed(test_seed), 200).unwrap();
        let cfg = TrainConfig {
            regime: NormRegime::L2Penalty(10000.0),
            max_epochs: 30,
            step0: 0.5,
            seed: data_seed,
            tolerance: 1e-6,
        };
        let baseline = train_penalized_logistic(&data, &cfg).unwrap();
        let acc = accuracy(&baseline, &test).unwrap();
        assert!((out.records[0].test_acc - acc).abs() < 1e-12);
    }

    #[test]
    fn table1_aggregate_row_count() {
        let params = Table1Params {
            methods: vec![Method::GreedyRule],
            k_grid: vec![2],
            b_grid: vec![1],
            trials: 1,
            epsilon: 0.5,
            m_min: 25,
            m_max: 200,
            test_size: 100,
            noise_sigma: 0.08,
            train_epochs: 20,
            ..Table1Params::default()
        };
        let out = run_table1_comparison(&params).unwrap();
        assert_eq!(out.cells.len(), 1);
        // a 0.5 target is reached immediately on a near-balanced family
        assert!(out.cells[0].measured_m.is_some());
        assert_eq!(out.cells[0].measured_m, Some(params.m_min));
    }
}
