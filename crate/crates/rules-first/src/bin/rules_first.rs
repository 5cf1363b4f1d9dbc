//! Command-line harness: dataset generation, training, evaluation, and
//! the experiment sweeps, all seeded and emitting deterministic CSV plus a
//! manifest echoing the resolved configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use rules_first::core::{accuracy, Dataset, MarginModel, NormRegime};
use rules_first::datagen::{
    gen_lower_bound, gen_synthetic, LowerBoundSpec, SyntheticSpec,
};
use rules_first::experiments::{
    run_kappa_sweep, run_learning_curve, run_table1_comparison, run_threshold_sweep,
    CurveParams, ExperimentError, KappaParams, Method, Table1Params, ThresholdParams,
};
use rules_first::io::{read_dataset_file, write_dataset_file, ModelDocument};
use rules_first::linear::{train_penalized_logistic, TrainConfig};
use rules_first::rules::{greedy_eval_loss, greedy_rule, EvalGreedyConfig, GreedyConfig};
use rules_first::boost::boost_rule;

#[derive(Parser)]
#[command(name = "rules-first", version, about = "Rules-first classifier experiments")]
struct Cli {
    /// TOML config file mirroring the flags; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Flat config file: every key mirrors a flag of the same name.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    out: Option<String>,
    trials: Option<usize>,
    m: Option<String>,
    k: Option<String>,
    #[serde(rename = "B")]
    b: Option<String>,
    #[serde(rename = "C")]
    c: Option<f64>,
    budget: Option<usize>,
    method: Option<String>,
}

/// The flags shared by all subcommands, all optional so the config file
/// can fill the gaps.
#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Sample size; comma-separated list where a grid is accepted.
    #[arg(long)]
    m: Option<String>,
    /// Rule count; comma-separated list where a grid is accepted.
    #[arg(long)]
    k: Option<String>,
    /// Norm bound; comma-separated list where a grid is accepted.
    #[arg(long = "B")]
    b: Option<String>,
    /// Penalty strength for logistic methods.
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    /// Method name; comma-separated list where a set is accepted.
    #[arg(long)]
    method: Option<String>,
}

impl Common {
    fn merge(mut self, file: &FileConfig) -> Common {
        self.seed = self.seed.or(file.seed);
        self.out = self.out.take().or_else(|| file.out.clone());
        self.trials = self.trials.or(file.trials);
        self.m = self.m.take().or_else(|| file.m.clone());
        self.k = self.k.take().or_else(|| file.k.clone());
        self.b = self.b.take().or_else(|| file.b.clone());
        self.c = self.c.or(file.c);
        self.budget = self.budget.or(file.budget);
        self.method = self.method.take().or_else(|| file.method.clone());
        self
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Train a model on a dataset file and write it as JSON.
    Train {
        /// Dataset path (.csv dense or sparse text).
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a saved model on a dataset file.
    Eval {
        #[arg(long)]
        data: PathBuf,
        /// Model JSON path written by `train`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Learning-curve sweep over m.
    Curve {
        #[command(flatten)]
        common: Common,
    },
    /// Rule-budget sweep at fixed m.
    Kappa {
        /// Comma-separated budget grid; defaults to 0..=30 step 5.
        #[arg(long)]
        kappa_grid: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Near-rule threshold sweep on a TSV corpus.
    Threshold {
        /// Corpus path: one `label<TAB>text` document per line.
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated threshold grid.
        #[arg(long)]
        thresholds: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Smallest-m-to-target-error comparison over (k, B) grids.
    Table1 {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum GenFamily {
    /// Rules-plus-linear synthetic family.
    Synthetic {
        #[arg(long)]
        d_total: Option<usize>,
        #[arg(long)]
        p_rule: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Norm lower-bound construction (whole support, no sampling).
    Lowerbound {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_list<T: std::str::FromStr>(
    s: &str,
    what: &str,
) -> Result<Vec<T>, ExperimentError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| ExperimentError::Config(format!("bad {what} value `{p}`")))
        })
        .collect()
}

fn parse_single<T: std::str::FromStr>(
    s: Option<&str>,
    what: &str,
) -> Result<Option<T>, ExperimentError> {
    match s {
        None => Ok(None),
        Some(v) => {
            let list: Vec<T> = parse_list(v, what)?;
            if list.len() != 1 {
                return Err(ExperimentError::Config(format!(
                    "expected a single {what} value, got `{v}`"
                )));
            }
            Ok(list.into_iter().next())
        }
    }
}

fn parse_methods(s: Option<&str>) -> Result<Option<Vec<Method>>, ExperimentError> {
    match s {
        None => Ok(None),
        Some(v) => {
            let mut out = Vec::new();
            for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                out.push(part.parse::<Method>()?);
            }
            if out.is_empty() {
                return Err(ExperimentError::Config("empty method list".into()));
            }
            Ok(Some(out))
        }
    }
}

fn require_out(common: &Common) -> Result<&str, ExperimentError> {
    common
        .out
        .as_deref()
        .ok_or_else(|| ExperimentError::Config("--out is required".into()))
}

fn write_file(path: &str, contents: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, contents)
        .map_err(|e| ExperimentError::Data(format!("writing {path}: {e}")))
}

fn write_manifest<P: Serialize>(out: &str, params: &P) -> Result<(), ExperimentError> {
    let text = toml::to_string_pretty(params)
        .map_err(|e| ExperimentError::Config(format!("manifest serialization: {e}")))?;
    write_file(&format!("{out}.manifest.toml"), &text)
}

fn load_dataset(path: &Path) -> Result<Dataset, ExperimentError> {
    read_dataset_file(path, None)
        .map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    let file: FileConfig = match &cli.config {
        None => FileConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
            toml::from_str(&text)
                .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?
        }
    };
    match cli.command {
        Command::Gen { family } => run_gen(family, &file),
        Command::Train { data, common } => run_train(&data, common.merge(&file)),
        Command::Eval { data, model } => run_eval(&data, &model),
        Command::Curve { common } => run_curve(common.merge(&file)),
        Command::Kappa { kappa_grid, common } => {
            run_kappa(kappa_grid.as_deref(), common.merge(&file))
        }
        Command::Threshold {
            data,
            thresholds,
            common,
        } => run_threshold(&data, thresholds.as_deref(), common.merge(&file)),
        Command::Table1 { common } => run_table1(common.merge(&file)),
    }
}

fn run_gen(family: GenFamily, file: &FileConfig) -> Result<(), ExperimentError> {
    match family {
        GenFamily::Synthetic {
            d_total,
            p_rule,
            common,
        } => {
            let common = common.merge(file);
            let out = require_out(&common)?.to_string();
            let mut spec = SyntheticSpec {
                seed: common.seed.unwrap_or(0),
                ..SyntheticSpec::default()
            };
            if let Some(d) = d_total {
                spec.d_total = d;
            }
            if let Some(p) = p_rule {
                spec.p_rule = p;
            }
            if let Some(k) = parse_single::<usize>(common.k.as_deref(), "k")? {
                spec.k = k;
            }
            let m = parse_single::<usize>(common.m.as_deref(), "m")?
                .ok_or_else(|| ExperimentError::Config("--m is required".into()))?;
            let data = gen_synthetic(&spec, m)?;
            write_dataset_file(Path::new(&out), &data)
                .map_err(|e| ExperimentError::Data(format!("{out}: {e}")))?;
            write_manifest(&out, &spec)?;
            println!("wrote {m} examples to {out}");
            Ok(())
        }
        GenFamily::Lowerbound { common } => {
            let common = common.merge(file);
            let out = require_out(&common)?.to_string();
            let k = parse_single::<usize>(common.k.as_deref(), "k")?
                .ok_or_else(|| ExperimentError::Config("--k is required".into()))?;
            let b = parse_single::<u32>(common.b.as_deref(), "B")?
                .ok_or_else(|| ExperimentError::Config("--B is required".into()))?;
            let spec = LowerBoundSpec { k, b };
            let data = gen_lower_bound(&spec)?;
            write_dataset_file(Path::new(&out), &data)
                .map_err(|e| ExperimentError::Data(format!("{out}: {e}")))?;
            write_manifest(&out, &spec)?;
            println!("wrote {} examples to {out}", data.len());
            Ok(())
        }
    }
}

/// Resolved `train` settings, echoed to the manifest.
#[derive(Serialize)]
struct TrainManifest {
    data: String,
    method: String,
    seed: u64,
    c: f64,
    k: usize,
    b: f64,
    budget: usize,
}

fn run_train(data_path: &Path, common: Common) -> Result<(), ExperimentError> {
    let data = load_dataset(data_path)?;
    let out = require_out(&common)?.to_string();
    let method = parse_methods(common.method.as_deref())?
        .and_then(|v| v.into_iter().next())
        .unwrap_or(Method::L2);
    let seed = common.seed.unwrap_or(0);
    let c = common.c.unwrap_or(10000.0);
    let k = parse_single::<usize>(common.k.as_deref(), "k")?.unwrap_or(20);
    let b = parse_single::<f64>(common.b.as_deref(), "B")?.unwrap_or(20.0);
    let budget = common.budget.unwrap_or(30);
    let logistic = |regime: NormRegime| TrainConfig {
        regime,
        max_epochs: 200,
        step0: 0.5,
        seed,
        tolerance: 1e-6,
    };
    let (doc, train_acc) = match method {
        Method::L2 => {
            let model = train_penalized_logistic(&data, &logistic(NormRegime::L2Penalty(c)))?;
            let acc = accuracy(&model, &data)?;
            (ModelDocument::Linear(model), acc)
        }
        Method::L1 => {
            let model = train_penalized_logistic(&data, &logistic(NormRegime::L1Penalty(c)))?;
            let acc = accuracy(&model, &data)?;
            (ModelDocument::Linear(model), acc)
        }
        Method::GreedyL2 | Method::GreedyL1 => {
            let regime = if method == Method::GreedyL2 {
                NormRegime::L2Penalty(c)
            } else {
                NormRegime::L1Penalty(c)
            };
            let (train, eval) = data.split_at(data.len() * 2 / 3);
            let candidates = rules_first::rules::rank_candidates_by_purity(&train, budget + 20);
            let cfg = EvalGreedyConfig {
                budget,
                train: logistic(regime),
                candidate_epochs: 15,
                force_budget: false,
            };
            let sel = greedy_eval_loss(&train, &eval, &candidates, &cfg)?;
            let acc = accuracy(&sel.model, &data)?;
            (ModelDocument::RulesFirst(sel.model), acc)
        }
        Method::GreedyRule => {
            let mut cfg = GreedyConfig::new(k, b);
            cfg.train.seed = seed;
            let model = greedy_rule(&data, &cfg)?;
            let acc = accuracy(&model, &data)?;
            (ModelDocument::RulesFirst(model), acc)
        }
        Method::BoostRule => {
            let mut cfg = GreedyConfig::new(k, b);
            cfg.train.seed = seed;
            let model = boost_rule(&data, &cfg, 10, seed)?;
            let acc = accuracy(&model, &data)?;
            (ModelDocument::Boosted(model), acc)
        }
        Method::Relax => {
            let model =
                rules_first::linear::train_two_part_ball(&data, b, b, 200, 0.5, seed)?;
            let acc = accuracy(&model, &data)?;
            (ModelDocument::Linear(model), acc)
        }
    };
    let json = rules_first::io::model_to_string(&doc)
        .map_err(|e| ExperimentError::Config(format!("model serialization: {e}")))?;
    write_file(&out, &json)?;
    write_manifest(
        &out,
        &TrainManifest {
            data: data_path.display().to_string(),
            method: method.to_string(),
            seed,
            c,
            k,
            b,
            budget,
        },
    )?;
    println!("method={method} train_accuracy={train_acc:.6} model={out}");
    Ok(())
}

fn run_eval(data_path: &Path, model_path: &Path) -> Result<(), ExperimentError> {
    let data = load_dataset(data_path)?;
    let text = std::fs::read_to_string(model_path)
        .map_err(|e| ExperimentError::Data(format!("{}: {e}", model_path.display())))?;
    let doc = rules_first::io::model_from_str(&text)
        .map_err(|e| ExperimentError::Data(format!("{}: {e}", model_path.display())))?;
    let acc = match &doc {
        ModelDocument::Linear(m) => accuracy(m, &data)?,
        ModelDocument::RulesFirst(m) => accuracy(m, &data)?,
        ModelDocument::Boosted(m) => accuracy(m, &data)?,
    };
    let mis = rules_first::core::empirical_loss(
        &EvalProxy(&doc),
        &data,
        rules_first::core::LossKind::Mis,
    )?;
    println!("examples={} accuracy={acc:.6} mis={mis:.6}", data.len());
    Ok(())
}

/// Dispatch wrapper so empirical_loss can run over any saved model kind.
struct EvalProxy<'a>(&'a ModelDocument);

impl MarginModel for EvalProxy<'_> {
    fn signed_margin(&self, ex: &rules_first::core::Example) -> f64 {
        match self.0 {
            ModelDocument::Linear(m) => m.signed_margin(ex),
            ModelDocument::RulesFirst(m) => m.signed_margin(ex),
            ModelDocument::Boosted(m) => m.signed_margin(ex),
        }
    }
}

fn run_curve(common: Common) -> Result<(), ExperimentError> {
    let out = require_out(&common)?.to_string();
    let spec = SyntheticSpec {
        seed: common.seed.unwrap_or(0),
        ..SyntheticSpec::default()
    };
    let methods = parse_methods(common.method.as_deref())?
        .unwrap_or_else(|| vec![Method::L2, Method::GreedyL2]);
    let m_grid = match common.m.as_deref() {
        Some(s) => parse_list::<usize>(s, "m")?,
        None => vec![300, 600, 1200, 2400],
    };
    let mut params = CurveParams::new(spec, methods, m_grid);
    if let Some(t) = common.trials {
        params.trials = t;
    }
    if let Some(c) = common.c {
        params.c = c;
    }
    if let Some(budget) = common.budget {
        params.budget = budget;
    }
    if let Some(b) = parse_single::<f64>(common.b.as_deref(), "B")? {
        params.b = b;
    }
    let output = run_learning_curve(&params)?;
    write_file(&out, &output.csv)?;
    write_manifest(&out, &params)?;
    println!("wrote {} rows to {out}", output.records.len() + output.aggregates.len());
    Ok(())
}

fn run_kappa(kappa_grid: Option<&str>, common: Common) -> Result<(), ExperimentError> {
    let out = require_out(&common)?.to_string();
    let spec = SyntheticSpec {
        seed: common.seed.unwrap_or(0),
        ..SyntheticSpec::default()
    };
    let grid = match kappa_grid {
        Some(s) => parse_list::<usize>(s, "kappa")?,
        None => (0..=30).step_by(5).collect(),
    };
    let m = parse_single::<usize>(common.m.as_deref(), "m")?.unwrap_or(1500);
    let mut params = KappaParams::new(spec, grid, m);
    if let Some(t) = common.trials {
        params.trials = t;
    }
    if let Some(c) = common.c {
        params.c = c;
    }
    let output = run_kappa_sweep(&params)?;
    write_file(&out, &output.csv)?;
    write_manifest(&out, &params)?;
    println!("wrote {} rows to {out}", output.records.len() + output.aggregates.len());
    Ok(())
}

fn run_threshold(
    data: &Path,
    thresholds: Option<&str>,
    common: Common,
) -> Result<(), ExperimentError> {
    let out = require_out(&common)?.to_string();
    let corpus = std::fs::read_to_string(data)
        .map_err(|e| ExperimentError::Data(format!("{}: {e}", data.display())))?;
    let mut params = ThresholdParams {
        seed: common.seed.unwrap_or(0),
        ..ThresholdParams::default()
    };
    if let Some(s) = thresholds {
        params.thresholds = parse_list::<f64>(s, "threshold")?;
    }
    if let Some(methods) = parse_methods(common.method.as_deref())? {
        params.methods = methods;
    }
    if let Some(budget) = common.budget {
        params.budget = budget;
    }
    if let Some(c) = common.c {
        params.c = c;
    }
    let output = run_threshold_sweep(&corpus, &params)?;
    write_file(&out, &output.csv)?;
    write_file(&format!("{out}.attributions.tsv"), &output.attributions_tsv)?;
    write_manifest(&out, &params)?;
    println!(
        "wrote {} rows to {out} (+{} attributions)",
        output.rows.len(),
        output.attributions.len()
    );
    Ok(())
}

fn run_table1(common: Common) -> Result<(), ExperimentError> {
    let out = require_out(&common)?.to_string();
    let mut params = Table1Params {
        seed: common.seed.unwrap_or(0),
        ..Table1Params::default()
    };
    if let Some(t) = common.trials {
        params.trials = t;
    }
    if let Some(s) = common.k.as_deref() {
        params.k_grid = parse_list::<usize>(s, "k")?;
    }
    if let Some(s) = common.b.as_deref() {
        params.b_grid = parse_list::<u32>(s, "B")?;
    }
    if let Some(methods) = parse_methods(common.method.as_deref())? {
        params.methods = methods;
    }
    let output = run_table1_comparison(&params)?;
    write_file(&out, &output.csv)?;
    write_manifest(&out, &params)?;
    let mut summary = String::new();
    for cell in &output.cells {
        let measured = cell
            .measured_m
            .map(|m| m.to_string())
            .unwrap_or_else(|| "UNREACHED".to_string());
        let _ = writeln!(
            summary,
            "{} k={} B={}: m={measured}",
            cell.method, cell.k, cell.b
        );
    }
    print!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ ExperimentError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e @ ExperimentError::Data(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
