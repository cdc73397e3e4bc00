mod compare;
mod consensus;
mod estimate;
mod fit;
mod score;
mod simulate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use proxy_eval::estimators::{FittedModel, MeanVariance, QuantileMode};
use proxy_eval::scoring::{read_table, AccuracyPair, FrameSpec};
use proxy_eval::Vocabulary;
use serde_json::Value;

/// A malformed invocation, reported with exit code 3.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "proxy-eval",
    version,
    about = "Estimate ground-truth chord accuracy from pseudo annotations"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every system against pseudo and ground-truth annotations.
    Score(score::ScoreArgs),
    /// Fit the S, I or L model on the validation rows of a table.
    Fit(fit::FitArgs),
    /// Interval estimates of each system's mean ground-truth accuracy.
    Estimate(estimate::EstimateArgs),
    /// Interval for the difference of two systems' mean accuracies.
    Compare(compare::CompareArgs),
    /// Frame-wise majority vote over all systems' predictions.
    Consensus(consensus::ConsensusArgs),
    /// Monte Carlo coverage check on synthetic accuracy pairs.
    Simulate(simulate::SimulateArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score(a) => score::run(a),
        Command::Fit(a) => fit::run(a),
        Command::Estimate(a) => estimate::run(a),
        Command::Compare(a) => compare::run(a),
        Command::Consensus(a) => consensus::run(a),
        Command::Simulate(a) => simulate::run(a),
    }
}

#[derive(Debug, Args)]
struct FrameArgs {
    /// Frame hop in seconds.
    #[arg(long, default_value_t = proxy_eval::scoring::DEFAULT_HOP, value_parser = parse_hop)]
    hop: f64,
    /// Chord vocabulary: majmin, or majmin-xn to score X as N.
    #[arg(long, default_value = "majmin", value_parser = parse_vocab)]
    vocab: String,
}

impl FrameArgs {
    fn frames(&self) -> FrameSpec {
        FrameSpec::new(self.hop).expect("validated by the parser")
    }

    fn vocabulary(&self) -> Vocabulary {
        Vocabulary::by_name(&self.vocab).expect("validated by the parser")
    }
}

fn parse_hop(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|h| FrameSpec::new(*h).is_some())
        .ok_or_else(|| format!("hop must be a positive number of seconds, got {s:?}"))
}

fn parse_vocab(s: &str) -> Result<String, String> {
    Vocabulary::by_name(s)
        .map(|_| s.to_string())
        .ok_or_else(|| format!("unknown vocabulary {s:?} (majmin | majmin-xn)"))
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|a| *a > 0.0 && *a < 0.5)
        .ok_or_else(|| format!("alpha must lie in (0, 0.5), got {s:?}"))
}

/// Which table rows feed the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Rows {
    /// Songs without ground truth.
    Test,
    /// Songs with ground truth; the report adds the observed mean.
    Validation,
}

impl Rows {
    fn as_str(self) -> &'static str {
        match self {
            Rows::Test => "test",
            Rows::Validation => "validation",
        }
    }

    fn keep(self, pair: &AccuracyPair) -> bool {
        match self {
            Rows::Test => pair.y.is_none(),
            Rows::Validation => pair.y.is_some(),
        }
    }
}

/// Flags shared by `estimate` and `compare`.
#[derive(Debug, Args)]
struct IntervalArgs {
    /// Accuracy table written by `score`.
    #[arg(long)]
    table: PathBuf,
    /// Parameters written by `fit`.
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    alpha: f64,
    /// Quantile convention; defaults to the one stored with the parameters.
    #[arg(long)]
    mode: Option<QuantileMode>,
    /// Variance of a mean over test songs: independent | shared-fit.
    #[arg(long, default_value = "independent")]
    variance: MeanVariance,
    #[arg(long, value_enum, default_value_t = Rows::Test)]
    rows: Rows,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
    /// Long-format CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Aligned-text summary path (always printed to stdout).
    #[arg(long)]
    summary: Option<PathBuf>,
}

struct IntervalInputs {
    model: FittedModel,
    mode: QuantileMode,
    pairs: Vec<AccuracyPair>,
}

impl IntervalArgs {
    fn load(&self) -> Result<IntervalInputs> {
        let pairs = load_table(&self.table)?;
        let text =
            fs::read_to_string(&self.params).with_context(|| format!("cannot read {}", self.params.display()))?;
        let doc: Value =
            serde_json::from_str(&text).with_context(|| format!("{} is not JSON", self.params.display()))?;
        let (model, stored) = FittedModel::from_document(&doc).with_context(|| format!("{}", self.params.display()))?;

        let fitted: BTreeSet<&str> = model.systems().into_iter().collect();
        let tabled: BTreeSet<&str> = pairs.iter().map(|p| p.system.as_str()).collect();
        if let Some(s) = tabled.difference(&fitted).next() {
            bail!("system {s} is in the table but was not fitted");
        }
        if let Some(s) = fitted.difference(&tabled).next() {
            bail!("system {s} was fitted but is missing from the table");
        }
        Ok(IntervalInputs {
            model,
            mode: self.mode.unwrap_or(stored),
            pairs,
        })
    }

    fn config(&self, mode: QuantileMode) -> serde_json::Map<String, Value> {
        let mut c = serde_json::Map::new();
        c.insert("table".into(), path_value(&self.table));
        c.insert("params".into(), path_value(&self.params));
        c.insert("alpha".into(), self.alpha.into());
        c.insert("quantile_mode".into(), mode.as_str().into());
        c.insert("variance".into(), self.variance.as_str().into());
        c.insert("rows".into(), self.rows.as_str().into());
        c.insert("out".into(), path_value(&self.out));
        c.insert("csv".into(), self.csv.as_deref().map_or(Value::Null, path_value));
        c.insert(
            "summary".into(),
            self.summary.as_deref().map_or(Value::Null, path_value),
        );
        c
    }

    fn inputs(&self) -> Result<Vec<crate::report::InputHash>> {
        Ok(vec![
            crate::report::hash_file(&self.table)?,
            crate::report::hash_file(&self.params)?,
        ])
    }

    fn write_outputs(&self, report: &Value, csv: &str, summary: &str) -> Result<()> {
        crate::report::write_json(&self.out, report)?;
        if let Some(path) = &self.csv {
            fs::write(path, csv).with_context(|| format!("cannot write {}", path.display()))?;
        }
        if let Some(path) = &self.summary {
            fs::write(path, summary).with_context(|| format!("cannot write {}", path.display()))?;
        }
        print!("{summary}");
        Ok(())
    }
}

fn load_table(path: &Path) -> Result<Vec<AccuracyPair>> {
    let file = fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    read_table(file).with_context(|| format!("{}", path.display()))
}

fn path_value(path: &Path) -> Value {
    Value::String(path.display().to_string())
}

/// Coverage of the quantile convention at level `alpha`.
fn nominal_level(mode: QuantileMode, alpha: f64) -> f64 {
    match mode {
        QuantileMode::PaperLiteral => 1.0 - 2.0 * alpha,
        QuantileMode::TwoSided => 1.0 - alpha,
    }
}

/// Selected rows grouped by system, then genre. `None` as the genre key
/// stands for all genres together.
fn group_rows(
    pairs: &[AccuracyPair],
    rows: Rows,
    by_genre: bool,
) -> BTreeMap<&str, BTreeMap<Option<&str>, Vec<&AccuracyPair>>> {
    let mut groups: BTreeMap<&str, BTreeMap<Option<&str>, Vec<&AccuracyPair>>> = BTreeMap::new();
    for p in pairs.iter().filter(|p| rows.keep(p)) {
        let genre = by_genre.then_some(p.genre.as_str());
        groups.entry(&p.system).or_default().entry(genre).or_default().push(p);
    }
    groups
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Refuses a non-empty existing directory unless `force`.
fn prepare_out_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            bail!("{} exists and is not a directory", dir.display());
        }
        let occupied = fs::read_dir(dir)
            .with_context(|| format!("cannot list {}", dir.display()))?
            .next()
            .is_some();
        if occupied && !force {
            bail!("{} already contains files; pass --force to overwrite", dir.display());
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}
