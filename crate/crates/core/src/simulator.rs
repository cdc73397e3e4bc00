//! Synthetic accuracy tables drawn from the models' own generative
//! assumptions, and Monte-Carlo coverage experiments over them.
//!
//! Every random draw comes from a generator keyed by
//! `(seed, trial, stream, system, song)`, so results do not depend on the
//! order in which trials or cells are evaluated.

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{EstimatorError, FittedModel, MeanVariance, ModelKind, QuantileMode};
use crate::exec::Execution;
use crate::scoring::AccuracyPair;

/// Rounding allowance when checking interval containment.
pub const CONTAINMENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    ConfigError(String),
    #[error("{failed} of {trials} trials failed to fit (last error: {last})")]
    TooManyFailures {
        failed: usize,
        trials: usize,
        last: EstimatorError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetSystem {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSystem {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
}

/// How `y` is drawn from `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    /// `y = x + mu + N(0, sigma^2)` for every system.
    S { mu: f64, sigma: f64 },
    /// `y = x + mu_A + N(0, sigma_A^2)`.
    I { systems: Vec<OffsetSystem> },
    /// `y = a_A x + b_A + N(0, sigma_A^2)`.
    L { systems: Vec<LineSystem> },
}

impl Generator {
    /// `(slope, intercept, sigma)` for system `idx`.
    fn system(&self, idx: usize) -> (f64, f64, f64) {
        match self {
            Generator::S { mu, sigma } => (1.0, *mu, *sigma),
            Generator::I { systems } => (1.0, systems[idx].mu, systems[idx].sigma),
            Generator::L { systems } => (systems[idx].a, systems[idx].b, systems[idx].sigma),
        }
    }

    fn system_count(&self) -> Option<usize> {
        match self {
            Generator::S { .. } => None,
            Generator::I { systems } => Some(systems.len()),
            Generator::L { systems } => Some(systems.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreWeight {
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_systems: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub model: Generator,
    pub x_lo: f64,
    pub x_hi: f64,
    #[serde(default)]
    pub genres: Vec<GenreWeight>,
    /// Fraction of songs whose pseudo accuracies carry no information:
    /// `x` is redrawn independently of `y` for every system.
    #[serde(default)]
    pub contamination: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: &str| Err(SimError::ConfigError(m.to_string()));
        if self.n_systems == 0 {
            return err("n_systems must be positive");
        }
        if self.n_test == 0 {
            return err("n_test must be positive");
        }
        if let Some(k) = self.model.system_count() {
            if k != self.n_systems {
                return err("model.systems must list one entry per system");
            }
        }
        for idx in 0..self.n_systems {
            let (a, b, sigma) = self.model.system(idx);
            if !(sigma >= 0.0 && sigma.is_finite() && a.is_finite() && b.is_finite()) {
                return err("generator parameters must be finite with sigma >= 0");
            }
        }
        if !(0.0 <= self.x_lo && self.x_lo < self.x_hi && self.x_hi <= 1.0) {
            return err("need 0 <= x_lo < x_hi <= 1");
        }
        if self
            .genres
            .iter()
            .any(|g| !(g.weight > 0.0 && g.weight.is_finite()) || g.name.is_empty())
        {
            return err("genre weights must be positive and names non-empty");
        }
        if !(0.0..=1.0).contains(&self.contamination) {
            return err("contamination must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn system_names(&self) -> Vec<String> {
        (1..=self.n_systems).map(|i| format!("sys{i}")).collect()
    }
}

/// Hidden ground truth for a test row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub song_id: String,
    pub system: String,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// Validation rows carry `y`; test rows do not.
    pub pairs: Vec<AccuracyPair>,
    pub truth: Vec<TruthRow>,
    pub clamp_events: usize,
    pub draws: usize,
}

impl SyntheticData {
    pub fn validation(&self) -> Vec<AccuracyPair> {
        self.pairs.iter().filter(|p| p.y.is_some()).cloned().collect()
    }

    pub fn clamp_rate(&self) -> f64 {
        self.clamp_events as f64 / self.draws.max(1) as f64
    }
}

const STREAM_CELL: u64 = 1;
const STREAM_SONG: u64 = 2;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for one `(trial, stream, system, song)` cell.
fn cell_rng(seed: u64, trial: u64, stream: u64, system: u64, song: u64) -> ChaCha8Rng {
    let key = [trial, stream, system, song]
        .iter()
        .fold(splitmix(seed), |h, &part| splitmix(h ^ splitmix(part)));
    ChaCha8Rng::seed_from_u64(key)
}

pub fn generate_synthetic_dataset(config: &SynthConfig) -> Result<SyntheticData, SimError> {
    config.validate()?;
    Ok(generate_trial(config, 0))
}

fn generate_trial(config: &SynthConfig, trial: u64) -> SyntheticData {
    let names = config.system_names();
    let n_songs = config.n_validation + config.n_test;
    let x_dist = Uniform::new(config.x_lo, config.x_hi).expect("validated bounds");
    let genre_index = (!config.genres.is_empty())
        .then(|| WeightedIndex::new(config.genres.iter().map(|g| g.weight)).expect("validated weights"));

    // Per-song attributes shared by every system.
    let songs: Vec<(String, String, bool)> = (0..n_songs)
        .map(|j| {
            let mut rng = cell_rng(config.seed, trial, STREAM_SONG, 0, j as u64);
            let genre = match &genre_index {
                Some(w) => config.genres[w.sample(&mut rng)].name.clone(),
                None => "unknown".to_string(),
            };
            let contaminated = config.contamination > 0.0 && rand::Rng::random::<f64>(&mut rng) < config.contamination;
            let id = if j < config.n_validation {
                format!("v{j:05}")
            } else {
                format!("t{:05}", j - config.n_validation)
            };
            (id, genre, contaminated)
        })
        .collect();

    let mut data = SyntheticData {
        pairs: Vec::with_capacity(names.len() * n_songs),
        truth: Vec::with_capacity(names.len() * config.n_test),
        clamp_events: 0,
        draws: 0,
    };
    for (a, system) in names.iter().enumerate() {
        let (slope, intercept, sigma) = config.model.system(a);
        let noise = Normal::new(0.0, sigma).expect("validated sigma");
        for (j, (id, genre, contaminated)) in songs.iter().enumerate() {
            let mut rng = cell_rng(config.seed, trial, STREAM_CELL, a as u64, j as u64);
            let x = x_dist.sample(&mut rng);
            let raw = slope * x + intercept + noise.sample(&mut rng);
            let y = raw.clamp(0.0, 1.0);
            data.draws += 1;
            if y != raw {
                data.clamp_events += 1;
            }
            let observed_x = if *contaminated { x_dist.sample(&mut rng) } else { x };
            let validation = j < config.n_validation;
            data.pairs.push(AccuracyPair {
                song_id: id.clone(),
                system: system.clone(),
                genre: genre.clone(),
                x: observed_x,
                y: validation.then_some(y),
            });
            if !validation {
                data.truth.push(TruthRow {
                    song_id: id.clone(),
                    system: system.clone(),
                    y,
                });
            }
        }
    }
    data
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageOptions {
    pub model: ModelKind,
    pub alpha: f64,
    pub trials: usize,
    pub variance: MeanVariance,
    /// Keep one row per (trial, system, mode) in the report.
    pub keep_trials: bool,
}

impl CoverageOptions {
    pub fn new(model: ModelKind, alpha: f64, trials: usize) -> Self {
        CoverageOptions {
            model,
            alpha,
            trials,
            variance: MeanVariance::Independent,
            keep_trials: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCoverage {
    pub quantile_mode: QuantileMode,
    /// Coverage a correctly specified Gaussian interval would have.
    pub nominal_coverage: f64,
    pub per_song: f64,
    pub mean: f64,
    /// First system minus second; absent with a single system.
    pub difference: Option<f64>,
    pub mean_width_song: f64,
    pub mean_width_mean: f64,
    pub mean_width_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemBias {
    pub system: String,
    /// Average over trials of (interval center - true test mean).
    pub mean_center_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub system: String,
    pub quantile_mode: QuantileMode,
    pub center: f64,
    pub half_width: f64,
    pub true_mean: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub trials: usize,
    pub completed_trials: usize,
    pub failed_trials: usize,
    pub model: ModelKind,
    pub alpha: f64,
    pub nominal_level: f64,
    pub variance: MeanVariance,
    pub clamp_rate: f64,
    pub modes: Vec<ModeCoverage>,
    pub bias: Vec<SystemBias>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial_rows: Option<Vec<TrialRow>>,
}

impl CoverageReport {
    pub fn mode(&self, mode: QuantileMode) -> &ModeCoverage {
        self.modes
            .iter()
            .find(|m| m.quantile_mode == mode)
            .expect("both modes reported")
    }
}

const MODES: [QuantileMode; 2] = [QuantileMode::PaperLiteral, QuantileMode::TwoSided];

#[derive(Debug, Clone, Default)]
struct ModeTally {
    song_hits: usize,
    song_total: usize,
    song_width: f64,
    mean_hits: usize,
    mean_total: usize,
    mean_width: f64,
    diff_hits: usize,
    diff_total: usize,
    diff_width: f64,
}

impl ModeTally {
    fn add(&mut self, other: &ModeTally) {
        self.song_hits += other.song_hits;
        self.song_total += other.song_total;
        self.song_width += other.song_width;
        self.mean_hits += other.mean_hits;
        self.mean_total += other.mean_total;
        self.mean_width += other.mean_width;
        self.diff_hits += other.diff_hits;
        self.diff_total += other.diff_total;
        self.diff_width += other.diff_width;
    }
}

struct TrialOutcome {
    tallies: [ModeTally; 2],
    center_errors: Vec<f64>,
    clamp_events: usize,
    draws: usize,
    rows: Vec<TrialRow>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn run_trial(
    config: &SynthConfig,
    names: &[String],
    opts: &CoverageOptions,
    trial: usize,
) -> Result<TrialOutcome, EstimatorError> {
    let data = generate_trial(config, trial as u64);
    let model = FittedModel::fit(opts.model, &data.validation())?;

    let per_system: Vec<(Vec<f64>, Vec<f64>)> = names
        .iter()
        .map(|s| {
            let xs = data
                .pairs
                .iter()
                .filter(|p| p.y.is_none() && &p.system == s)
                .map(|p| p.x)
                .collect();
            let ys = data.truth.iter().filter(|t| &t.system == s).map(|t| t.y).collect();
            (xs, ys)
        })
        .collect();

    let mut outcome = TrialOutcome {
        tallies: Default::default(),
        center_errors: Vec::with_capacity(names.len()),
        clamp_events: data.clamp_events,
        draws: data.draws,
        rows: Vec::new(),
    };
    for (m, mode) in MODES.iter().enumerate() {
        let tally = &mut outcome.tallies[m];
        for (system, (xs, ys)) in names.iter().zip(&per_system) {
            for (&x, &y) in xs.iter().zip(ys) {
                let est = model.predict_song(system, x, opts.alpha, *mode)?;
                tally.song_total += 1;
                tally.song_hits += est.contains(y, CONTAINMENT_SLACK) as usize;
                tally.song_width += 2.0 * est.half_width;
            }
            let est = model.predict_mean_with(system, xs, opts.alpha, *mode, opts.variance)?;
            let truth = mean(ys);
            let covered = est.contains(truth, CONTAINMENT_SLACK);
            tally.mean_total += 1;
            tally.mean_hits += covered as usize;
            tally.mean_width += 2.0 * est.half_width;
            if m == 0 {
                outcome.center_errors.push(est.center - truth);
            }
            if opts.keep_trials {
                outcome.rows.push(TrialRow {
                    trial,
                    system: system.clone(),
                    quantile_mode: *mode,
                    center: est.center,
                    half_width: est.half_width,
                    true_mean: truth,
                    covered,
                });
            }
        }
        if names.len() >= 2 {
            let ((xa, ya), (xb, yb)) = (&per_system[0], &per_system[1]);
            let est = model.compare_means_with(&names[0], xa, &names[1], xb, opts.alpha, *mode, opts.variance)?;
            tally.diff_total += 1;
            tally.diff_hits += est.contains(mean(ya) - mean(yb), CONTAINMENT_SLACK) as usize;
            tally.diff_width += 2.0 * est.half_width;
        }
    }
    Ok(outcome)
}

pub fn run_coverage_experiment(config: &SynthConfig, opts: &CoverageOptions) -> Result<CoverageReport, SimError> {
    run_coverage_experiment_with(config, opts, Execution::default())
}

/// Generates, fits and checks `opts.trials` independent datasets. Fit
/// failures are tolerated while they stay under 1% of trials.
pub fn run_coverage_experiment_with(
    config: &SynthConfig,
    opts: &CoverageOptions,
    exec: Execution,
) -> Result<CoverageReport, SimError> {
    config.validate()?;
    if opts.trials == 0 {
        return Err(SimError::ConfigError("trials must be positive".into()));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 0.5) {
        return Err(SimError::ConfigError("alpha must lie in (0, 0.5)".into()));
    }
    let names = config.system_names();
    let outcomes = exec.map_range(opts.trials, |trial| run_trial(config, &names, opts, trial));

    let mut tallies: [ModeTally; 2] = Default::default();
    let mut center_errors = vec![0.0; names.len()];
    let (mut clamps, mut draws, mut completed) = (0usize, 0usize, 0usize);
    let mut failed = Vec::new();
    let mut rows = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                completed += 1;
                for (t, o) in tallies.iter_mut().zip(&o.tallies) {
                    t.add(o);
                }
                for (acc, e) in center_errors.iter_mut().zip(&o.center_errors) {
                    *acc += e;
                }
                clamps += o.clamp_events;
                draws += o.draws;
                rows.extend(o.rows);
            }
            Err(e) => failed.push(e),
        }
    }
    if !failed.is_empty() && (failed.len() * 100 >= opts.trials || completed == 0) {
        return Err(SimError::TooManyFailures {
            failed: failed.len(),
            trials: opts.trials,
            last: failed.pop().expect("non-empty"),
        });
    }

    let ratio = |hits: usize, total: usize| hits as f64 / total as f64;
    let modes = MODES
        .iter()
        .zip(&tallies)
        .map(|(mode, t)| ModeCoverage {
            quantile_mode: *mode,
            nominal_coverage: match mode {
                QuantileMode::PaperLiteral => 1.0 - 2.0 * opts.alpha,
                QuantileMode::TwoSided => 1.0 - opts.alpha,
            },
            per_song: ratio(t.song_hits, t.song_total),
            mean: ratio(t.mean_hits, t.mean_total),
            difference: (t.diff_total > 0).then(|| ratio(t.diff_hits, t.diff_total)),
            mean_width_song: t.song_width / t.song_total as f64,
            mean_width_mean: t.mean_width / t.mean_total as f64,
            mean_width_difference: (t.diff_total > 0).then(|| t.diff_width / t.diff_total as f64),
        })
        .collect();

    Ok(CoverageReport {
        trials: opts.trials,
        completed_trials: completed,
        failed_trials: failed.len(),
        model: opts.model,
        alpha: opts.alpha,
        nominal_level: 1.0 - opts.alpha,
        variance: opts.variance,
        clamp_rate: ratio(clamps, draws.max(1)),
        modes,
        bias: names
            .iter()
            .zip(center_errors)
            .map(|(system, total)| SystemBias {
                system: system.clone(),
                mean_center_error: total / completed as f64,
            })
            .collect(),
        trial_rows: opts.keep_trials.then_some(rows),
    })
}
