//! Interval estimates of ground-truth accuracy from pseudo accuracy.
//!
//! Three models relate a system's pseudo accuracy `x` to its ground-truth
//! accuracy `y` on a validation set: a pooled offset (S), a per-system
//! offset (I) and a per-system line (L). Each fitted model yields
//! Gaussian intervals for a single song, for the mean over a test set, and
//! for the difference of two systems' means.
//!
//! All accuracies are fractions in `[0, 1]`.

mod fit;
mod quantile;

pub use fit::{
    fit_individual, fit_individual_gaussian, fit_linear, fit_linear_fixed_slope, fit_linear_regression,
    fit_single_gaussian, group_by_system, IEntry, IParams, LEntry, LParams, SParams,
};
pub use quantile::normal_quantile;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::scoring::AccuracyPair;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("probability {0} outside (0, 1)")]
    DomainError(f64),
    #[error("alpha {0} outside (0, 1)")]
    InvalidAlpha(f64),
    #[error("need at least {needed} validation pairs, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("systems do not share the same validation songs")]
    UnbalancedPanel,
    #[error("pseudo accuracies have zero variance")]
    DegenerateDesign,
    #[error("system {0:?} was not part of the fit")]
    UnknownSystem(String),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("song {song}, system {system}: no ground-truth accuracy")]
    MissingGroundTruth { song: String, system: String },
    #[error("bad params document: {0}")]
    Params(String),
}

/// Which normal quantile multiplies the standard error.
///
/// `PaperLiteral` uses `Q(1 - alpha)`, so `center ± half_width` is a
/// two-sided interval of nominal coverage `1 - 2 alpha`. `TwoSided` uses
/// `Q(1 - alpha / 2)` for nominal coverage `1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileMode {
    #[default]
    PaperLiteral,
    TwoSided,
}

impl QuantileMode {
    pub fn z(self, alpha: f64) -> Result<f64, EstimatorError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(EstimatorError::InvalidAlpha(alpha));
        }
        match self {
            QuantileMode::PaperLiteral => normal_quantile(1.0 - alpha),
            QuantileMode::TwoSided => normal_quantile(1.0 - alpha / 2.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuantileMode::PaperLiteral => "paper-literal",
            QuantileMode::TwoSided => "two-sided",
        }
    }
}

impl FromStr for QuantileMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-literal" => Ok(QuantileMode::PaperLiteral),
            "two-sided" => Ok(QuantileMode::TwoSided),
            _ => Err(format!("unknown quantile mode {s:?} (paper-literal | two-sided)")),
        }
    }
}

/// Variance used for the mean over a test set.
///
/// `Independent` sums the per-song prediction variances and divides by
/// `m^2`, treating every test song's error as independent. This ignores
/// the error of the fitted parameters, which all test songs share, so it
/// under-covers once `m` is comparable to or larger than `n`.
/// `SharedFit` counts that error once: `sigma^2 (1/m + 1/N)` for the
/// offset models and `sigma^2 (1/m + 1/n + (x̄_test - x̄)^2 / Sxx)` for
/// the linear model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanVariance {
    #[default]
    Independent,
    SharedFit,
}

impl MeanVariance {
    pub fn as_str(self) -> &'static str {
        match self {
            MeanVariance::Independent => "independent",
            MeanVariance::SharedFit => "shared-fit",
        }
    }
}

impl FromStr for MeanVariance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" => Ok(MeanVariance::Independent),
            "shared-fit" => Ok(MeanVariance::SharedFit),
            _ => Err(format!("unknown variance {s:?} (independent | shared-fit)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub center: f64,
    pub half_width: f64,
    pub alpha: f64,
    pub quantile_mode: QuantileMode,
}

impl IntervalEstimate {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    /// Containment with `slack` added to both ends to absorb rounding.
    pub fn contains(&self, value: f64, slack: f64) -> bool {
        (value - self.center).abs() <= self.half_width + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    S,
    I,
    L,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::S, ModelKind::I, ModelKind::L];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::S => "s",
            ModelKind::I => "i",
            ModelKind::L => "l",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s" => Ok(ModelKind::S),
            "i" => Ok(ModelKind::I),
            "l" => Ok(ModelKind::L),
            _ => Err(format!("unknown model {s:?} (s | i | l)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Single(SParams),
    Individual(IParams),
    Linear(LParams),
}

/// What a fitted model says about one system: `y ≈ slope * x + intercept`
/// with residual variance `sigma2`, plus the validation design statistics
/// behind the leverage term.
#[derive(Debug, Clone, Copy)]
struct SystemFit {
    slope: f64,
    intercept: f64,
    sigma2: f64,
    xbar: f64,
    s2x: f64,
    big_n: usize,
}

impl SystemFit {
    fn center(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    /// `(x - x̄)^2 / ((N - 1) s_x^2)`.
    fn leverage(&self, x: f64) -> Result<f64, EstimatorError> {
        let dx = x - self.xbar;
        let sxx = (self.big_n - 1) as f64 * self.s2x;
        if sxx == 0.0 {
            return if dx == 0.0 {
                Ok(0.0)
            } else {
                Err(EstimatorError::DegenerateDesign)
            };
        }
        Ok(dx * dx / sxx)
    }

    /// `1 + 1/N + leverage(x)`, the per-song variance factor.
    fn song_factor(&self, x: f64) -> Result<f64, EstimatorError> {
        Ok(1.0 + 1.0 / self.big_n as f64 + self.leverage(x)?)
    }

    fn mean_variance(&self, xs: &[f64], variance: MeanVariance, slope_fitted: bool) -> Result<f64, EstimatorError> {
        if xs.is_empty() {
            return Err(EstimatorError::EmptyTestSet);
        }
        let m = xs.len() as f64;
        match variance {
            MeanVariance::Independent => {
                let mut total = 0.0;
                for &x in xs {
                    total += self.song_factor(x)?;
                }
                Ok(self.sigma2 * total / (m * m))
            }
            MeanVariance::SharedFit => {
                let mut factor = 1.0 / m + 1.0 / self.big_n as f64;
                if slope_fitted {
                    factor += self.leverage(mean_of(xs))?;
                }
                Ok(self.sigma2 * factor)
            }
        }
    }
}

fn mean_of(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl FittedModel {
    pub fn fit(kind: ModelKind, validation: &[AccuracyPair]) -> Result<Self, EstimatorError> {
        Ok(match kind {
            ModelKind::S => FittedModel::Single(fit_single_gaussian(validation)?),
            ModelKind::I => FittedModel::Individual(fit_individual(validation)?),
            ModelKind::L => FittedModel::Linear(fit_linear(validation)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Single(_) => ModelKind::S,
            FittedModel::Individual(_) => ModelKind::I,
            FittedModel::Linear(_) => ModelKind::L,
        }
    }

    pub fn systems(&self) -> Vec<&str> {
        match self {
            FittedModel::Single(s) => s.systems.iter().map(String::as_str).collect(),
            FittedModel::Individual(p) => p.keys().map(String::as_str).collect(),
            FittedModel::Linear(p) => p.keys().map(String::as_str).collect(),
        }
    }

    fn system(&self, name: &str) -> Result<SystemFit, EstimatorError> {
        let unknown = || EstimatorError::UnknownSystem(name.to_string());
        Ok(match self {
            // The pooled fit applies to any system, including ones
            // scored after fitting.
            FittedModel::Single(s) => SystemFit {
                slope: 1.0,
                intercept: s.mu,
                sigma2: s.sigma2,
                xbar: s.xbar,
                s2x: s.s2x,
                big_n: s.pool_size,
            },
            FittedModel::Individual(p) => {
                let e = p.get(name).ok_or_else(unknown)?;
                SystemFit {
                    slope: 1.0,
                    intercept: e.mu_a,
                    sigma2: e.sigma2_a,
                    xbar: e.xbar_a,
                    s2x: e.s2x_a,
                    big_n: e.n,
                }
            }
            FittedModel::Linear(p) => {
                let e = p.get(name).ok_or_else(unknown)?;
                SystemFit {
                    slope: e.a,
                    intercept: e.b,
                    sigma2: e.sigma2_a,
                    xbar: e.xbar_a,
                    s2x: e.s2x_a,
                    big_n: e.n,
                }
            }
        })
    }

    /// Interval for one test song's ground-truth accuracy.
    pub fn predict_song(
        &self,
        system: &str,
        x: f64,
        alpha: f64,
        mode: QuantileMode,
    ) -> Result<IntervalEstimate, EstimatorError> {
        let z = mode.z(alpha)?;
        let fit = self.system(system)?;
        Ok(IntervalEstimate {
            center: fit.center(x),
            half_width: z * (fit.sigma2 * fit.song_factor(x)?).sqrt(),
            alpha,
            quantile_mode: mode,
        })
    }

    /// Interval for the mean ground-truth accuracy over `xs`.
    pub fn predict_mean(
        &self,
        system: &str,
        xs: &[f64],
        alpha: f64,
        mode: QuantileMode,
    ) -> Result<IntervalEstimate, EstimatorError> {
        self.predict_mean_with(system, xs, alpha, mode, MeanVariance::Independent)
    }

    pub fn predict_mean_with(
        &self,
        system: &str,
        xs: &[f64],
        alpha: f64,
        mode: QuantileMode,
        variance: MeanVariance,
    ) -> Result<IntervalEstimate, EstimatorError> {
        let z = mode.z(alpha)?;
        let fit = self.system(system)?;
        let var = fit.mean_variance(xs, variance, self.kind() == ModelKind::L)?;
        Ok(IntervalEstimate {
            center: fit.center(mean_of(xs)),
            half_width: z * var.sqrt(),
            alpha,
            quantile_mode: mode,
        })
    }

    /// Interval for `mean(y_A) - mean(y_B)`; positive favours `a`.
    pub fn compare_means(
        &self,
        a: &str,
        xs_a: &[f64],
        b: &str,
        xs_b: &[f64],
        alpha: f64,
        mode: QuantileMode,
    ) -> Result<IntervalEstimate, EstimatorError> {
        self.compare_means_with(a, xs_a, b, xs_b, alpha, mode, MeanVariance::Independent)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn compare_means_with(
        &self,
        a: &str,
        xs_a: &[f64],
        b: &str,
        xs_b: &[f64],
        alpha: f64,
        mode: QuantileMode,
        variance: MeanVariance,
    ) -> Result<IntervalEstimate, EstimatorError> {
        let z = mode.z(alpha)?;
        let (fa, fb) = (self.system(a)?, self.system(b)?);
        if xs_a.is_empty() || xs_b.is_empty() {
            return Err(EstimatorError::EmptyTestSet);
        }
        let (mean_a, mean_b) = (mean_of(xs_a), mean_of(xs_b));
        let center = fa.slope * mean_a - fb.slope * mean_b + (fa.intercept - fb.intercept);
        let var = match (self, variance) {
            // The pooled offset cancels in the difference, leaving only
            // the test-song noise of each side.
            (FittedModel::Single(s), MeanVariance::SharedFit) => {
                s.sigma2 * (1.0 / xs_a.len() as f64 + 1.0 / xs_b.len() as f64)
            }
            _ => {
                let slope_fitted = self.kind() == ModelKind::L;
                fa.mean_variance(xs_a, variance, slope_fitted)? + fb.mean_variance(xs_b, variance, slope_fitted)?
            }
        };
        Ok(IntervalEstimate {
            center,
            half_width: z * var.sqrt(),
            alpha,
            quantile_mode: mode,
        })
    }

    /// `{ "model", "quantile_mode", "pooled" | "per_system" }`.
    pub fn to_document(&self, mode: QuantileMode) -> Value {
        let body = match self {
            FittedModel::Single(s) => ("pooled", serde_json::to_value(s)),
            FittedModel::Individual(p) => ("per_system", serde_json::to_value(p)),
            FittedModel::Linear(p) => ("per_system", serde_json::to_value(p)),
        };
        json!({
            "model": self.kind(),
            "quantile_mode": mode,
            body.0: body.1.expect("params serialize"),
        })
    }

    pub fn from_document(doc: &Value) -> Result<(Self, QuantileMode), EstimatorError> {
        fn field<T: serde::de::DeserializeOwned>(doc: &Value, name: &str) -> Result<T, EstimatorError> {
            let v = doc
                .get(name)
                .ok_or_else(|| EstimatorError::Params(format!("missing {name}")))?;
            serde_json::from_value(v.clone()).map_err(|e| EstimatorError::Params(format!("{name}: {e}")))
        }
        let kind: ModelKind = field(doc, "model")?;
        let mode: QuantileMode = field(doc, "quantile_mode")?;
        let model = match kind {
            ModelKind::S => FittedModel::Single(field(doc, "pooled")?),
            ModelKind::I => FittedModel::Individual(field(doc, "per_system")?),
            ModelKind::L => FittedModel::Linear(field(doc, "per_system")?),
        };
        Ok((model, mode))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: [(f64, f64); 3] = [(0.5, 0.6), (0.7, 0.7), (0.9, 0.8)];
    const Z95: f64 = 1.644_853_626_951_472_2;

    fn individual() -> FittedModel {
        let mut p = IParams::new();
        p.insert("A".into(), fit_individual_gaussian(&FIXTURE).unwrap());
        FittedModel::Individual(p)
    }

    fn linear() -> FittedModel {
        let mut p = LParams::new();
        p.insert("A".into(), fit_linear_regression(&FIXTURE).unwrap());
        FittedModel::Linear(p)
    }

    #[test]
    fn individual_song_interval() {
        let est = individual()
            .predict_song("A", 0.7, 0.05, QuantileMode::PaperLiteral)
            .unwrap();
        assert!((est.center - 0.7).abs() < 1e-12);
        // 1.6448536 * 0.1 * sqrt(4/3)
        assert!((est.half_width - 0.189_931_5).abs() < 1e-6);
        assert!((est.half_width - 0.18995).abs() < 5e-5);
        assert_eq!(est.quantile_mode, QuantileMode::PaperLiteral);
    }

    #[test]
    fn individual_mean_interval() {
        let est = individual()
            .predict_mean("A", &[0.6, 0.8], 0.05, QuantileMode::PaperLiteral)
            .unwrap();
        assert!((est.center - 0.7).abs() < 1e-12);
        let expected = Z95 * (0.01 * (2.0 * (1.0 + 1.0 / 3.0 + 0.125)) / 4.0f64).sqrt();
        assert!((est.half_width - expected).abs() < 1e-12);
        assert!((est.half_width - 0.14045).abs() < 1e-5);
    }

    #[test]
    fn linear_collinear_has_zero_width() {
        let est = linear()
            .predict_song("A", 0.6, 0.05, QuantileMode::PaperLiteral)
            .unwrap();
        assert!((est.center - 0.65).abs() < 1e-12);
        assert!(est.half_width < 1e-10);
    }

    #[test]
    fn unknown_system_and_empty_sets() {
        let m = individual();
        assert_eq!(
            m.predict_song("Z", 0.5, 0.05, QuantileMode::TwoSided),
            Err(EstimatorError::UnknownSystem("Z".into()))
        );
        assert_eq!(
            m.predict_mean("A", &[], 0.05, QuantileMode::TwoSided),
            Err(EstimatorError::EmptyTestSet)
        );
        assert_eq!(
            m.compare_means("A", &[0.5], "A", &[], 0.05, QuantileMode::TwoSided),
            Err(EstimatorError::EmptyTestSet)
        );
        assert_eq!(
            m.predict_song("A", 0.5, 1.0, QuantileMode::TwoSided),
            Err(EstimatorError::InvalidAlpha(1.0))
        );
    }

    #[test]
    fn two_sided_uses_half_alpha() {
        let m = individual();
        let lit = m.predict_song("A", 0.7, 0.1, QuantileMode::PaperLiteral).unwrap();
        let two = m.predict_song("A", 0.7, 0.2, QuantileMode::TwoSided).unwrap();
        assert!((lit.half_width - two.half_width).abs() < 1e-12);
    }

    #[test]
    fn compare_with_itself() {
        let m = individual();
        let xs = [0.55, 0.61, 0.93];
        let mean = m.predict_mean("A", &xs, 0.05, QuantileMode::TwoSided).unwrap();
        let diff = m
            .compare_means("A", &xs, "A", &xs, 0.05, QuantileMode::TwoSided)
            .unwrap();
        assert_eq!(diff.center, 0.0);
        assert!((diff.half_width - 2f64.sqrt() * mean.half_width).abs() < 1e-12);
    }

    #[test]
    fn compare_offsets() {
        let mut p = IParams::new();
        p.insert(
            "A".into(),
            fit_individual_gaussian(&[(0.5, 0.6), (0.7, 0.8), (0.6, 0.65)]).unwrap(),
        );
        p.insert(
            "B".into(),
            fit_individual_gaussian(&[(0.5, 0.55), (0.7, 0.75), (0.6, 0.6)]).unwrap(),
        );
        let m = FittedModel::Individual(p);
        let xs = [0.4, 0.8];
        let d = m
            .compare_means("A", &xs, "B", &xs, 0.05, QuantileMode::PaperLiteral)
            .unwrap();
        assert!((d.center - 0.05).abs() < 1e-12);
    }

    #[test]
    fn pooled_comparison_ignores_offset() {
        let s = SParams {
            mu: 0.3,
            sigma2: 0.01,
            xbar: 0.5,
            s2x: 0.02,
            pool_size: 10,
            n_systems: 2,
            n: 5,
            systems: vec!["A".into(), "B".into()],
        };
        let m = FittedModel::Single(s);
        let d = m
            .compare_means("A", &[0.7], "B", &[0.5], 0.05, QuantileMode::PaperLiteral)
            .unwrap();
        assert!((d.center - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_gives_zero_width() {
        let mut p = IParams::new();
        p.insert("A".into(), fit_individual_gaussian(&[(0.2, 0.3), (0.6, 0.7)]).unwrap());
        let m = FittedModel::Individual(p);
        let est = m.predict_mean("A", &[0.1, 0.9], 0.05, QuantileMode::TwoSided).unwrap();
        assert!((est.center - 0.6).abs() < 1e-12);
        assert!(est.half_width < 1e-7);
    }

    #[test]
    fn degenerate_design_in_prediction() {
        let mut p = IParams::new();
        p.insert("A".into(), fit_individual_gaussian(&[(0.5, 0.6), (0.5, 0.7)]).unwrap());
        let m = FittedModel::Individual(p);
        assert!(m.predict_song("A", 0.5, 0.05, QuantileMode::TwoSided).is_ok());
        assert_eq!(
            m.predict_song("A", 0.6, 0.05, QuantileMode::TwoSided),
            Err(EstimatorError::DegenerateDesign)
        );
    }

    #[test]
    fn shared_fit_variance() {
        let m = individual();
        let xs = [0.6, 0.8];
        let est = m
            .predict_mean_with("A", &xs, 0.05, QuantileMode::PaperLiteral, MeanVariance::SharedFit)
            .unwrap();
        let expected = Z95 * (0.01 * (0.5 + 1.0 / 3.0f64)).sqrt();
        assert!((est.half_width - expected).abs() < 1e-12);
    }

    #[test]
    fn document_round_trip() {
        for model in [individual(), linear()] {
            let doc = model.to_document(QuantileMode::TwoSided);
            let (back, mode) = FittedModel::from_document(&doc).unwrap();
            assert_eq!(back, model);
            assert_eq!(mode, QuantileMode::TwoSided);
        }
        let doc = individual().to_document(QuantileMode::PaperLiteral);
        assert_eq!(doc["model"], "i");
        assert_eq!(doc["quantile_mode"], "paper-literal");
        assert!(doc["per_system"]["A"]["mu_a"].is_number());
        assert!(FittedModel::from_document(&json!({"model": "s"})).is_err());
    }
}
