use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use proxy_eval::estimators::{MeanVariance, ModelKind};
use proxy_eval::simulator::{run_coverage_experiment, CoverageOptions, CoverageReport, SynthConfig};
use serde_json::{json, Value};

use super::{parse_alpha, path_value, prepare_out_dir};
use crate::report::{self, round};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Synthetic generator configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Model fitted in every trial.
    #[arg(long, default_value = "i")]
    model: ModelKind,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    alpha: f64,
    /// Variance of a mean over test songs: independent | shared-fit.
    #[arg(long, default_value = "independent")]
    variance: MeanVariance,
    /// Also write one row per trial, system and quantile mode.
    #[arg(long)]
    verbose: bool,
    /// Output directory for `coverage.json` and `coverage.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Overwrite files in a non-empty output directory.
    #[arg(long)]
    force: bool,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    if args.trials == 0 {
        return Err(super::UsageError("--trials must be positive".into()).into());
    }
    let text = fs::read_to_string(&args.config).with_context(|| format!("cannot read {}", args.config.display()))?;
    let config: SynthConfig =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid configuration", args.config.display()))?;
    config.validate()?;
    prepare_out_dir(&args.out, args.force)?;

    let opts = CoverageOptions {
        variance: args.variance,
        keep_trials: args.verbose,
        ..CoverageOptions::new(args.model, args.alpha, args.trials)
    };
    let mut result = run_coverage_experiment(&config, &opts)?;
    let trial_rows = result.trial_rows.take();

    let echo = json!({
        "config": path_value(&args.config),
        "trials": args.trials,
        "model": args.model,
        "alpha": args.alpha,
        "variance": args.variance,
        "verbose": args.verbose,
        "out": path_value(&args.out),
        "generator": config,
    });
    let doc = json!({
        "run": report::envelope("simulate", echo, vec![report::hash_file(&args.config)?]),
        "coverage": rounded(&result),
    });
    report::write_json(&args.out.join("coverage.json"), &doc)?;
    fs::write(args.out.join("coverage.csv"), coverage_csv(&result))?;
    if let Some(rows) = trial_rows {
        let mut csv = String::from("trial,system,quantile_mode,center,half_width,true_mean,covered\n");
        for r in rows {
            csv.push_str(&format!(
                "{},{},{},{:.10},{:.10},{:.10},{}\n",
                r.trial,
                r.system,
                r.quantile_mode.as_str(),
                round(r.center),
                round(r.half_width),
                round(r.true_mean),
                r.covered
            ));
        }
        fs::write(args.out.join("trials.csv"), csv)?;
    }
    print!("{}", summary(&result));
    Ok(())
}

fn rounded(report: &CoverageReport) -> Value {
    fn walk(v: &mut Value) {
        match v {
            Value::Number(n) if n.is_f64() => *v = round(n.as_f64().unwrap_or_default()).into(),
            Value::Array(items) => items.iter_mut().for_each(walk),
            Value::Object(map) => map.values_mut().for_each(walk),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(report).expect("report serializes");
    walk(&mut v);
    v
}

fn coverage_csv(r: &CoverageReport) -> String {
    let mut out = String::from(
        "model,variance,quantile_mode,nominal_coverage,per_song,mean,difference,mean_width_song,mean_width_mean,mean_width_difference\n",
    );
    let opt = |v: Option<f64>| v.map(|v| format!("{:.10}", round(v))).unwrap_or_default();
    for m in &r.modes {
        out.push_str(&format!(
            "{},{},{},{:.10},{:.10},{:.10},{},{:.10},{:.10},{}\n",
            r.model,
            r.variance.as_str(),
            m.quantile_mode.as_str(),
            round(m.nominal_coverage),
            round(m.per_song),
            round(m.mean),
            opt(m.difference),
            round(m.mean_width_song),
            round(m.mean_width_mean),
            opt(m.mean_width_difference),
        ));
    }
    out
}

fn summary(r: &CoverageReport) -> String {
    let mut table = vec![vec![
        "quantile".to_string(),
        "nominal (%)".into(),
        "per-song (%)".into(),
        "mean (%)".into(),
        "difference (%)".into(),
    ]];
    for m in &r.modes {
        table.push(vec![
            m.quantile_mode.as_str().into(),
            report::pct(m.nominal_coverage),
            report::pct(m.per_song),
            report::pct(m.mean),
            m.difference.map(report::pct).unwrap_or_else(|| "-".into()),
        ]);
    }
    let mut out = format!(
        "coverage over {} of {} trials, model {}, {} variance, clamp rate {}%\n",
        r.completed_trials,
        r.trials,
        r.model,
        r.variance.as_str(),
        report::pct(r.clamp_rate)
    );
    out.push_str(&report::align(&table));
    for b in &r.bias {
        out.push_str(&format!(
            "bias {}: {} points\n",
            b.system,
            report::pct(b.mean_center_error)
        ));
    }
    out
}
