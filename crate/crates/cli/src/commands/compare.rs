use std::collections::BTreeSet;

use anyhow::{bail, Result};
use clap::Args;
use serde_json::{json, Value};

use super::{mean, nominal_level, IntervalArgs, Rows};
use crate::report::{self, round};

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    common: IntervalArgs,
    /// Two systems `A,B`; a positive center means A is better.
    #[arg(long, value_delimiter = ',', required = true)]
    systems: Vec<String>,
}

pub fn run(args: CompareArgs) -> Result<()> {
    let c = &args.common;
    let [a, b] = <[String; 2]>::try_from(args.systems.clone())
        .map_err(|_| crate::commands::UsageError("--systems takes exactly two names, A,B".into()))?;
    let inputs = c.load()?;

    let side = |system: &str| {
        let rows: Vec<_> = inputs
            .pairs
            .iter()
            .filter(|p| p.system == system && c.rows.keep(p))
            .collect();
        let songs: BTreeSet<&str> = rows.iter().map(|p| p.song_id.as_str()).collect();
        (rows, songs)
    };
    let (rows_a, songs_a) = side(&a);
    let (rows_b, songs_b) = side(&b);
    if let Some(song) = songs_a.symmetric_difference(&songs_b).next() {
        bail!("song {song} is scored for only one of {a} and {b}");
    }
    if rows_a.is_empty() {
        bail!("no {} rows for {a} and {b}", c.rows.as_str());
    }
    let xs_a: Vec<f64> = rows_a.iter().map(|p| p.x).collect();
    let xs_b: Vec<f64> = rows_b.iter().map(|p| p.x).collect();
    let est = inputs
        .model
        .compare_means_with(&a, &xs_a, &b, &xs_b, c.alpha, inputs.mode, c.variance)?;
    let observed = (c.rows == Rows::Validation)
        .then(|| mean(rows_a.iter().filter_map(|p| p.y)) - mean(rows_b.iter().filter_map(|p| p.y)));

    let mut row = json!({
        "system_a": a,
        "system_b": b,
        "m": xs_a.len(),
        "center": round(est.center),
        "half_width": round(est.half_width),
        "lower": round(est.lower()),
        "upper": round(est.upper()),
    });
    if let Some(obs) = observed {
        row["observed_difference"] = round(obs).into();
        row["covered"] = ((obs - est.center).abs() <= est.half_width).into();
    }

    let mut config = c.config(inputs.mode);
    config.insert("systems".into(), json!([a, b]));
    let level = nominal_level(inputs.mode, c.alpha);
    let report = json!({
        "run": report::envelope("compare", Value::Object(config), c.inputs()?),
        "model": inputs.model.kind(),
        "quantile_mode": inputs.mode,
        "alpha": c.alpha,
        "nominal_level": round(level),
        "variance": c.variance,
        "rows": c.rows.as_str(),
        "comparison": row,
    });

    let label = format!("{a} - {b}");
    let csv = format!(
        "system,genre,m,center,half_width\n{label},all,{},{:.10},{:.10}\n",
        xs_a.len(),
        round(est.center),
        round(est.half_width)
    );
    let mut table = vec![vec!["difference".to_string(), "m".into(), "estimate (%)".into()]];
    let mut line = vec![
        label,
        xs_a.len().to_string(),
        format!("{}±{}", report::pct(est.center), report::pct(est.half_width)),
    ];
    if let Some(obs) = observed {
        table[0].push("observed (%)".into());
        line.push(report::pct(obs));
    }
    table.push(line);
    let mut summary = format!(
        "mean GT accuracy difference, model {}, {} quantile, nominal level {}%, {} rows\n",
        inputs.model.kind(),
        inputs.mode.as_str(),
        report::pct(level),
        c.rows.as_str()
    );
    summary.push_str(&report::align(&table));
    c.write_outputs(&report, &csv, &summary)
}
