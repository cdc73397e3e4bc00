use anyhow::Result;
use clap::Args;
use serde_json::{json, Value};

use super::{group_rows, mean, nominal_level, IntervalArgs, Rows};
use crate::report::{self, round};

/// Genres with fewer test songs than this are flagged in the report.
pub const LOW_SUPPORT: usize = 5;

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    common: IntervalArgs,
    /// One row per system and genre instead of per system.
    #[arg(long)]
    by_genre: bool,
}

struct Row {
    system: String,
    genre: String,
    m: usize,
    center: f64,
    half_width: f64,
    observed: Option<f64>,
}

pub fn run(args: EstimateArgs) -> Result<()> {
    let c = &args.common;
    let inputs = c.load()?;
    let mut rows = Vec::new();
    for (system, genres) in group_rows(&inputs.pairs, c.rows, args.by_genre) {
        for (genre, pairs) in genres {
            let xs: Vec<f64> = pairs.iter().map(|p| p.x).collect();
            let est = inputs
                .model
                .predict_mean_with(system, &xs, c.alpha, inputs.mode, c.variance)?;
            rows.push(Row {
                system: system.to_string(),
                genre: genre.unwrap_or("all").to_string(),
                m: xs.len(),
                center: est.center,
                half_width: est.half_width,
                observed: (c.rows == Rows::Validation).then(|| mean(pairs.iter().filter_map(|p| p.y))),
            });
        }
    }
    if rows.is_empty() {
        anyhow::bail!("the table has no {} rows", c.rows.as_str());
    }

    let estimates: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut v = json!({
                "system": r.system,
                "genre": r.genre,
                "m": r.m,
                "center": round(r.center),
                "half_width": round(r.half_width),
                "lower": round(r.center - r.half_width),
                "upper": round(r.center + r.half_width),
                "low_support": r.m < LOW_SUPPORT,
            });
            if let Some(obs) = r.observed {
                v["observed_mean"] = round(obs).into();
                v["covered"] = ((obs - r.center).abs() <= r.half_width).into();
            }
            v
        })
        .collect();

    let mut config = c.config(inputs.mode);
    config.insert("by_genre".into(), args.by_genre.into());
    let level = nominal_level(inputs.mode, c.alpha);
    let report = json!({
        "run": report::envelope("estimate", Value::Object(config), c.inputs()?),
        "model": inputs.model.kind(),
        "quantile_mode": inputs.mode,
        "alpha": c.alpha,
        "nominal_level": round(level),
        "variance": c.variance,
        "rows": c.rows.as_str(),
        "estimates": estimates,
    });

    let mut csv = String::from("system,genre,m,center,half_width\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{:.10},{:.10}\n",
            r.system,
            r.genre,
            r.m,
            round(r.center),
            round(r.half_width)
        ));
    }

    let mut table = vec![vec![
        "system".to_string(),
        "genre".into(),
        "m".into(),
        "estimate (%)".into(),
    ]];
    if c.rows == Rows::Validation {
        table[0].push("observed (%)".into());
    }
    for r in &rows {
        let mut line = vec![
            r.system.clone(),
            r.genre.clone(),
            if r.m < LOW_SUPPORT {
                format!("{}*", r.m)
            } else {
                r.m.to_string()
            },
            format!("{}±{}", report::pct(r.center), report::pct(r.half_width)),
        ];
        if let Some(obs) = r.observed {
            line.push(report::pct(obs));
        }
        table.push(line);
    }
    let mut summary = format!(
        "mean GT accuracy, model {}, {} quantile, nominal level {}%, {} rows\n",
        inputs.model.kind(),
        inputs.mode.as_str(),
        report::pct(level),
        c.rows.as_str()
    );
    summary.push_str(&report::align(&table));
    if rows.iter().any(|r| r.m < LOW_SUPPORT) {
        summary.push_str(&format!("* fewer than {LOW_SUPPORT} songs\n"));
    }
    c.write_outputs(&report, &csv, &summary)
}
