use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use proxy_eval::estimators::{FittedModel, ModelKind, QuantileMode};
use serde_json::{json, Value};

use super::{load_table, path_value};
use crate::report;

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Accuracy table written by `score`; rows with y are the validation set.
    #[arg(long)]
    table: PathBuf,
    /// s (pooled offset), i (per-system offset) or l (per-system line).
    #[arg(long)]
    model: ModelKind,
    /// Quantile convention stored with the parameters.
    #[arg(long, default_value = "paper-literal")]
    mode: QuantileMode,
    /// Parameters JSON.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: FitArgs) -> Result<()> {
    let validation: Vec<_> = load_table(&args.table)?.into_iter().filter(|p| p.y.is_some()).collect();
    let model = FittedModel::fit(args.model, &validation)?;

    let mut doc = model.to_document(args.mode);
    let config = json!({
        "table": path_value(&args.table),
        "model": args.model,
        "quantile_mode": args.mode,
        "out": path_value(&args.out),
    });
    if let Value::Object(map) = &mut doc {
        map.insert(
            "run".into(),
            report::envelope("fit", config, vec![report::hash_file(&args.table)?]),
        );
    }
    report::write_json(&args.out, &doc)?;
    println!(
        "fitted model {} on {} validation rows for {}",
        args.model,
        validation.len(),
        model.systems().join(", ")
    );
    Ok(())
}
