use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use proxy_eval::annotation::load_manifest;
use proxy_eval::scoring::{score_dataset, write_table};
use serde_json::json;

use super::{path_value, FrameArgs};
use crate::report;

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    frames: FrameArgs,
    /// Accuracy table CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional JSON report with the run echo and per-system means.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run(args: ScoreArgs) -> Result<()> {
    let dataset = load_manifest(&args.manifest)?;
    let pairs = score_dataset(&dataset, &args.frames.frames(), &args.frames.vocabulary())?;

    let mut csv = Vec::new();
    write_table(&mut csv, &pairs)?;
    match &args.out {
        Some(path) => fs::write(path, &csv).with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().write_all(&csv)?,
    }

    if let Some(path) = &args.report {
        let systems: Vec<_> = dataset
            .systems()
            .iter()
            .map(|s| {
                let mine: Vec<_> = pairs.iter().filter(|p| &p.system == s).collect();
                let ys: Vec<f64> = mine.iter().filter_map(|p| p.y).collect();
                json!({
                    "system": s,
                    "songs": mine.len(),
                    "validation_songs": ys.len(),
                    "mean_x": report::round(super::mean(mine.iter().map(|p| p.x))),
                    "mean_y": (!ys.is_empty()).then(|| report::round(super::mean(ys.iter().copied()))),
                })
            })
            .collect();
        let config = json!({
            "manifest": path_value(&args.manifest),
            "hop": args.frames.hop,
            "vocab": args.frames.vocab,
            "out": args.out.as_deref().map(path_value),
            "report": path_value(path),
        });
        let doc = json!({
            "run": report::envelope("score", config, vec![report::hash_file(&args.manifest)?]),
            "systems": systems,
        });
        report::write_json(path, &doc)?;
    }
    Ok(())
}
