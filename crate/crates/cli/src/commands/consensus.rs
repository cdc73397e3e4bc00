use std::fs;
use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use proxy_eval::annotation::{load_manifest, write_lab};
use proxy_eval::consensus::{consensus_annotation, VotePolicy};
use serde_json::{json, Value};

use super::{path_value, prepare_out_dir, FrameArgs};
use crate::report;

#[derive(Debug, Args)]
pub struct ConsensusArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    frames: FrameArgs,
    /// Tie-break order, highest priority first; defaults to the manifest order.
    #[arg(long, value_delimiter = ',')]
    priority: Vec<String>,
    /// Name of the combined system in the output manifest.
    #[arg(long, default_value = "consensus")]
    name: String,
    /// Output directory for `<song>.lab`, `manifest.json` and `consensus.json`.
    #[arg(long)]
    out: PathBuf,
    /// Overwrite files in a non-empty output directory.
    #[arg(long)]
    force: bool,
}

pub fn run(args: ConsensusArgs) -> Result<()> {
    let dataset = load_manifest(&args.manifest)?;
    let priority = if args.priority.is_empty() {
        dataset.systems().to_vec()
    } else {
        args.priority.clone()
    };
    for name in &priority {
        if !dataset.systems().contains(name) {
            bail!("priority lists system {name}, which the manifest does not have");
        }
    }
    if dataset.systems().contains(&args.name) {
        bail!(
            "system {} already exists in the manifest; pick another --name",
            args.name
        );
    }
    for song in dataset.songs() {
        if song.id.is_empty() || song.id.contains(['/', '\\']) || song.id.starts_with('.') {
            bail!("song id {:?} cannot be used as a file name", song.id);
        }
    }
    prepare_out_dir(&args.out, args.force)?;

    let policy = VotePolicy::new(priority.clone());
    let frames = args.frames.frames();
    let vocab = args.frames.vocabulary();
    let mut songs = Vec::new();
    for song in dataset.songs() {
        let combined = consensus_annotation(&song.predictions, &frames, &vocab, &policy);
        let file = format!("{}.lab", song.id);
        let path = args.out.join(&file);
        fs::write(&path, write_lab(&combined)).with_context(|| format!("cannot write {}", path.display()))?;
        songs.push(json!({ "song_id": song.id, "file": file, "segments": combined.segments().len() }));
    }

    let manifest = rebased_manifest(&args.manifest, &args.out, &args.name)?;
    report::write_json(&args.out.join("manifest.json"), &manifest)?;

    let config = json!({
        "manifest": path_value(&args.manifest),
        "hop": args.frames.hop,
        "vocab": args.frames.vocab,
        "priority": priority,
        "name": args.name,
        "out": path_value(&args.out),
    });
    let doc = json!({
        "run": report::envelope("consensus", config, vec![report::hash_file(&args.manifest)?]),
        "songs": songs,
    });
    report::write_json(&args.out.join("consensus.json"), &doc)?;
    println!(
        "wrote {} consensus annotations to {}",
        dataset.songs().len(),
        args.out.display()
    );
    Ok(())
}

/// The input manifest with every path re-expressed relative to `out` and
/// the combined system added.
fn rebased_manifest(manifest: &Path, out: &Path, name: &str) -> Result<Value> {
    let text = fs::read_to_string(manifest).with_context(|| format!("cannot read {}", manifest.display()))?;
    let mut doc: Value = serde_json::from_str(&text)?;
    let base = absolute(manifest.parent().unwrap_or(Path::new("")))?;
    let out = absolute(out)?;
    let rebase = |v: &mut Value| {
        if let Value::String(p) = v {
            *p = relative_path(&base.join(&*p), &out);
        }
    };
    if let Some(systems) = doc.get_mut("systems").and_then(Value::as_array_mut) {
        systems.push(name.into());
    }
    for song in doc.get_mut("songs").and_then(Value::as_array_mut).into_iter().flatten() {
        let id = song["id"].as_str().unwrap_or_default().to_string();
        song.get_mut("gt").map(rebase);
        song.get_mut("pseudo").map(rebase);
        if let Some(preds) = song.get_mut("predictions").and_then(Value::as_object_mut) {
            preds.values_mut().for_each(rebase);
            preds.insert(name.into(), format!("{id}.lab").into());
        }
    }
    Ok(doc)
}

fn absolute(path: &Path) -> Result<PathBuf> {
    let path = if path.as_os_str().is_empty() {
        Path::new(".")
    } else {
        path
    };
    fs::canonicalize(path).with_context(|| format!("cannot resolve {}", path.display()))
}

/// `target` relative to directory `base`, with `/` separators. Both must be
/// absolute; `target` may contain `..` components.
fn relative_path(target: &Path, base: &Path) -> String {
    let mut normal: Vec<Component> = Vec::new();
    for c in target.components() {
        match c {
            Component::ParentDir => {
                normal.pop();
            }
            Component::CurDir => {}
            c => normal.push(c),
        }
    }
    let base: Vec<Component> = base.components().collect();
    let shared = normal.iter().zip(&base).take_while(|(a, b)| a == b).count();
    let mut parts: Vec<String> = vec!["..".into(); base.len() - shared];
    parts.extend(
        normal[shared..]
            .iter()
            .map(|c| c.as_os_str().to_string_lossy().into_owned()),
    );
    parts.join("/")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths() {
        assert_eq!(
            relative_path(Path::new("/a/b/c.lab"), Path::new("/a/out")),
            "../b/c.lab"
        );
        assert_eq!(
            relative_path(Path::new("/a/out/x/../c.lab"), Path::new("/a/out")),
            "c.lab"
        );
        assert_eq!(relative_path(Path::new("/d/c.lab"), Path::new("/a/b")), "../../d/c.lab");
    }
}
