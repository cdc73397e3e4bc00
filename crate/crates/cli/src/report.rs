//! Shared report plumbing: run envelope, input hashing, number rounding.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "proxy-eval";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

pub fn hash_file(path: &Path) -> Result<InputHash> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(InputHash {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Tool, version, command, flag echo and input hashes.
pub fn envelope(command: &str, config: Value, inputs: Vec<InputHash>) -> Value {
    json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "config": config,
        "inputs": inputs,
    })
}

/// Rounds to ten decimals so reports do not expose last-bit differences
/// in transcendental functions across platforms.
pub fn round(v: f64) -> f64 {
    let r = (v * 1e10).round() / 1e10;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Percent with one decimal, for human summaries only.
pub fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

/// Left-aligned columns separated by two spaces.
pub fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:<width$}", width = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_clears_negative_zero() {
        assert_eq!(round(-1e-13).to_string(), "0");
        assert_eq!(round(0.123_456_789_012_3), 0.123_456_789);
    }

    #[test]
    fn aligned_columns() {
        let text = align(&[vec!["a".into(), "bbb".into()], vec!["cccc".into(), "d".into()]]);
        assert_eq!(text, "a     bbb\ncccc  d\n");
    }
}
