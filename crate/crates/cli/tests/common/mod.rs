#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxy-eval"))
}

/// Runs the binary in `dir` and returns its output.
pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

/// Like [`run_in`] but panics with stderr unless the exit code is 0.
pub fn ok_in(dir: &Path, args: &[&str]) -> Output {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn three_songs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/three_songs")
}

pub fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

pub fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

fn lab(segments: &[(f64, f64, &str)]) -> String {
    segments
        .iter()
        .map(|(on, off, l)| format!("{on:.3} {off:.3} {l}\n"))
        .collect()
}

/// One song of six one-second chords. Each of three systems relabels a
/// different third of the song with its own wrong chord, so at every frame
/// two systems are right and the wrong vote has no partner.
pub fn write_disjoint_error_fixture(dir: &Path) -> PathBuf {
    let truth = ["C:maj", "G:maj", "A:min", "F:maj", "D:min", "E:min"];
    let wrong = ["B:maj", "Eb:maj", "F#:min"];
    let segs = |bad: Option<usize>| -> Vec<(f64, f64, &str)> {
        truth
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let label = match bad {
                    Some(k) if i / 2 == k => wrong[k],
                    _ => l,
                };
                (i as f64, i as f64 + 1.0, label)
            })
            .collect()
    };
    fs::write(dir.join("gt.lab"), lab(&segs(None))).unwrap();
    fs::write(dir.join("pseudo.lab"), lab(&segs(None))).unwrap();
    let systems = ["one", "two", "three"];
    for (k, name) in systems.iter().enumerate() {
        fs::write(dir.join(format!("{name}.lab")), lab(&segs(Some(k)))).unwrap();
    }
    let manifest = serde_json::json!({
        "systems": systems,
        "songs": [{
            "id": "tune",
            "genre": "pop",
            "gt": "gt.lab",
            "pseudo": "pseudo.lab",
            "predictions": {"one": "one.lab", "two": "two.lab", "three": "three.lab"},
        }],
    });
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    path
}

/// `(system, y)` for every scored row of a CSV table.
pub fn table_ys(csv: &str) -> Vec<(String, Option<f64>)> {
    csv.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            (f[1].to_string(), f[4].parse().ok())
        })
        .collect()
}

pub fn golden_dir() -> PathBuf {
    corpus().join("golden")
}

/// Runs `score -> fit (s, i, l) -> estimate --by-genre -> compare` on a copy
/// of the bundled corpus inside `work`, with relative paths so the reports
/// do not depend on where the copy lives. Returns the report file names.
pub fn golden_run(work: &Path) -> Vec<String> {
    fs::copy(corpus().join("manifest.json"), work.join("manifest.json")).unwrap();
    copy_dir(&corpus().join("labs"), &work.join("labs"));
    let mut files = vec!["table.csv".to_string(), "score.json".to_string()];
    ok_in(
        work,
        &[
            "score",
            "--manifest",
            "manifest.json",
            "--out",
            "table.csv",
            "--report",
            "score.json",
        ],
    );
    for model in ["s", "i", "l"] {
        let params = format!("params_{model}.json");
        ok_in(
            work,
            &["fit", "--table", "table.csv", "--model", model, "--out", &params],
        );
        files.push(params.clone());
        for (cmd, extra) in [
            ("estimate", vec!["--by-genre"]),
            ("compare", vec!["--systems", "alpha,beta"]),
        ] {
            let [json, csv, txt] = ["json", "csv", "txt"].map(|ext| format!("{cmd}_{model}.{ext}"));
            let mut args = vec![cmd, "--table", "table.csv", "--params", &params, "--out", &json];
            args.extend(["--csv", &csv, "--summary", &txt]);
            args.extend(extra);
            ok_in(work, &args);
            files.extend([json, csv, txt]);
        }
    }
    files
}

/// Names of reports that differ from the committed copies.
pub fn golden_mismatches(work: &Path, files: &[String]) -> Vec<String> {
    files
        .iter()
        .filter(|f| fs::read(work.join(f)).ok() != fs::read(golden_dir().join(f)).ok())
        .cloned()
        .collect()
}
