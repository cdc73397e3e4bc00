mod common;

use std::fs;

use common::*;

/// Set `UPDATE_GOLDEN=1` to rewrite the committed reports.
#[test]
fn corpus_reports_match_committed_goldens() {
    let work = tempfile::tempdir().unwrap();
    let files = golden_run(work.path());
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        for f in &files {
            fs::copy(work.path().join(f), golden_dir().join(f)).unwrap();
        }
        return;
    }
    let bad = golden_mismatches(work.path(), &files);
    assert!(
        bad.is_empty(),
        "reports differ from tests/fixtures/corpus/golden: {bad:?}"
    );
}

#[test]
fn golden_run_is_independent_of_thread_count() {
    let work = tempfile::tempdir().unwrap();
    let files = golden_run(work.path());
    let table = fs::read(work.path().join("table.csv")).unwrap();
    let single = bin()
        .current_dir(work.path())
        .env("PROXY_EVAL_THREADS", "1")
        .args(["score", "--manifest", "manifest.json"])
        .output()
        .unwrap();
    assert_eq!(single.stdout, table);
    assert_eq!(files.len(), 23);
}
