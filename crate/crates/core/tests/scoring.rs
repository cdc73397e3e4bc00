use std::path::PathBuf;

use proxy_eval::annotation::load_manifest;
use proxy_eval::scoring::{frame_accuracy, read_table, score_dataset_with, write_table, FrameSpec};
use proxy_eval::{Execution, Vocabulary};
use proxy_eval_testkit::{exact_overlap_accuracy, random_annotation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LABELS: &[&str] = &["C:maj", "C:min", "G:7", "A:min7", "F", "Bb:maj", "E:min", "N"];

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/three_songs")
        .join(name)
}

fn table_for(hop: f64, exec: Execution) -> String {
    let dataset = load_manifest(fixture("manifest.json")).unwrap();
    let pairs = score_dataset_with(&dataset, &FrameSpec::new(hop).unwrap(), &Vocabulary::majmin(), exec).unwrap();
    let mut out = Vec::new();
    write_table(&mut out, &pairs).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn fixture_table_matches_enumeration_script() {
    let expected = std::fs::read_to_string(fixture("expected_hop0.1.csv")).unwrap();
    assert_eq!(table_for(0.1, Execution::Sequential), expected);
    assert_eq!(table_for(0.1, Execution::Parallel), expected);
    let expected = std::fs::read_to_string(fixture("expected_hop0.05.csv")).unwrap();
    assert_eq!(table_for(0.05, Execution::Parallel), expected);
}

#[test]
fn fixture_table_has_one_pair_per_cell() {
    let pairs = read_table(table_for(0.1, Execution::default()).as_bytes()).unwrap();
    assert_eq!(pairs.len(), 6);
    assert_eq!(pairs.iter().filter(|p| p.y.is_some()).count(), 4);
}

#[test]
fn frame_accuracy_tracks_exact_overlap() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vocab = Vocabulary::majmin();
    for hop in [0.1, 0.05, 0.25] {
        let frames = FrameSpec::new(hop).unwrap();
        for _ in 0..50 {
            let reference = random_annotation(&mut rng, 60.0, LABELS);
            let pred = random_annotation(&mut rng, 60.0, LABELS);
            let exact = exact_overlap_accuracy(&pred, &reference, &vocab).unwrap();
            let framed = frame_accuracy(&pred, &reference, &frames, &vocab).unwrap();
            let bound = hop * (pred.segments().len() + reference.segments().len()) as f64 / reference.duration();
            assert!(
                (framed - exact).abs() <= bound,
                "hop {hop}: {framed} vs {exact}, bound {bound}"
            );
        }
    }
}

#[test]
fn halving_the_hop_moves_accuracy_by_at_most_the_boundary_measure() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vocab = Vocabulary::majmin();
    for _ in 0..50 {
        let reference = random_annotation(&mut rng, 45.0, LABELS);
        let pred = random_annotation(&mut rng, 45.0, LABELS);
        let h = 0.1;
        let coarse = frame_accuracy(&pred, &reference, &FrameSpec::new(h).unwrap(), &vocab).unwrap();
        let fine = frame_accuracy(&pred, &reference, &FrameSpec::new(h / 2.0).unwrap(), &vocab).unwrap();
        let boundaries = pred.segments().len() + reference.segments().len();
        assert!((coarse - fine).abs() <= boundaries as f64 * h / reference.duration());
    }
}

#[test]
fn accuracy_stays_in_unit_interval_and_hits_one_only_on_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vocab = Vocabulary::majmin();
    let frames = FrameSpec::default();
    for _ in 0..100 {
        let a = random_annotation(&mut rng, 20.0, LABELS);
        let b = random_annotation(&mut rng, 20.0, LABELS);
        let acc = frame_accuracy(&a, &b, &frames, &vocab).unwrap();
        assert!((0.0..=1.0).contains(&acc));
        assert_eq!(frame_accuracy(&b, &b, &frames, &vocab).unwrap(), 1.0);
    }
}
