//! Reference computations that share no code path with the library.

use proxy_eval::annotation::{Annotation, Segment};
use proxy_eval::chord::{parse_chord_label, ChordLabel, VocabClass, Vocabulary};
use rand::Rng;

/// Standard normal CDF from the all-positive-term series
/// `erf(x) = 2/sqrt(pi) e^{-x^2} sum 2^n x^{2n+1} / (2n+1)!!`.
pub fn normal_cdf_series(z: f64) -> f64 {
    let x = z.abs() / std::f64::consts::SQRT_2;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term > sum * 1e-18 {
        n += 1.0;
        term *= 2.0 * x * x / (2.0 * n + 1.0);
        sum += term;
    }
    let erf = 2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp() * sum;
    if z >= 0.0 {
        0.5 + 0.5 * erf
    } else {
        0.5 - 0.5 * erf
    }
}

/// Inverts [`normal_cdf_series`] by bisection on `[-10, 10]`.
pub fn quantile_by_bisection(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf_series(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn sse(points: &[(f64, f64)], a: f64, b: f64) -> f64 {
    points.iter().map(|(x, y)| (y - a * x - b).powi(2)).sum()
}

fn golden_section(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Minimizes the squared error over `(a, b)` in `[-bound, bound]^2` with
/// nested golden-section searches. Returns `(a, b, sse)`.
pub fn lsq_by_search(points: &[(f64, f64)], bound: f64) -> (f64, f64, f64) {
    let best_b = |a: f64| golden_section(-bound, bound, |b| sse(points, a, b));
    let a = golden_section(-bound, bound, |a| sse(points, a, best_b(a)));
    let b = best_b(a);
    (a, b, sse(points, a, b))
}

fn label_at_linear(a: &Annotation, t: f64) -> ChordLabel {
    a.segments()
        .iter()
        .find(|s| s.onset <= t && t < s.offset)
        .map(|s| s.label.clone())
        .unwrap_or_else(ChordLabel::no_chord)
}

/// Duration-weighted agreement over `[0, reference.duration())`, computed
/// exactly on the union of both annotations' boundaries. `None` when every
/// instant is excluded or the reference is empty.
pub fn exact_overlap_accuracy(pred: &Annotation, reference: &Annotation, vocab: &Vocabulary) -> Option<f64> {
    let end = reference.duration();
    let mut cuts: Vec<f64> = vec![0.0, end];
    for s in pred.segments().iter().chain(reference.segments()) {
        cuts.extend([s.onset, s.offset]);
    }
    cuts.retain(|t| (0.0..=end).contains(t));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let (mut matched, mut scored) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let len = w[1] - w[0];
        if let (VocabClass::Class(p), VocabClass::Class(r)) = (
            vocab.classify(&label_at_linear(pred, mid)),
            vocab.classify(&label_at_linear(reference, mid)),
        ) {
            scored += len;
            if p == r {
                matched += len;
            }
        }
    }
    (scored > 0.0).then(|| matched / scored)
}

/// Random piecewise-constant annotation of about `length` seconds with
/// occasional gaps, drawn from `labels`.
pub fn random_annotation<R: Rng>(rng: &mut R, length: f64, labels: &[&str]) -> Annotation {
    let mut segments = Vec::new();
    let mut t = 0.0;
    while t < length {
        if rng.random_bool(0.15) {
            t += rng.random_range(0.05..2.0);
        }
        let len = rng.random_range(0.05..6.0);
        segments.push(Segment {
            onset: t,
            offset: t + len,
            label: parse_chord_label(labels[rng.random_range(0..labels.len())]).unwrap(),
        });
        t += len;
    }
    Annotation::from_segments(segments).unwrap()
}
