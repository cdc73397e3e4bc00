//! Timed chord annotations and the LAB text format.

mod manifest;

pub use manifest::{load_manifest, Dataset, ManifestError, SongRecord};

use std::fmt::Write as _;

use thiserror::Error;

use crate::chord::{parse_chord_label, ChordLabel};

/// Overlaps up to this many seconds are clipped instead of rejected.
pub const OVERLAP_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabError {
    #[error("line {0}: malformed segment")]
    MalformedLine(usize),
    #[error("line {0}: segment overlaps its predecessor")]
    OverlapError(usize),
    #[error("line {0}: onset precedes the previous onset")]
    NonMonotonic(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub onset: f64,
    pub offset: f64,
    pub label: ChordLabel,
}

/// Sorted, non-overlapping segments. Gaps read as no-chord.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Annotation {
    segments: Vec<Segment>,
}

impl Annotation {
    /// Builds an annotation from segments that already satisfy the
    /// ordering invariants. Returns `None` otherwise.
    pub fn from_segments(segments: Vec<Segment>) -> Option<Self> {
        let durations_ok = segments
            .iter()
            .all(|s| s.onset >= 0.0 && s.offset > s.onset && s.offset.is_finite());
        let ordered = segments.windows(2).all(|w| w[0].offset <= w[1].onset);
        (durations_ok && ordered).then_some(Annotation { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// End of the last segment, 0 when empty.
    pub fn duration(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.offset)
    }

    /// Label active at `t` over half-open segment spans.
    pub fn label_at(&self, t: f64) -> ChordLabel {
        let idx = self.segments.partition_point(|s| s.onset <= t);
        match idx.checked_sub(1).map(|i| &self.segments[i]) {
            Some(seg) if t < seg.offset => seg.label.clone(),
            _ => ChordLabel::no_chord(),
        }
    }
}

pub fn parse_lab(text: &str) -> Result<Annotation, LabError> {
    let mut segments: Vec<Segment> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [onset, offset, label] = fields[..] else {
            return Err(LabError::MalformedLine(line_no));
        };
        let parse_time = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|t| t.is_finite() && *t >= 0.0)
                .ok_or(LabError::MalformedLine(line_no))
        };
        let onset = parse_time(onset)?;
        let offset = parse_time(offset)?;
        if offset <= onset {
            return Err(LabError::MalformedLine(line_no));
        }
        let label = parse_chord_label(label).map_err(|_| LabError::MalformedLine(line_no))?;

        if let Some(prev) = segments.last_mut() {
            if onset < prev.onset {
                return Err(LabError::NonMonotonic(line_no));
            }
            if onset < prev.offset {
                if prev.offset - onset > OVERLAP_TOLERANCE {
                    return Err(LabError::OverlapError(line_no));
                }
                prev.offset = onset;
                if prev.offset <= prev.onset {
                    return Err(LabError::OverlapError(line_no));
                }
            }
        }
        segments.push(Segment { onset, offset, label });
    }
    Ok(Annotation { segments })
}

/// Renders one `onset offset label` line per segment, times with six
/// decimals, each line newline-terminated.
pub fn write_lab(annotation: &Annotation) -> String {
    let mut out = String::new();
    for seg in &annotation.segments {
        writeln!(out, "{:.6} {:.6} {}", seg.onset, seg.offset, seg.label).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chord::{PitchClass, Vocabulary};
    use proptest::prelude::*;

    #[test]
    fn parses_two_segments() {
        let a = parse_lab("0.0 5.0 C:maj\n5.0 10.0 G:maj").unwrap();
        assert_eq!(a.segments().len(), 2);
        assert_eq!(a.duration(), 10.0);
        assert_eq!(a.segments()[1].label.to_string(), "G:maj");
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let a = parse_lab("# header\n\n0 1.5 A:min\n   \n1.5\t3 N\n").unwrap();
        assert_eq!(a.segments().len(), 2);
        assert_eq!(a.duration(), 3.0);
    }

    #[test]
    fn empty_input_gives_empty_annotation() {
        let a = parse_lab("").unwrap();
        assert!(a.is_empty());
        assert_eq!(a.duration(), 0.0);
        assert_eq!(write_lab(&a), "");
    }

    #[test]
    fn overlap_beyond_tolerance_is_an_error() {
        assert_eq!(parse_lab("0.0 5.0 C\n4.0 9.0 G"), Err(LabError::OverlapError(2)));
    }

    #[test]
    fn small_overlap_is_clipped() {
        let a = parse_lab("0.0 5.0005 C\n5.0 9.0 G").unwrap();
        assert_eq!(a.segments()[0].offset, 5.0);
        assert!(Annotation::from_segments(a.segments().to_vec()).is_some());
    }

    #[test]
    fn non_monotonic_onsets() {
        assert_eq!(parse_lab("0 1 C\n# c\n3 4 D\n2 2.5 E"), Err(LabError::NonMonotonic(4)));
    }

    #[test]
    fn malformed_lines() {
        for (text, line) in [
            ("0 1", 1),
            ("0 1 C extra", 1),
            ("0 1 C\nzero 2 D", 2),
            ("1 1 C", 1),
            ("2 1 C", 1),
            ("-1 1 C", 1),
            ("0 1 H:maj", 1),
        ] {
            assert_eq!(parse_lab(text), Err(LabError::MalformedLine(line)), "{text:?}");
        }
    }

    #[test]
    fn writes_six_decimals() {
        let a = Annotation::from_segments(vec![Segment {
            onset: 0.0,
            offset: 1.0,
            label: ChordLabel::chord(PitchClass::new(0), "maj"),
        }])
        .unwrap();
        assert_eq!(write_lab(&a), "0.000000 1.000000 C:maj\n");
    }

    #[test]
    fn label_lookup_is_half_open_with_gaps() {
        let a = parse_lab("0 2 C\n3 5 G").unwrap();
        assert_eq!(a.label_at(1.999).to_string(), "C:maj");
        assert_eq!(a.label_at(2.0), ChordLabel::no_chord());
        assert_eq!(a.label_at(2.5), ChordLabel::no_chord());
        assert_eq!(a.label_at(3.0).to_string(), "G:maj");
        assert_eq!(a.label_at(5.0), ChordLabel::no_chord());
        assert_eq!(a.label_at(100.0), ChordLabel::no_chord());
    }

    fn arb_annotation() -> impl Strategy<Value = Annotation> {
        let labels = prop::sample::select(vec!["C:maj", "Db:min7", "N", "X", "G:7", "F#:sus4", "Bb"]);
        prop::collection::vec((0u32..3, 1u32..4000, labels), 0..20).prop_map(|parts| {
            let mut t = 0.0;
            let mut segments = Vec::new();
            for (gap, len, label) in parts {
                let onset = t + gap as f64 * 0.25;
                let offset = onset + len as f64 * 0.001_37;
                segments.push(Segment {
                    onset,
                    offset,
                    label: parse_chord_label(label).unwrap(),
                });
                t = offset;
            }
            Annotation::from_segments(segments).unwrap()
        })
    }

    proptest! {
        #[test]
        fn lab_round_trip(a in arb_annotation()) {
            let v = Vocabulary::majmin();
            let back = parse_lab(&write_lab(&a)).unwrap();
            prop_assert_eq!(back.segments().len(), a.segments().len());
            for (x, y) in a.segments().iter().zip(back.segments()) {
                prop_assert!((x.onset - y.onset).abs() <= 1e-6);
                prop_assert!((x.offset - y.offset).abs() <= 1e-6);
                prop_assert_eq!(v.classify(&x.label), v.classify(&y.label));
            }
        }
    }
}
