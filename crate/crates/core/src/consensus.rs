//! Frame-level majority vote across several systems' predictions.

use std::collections::BTreeMap;

use crate::annotation::{Annotation, Segment};
use crate::chord::{ChordLabel, ClassId, VocabClass, Vocabulary};
use crate::scoring::FrameSpec;

/// Tie-break order: earlier systems win ties. Systems missing from the
/// list rank after every listed one, by name.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VotePolicy {
    priority: Vec<String>,
}

impl VotePolicy {
    pub fn new(priority: Vec<String>) -> Self {
        VotePolicy { priority }
    }

    pub fn priority(&self) -> &[String] {
        &self.priority
    }

    fn rank(&self, system: &str) -> (usize, String) {
        match self.priority.iter().position(|s| s == system) {
            Some(i) => (i, String::new()),
            None => (self.priority.len(), system.to_string()),
        }
    }
}

/// Winning class among the voters, `None` when every vote is excluded.
fn vote<'a>(votes: impl Iterator<Item = (&'a str, VocabClass)>, policy: &VotePolicy) -> Option<ClassId> {
    // class -> (count, best rank of a voter for it)
    let mut tally: BTreeMap<ClassId, (usize, (usize, String))> = BTreeMap::new();
    for (system, class) in votes {
        let VocabClass::Class(id) = class else { continue };
        let rank = policy.rank(system);
        let entry = tally.entry(id).or_insert((0, rank.clone()));
        entry.0 += 1;
        if rank < entry.1 {
            entry.1 = rank;
        }
    }
    tally
        .into_iter()
        .max_by(|(_, (ca, ra)), (_, (cb, rb))| ca.cmp(cb).then_with(|| rb.cmp(ra)))
        .map(|(id, _)| id)
}

/// Majority label for one frame. Excluded labels abstain; if everyone
/// abstains the result is unknown (`X`).
pub fn majority_vote_frame(labels: &[(&str, ChordLabel)], vocab: &Vocabulary, policy: &VotePolicy) -> ChordLabel {
    match vote(labels.iter().map(|(s, l)| (*s, vocab.classify(l))), policy) {
        Some(id) => vocab.representative(id),
        None => ChordLabel::unknown(),
    }
}

/// Votes at every frame center over the longest prediction and merges runs
/// of equal classes into grid-aligned segments. The last segment ends at
/// that duration.
pub fn consensus_annotation(
    predictions: &BTreeMap<String, Annotation>,
    frames: &FrameSpec,
    vocab: &Vocabulary,
    policy: &VotePolicy,
) -> Annotation {
    let duration = predictions.values().map(Annotation::duration).fold(0.0, f64::max);
    let count = frames.frame_count(duration);

    let mut segments: Vec<Segment> = Vec::new();
    let mut run: Option<(usize, Option<ClassId>)> = None;
    let close = |start: usize, end: usize, class: Option<ClassId>, segments: &mut Vec<Segment>| {
        let label = class.map_or_else(ChordLabel::unknown, |id| vocab.representative(id));
        let offset = frames.start(end).min(duration);
        segments.push(Segment {
            onset: frames.start(start),
            offset,
            label,
        });
    };

    for k in 0..count {
        let t = frames.center(k);
        let class = vote(
            predictions
                .iter()
                .map(|(s, a)| (s.as_str(), vocab.classify(&a.label_at(t)))),
            policy,
        );
        match run {
            Some((_, c)) if c == class => {}
            Some((start, c)) => {
                close(start, k, c, &mut segments);
                run = Some((k, class));
            }
            None => run = Some((k, class)),
        }
    }
    if let Some((start, c)) = run {
        close(start, count, c, &mut segments);
    }
    Annotation::from_segments(segments).expect("grid segments are ordered and non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::parse_lab;
    use crate::chord::parse_chord_label;
    use crate::scoring::frame_accuracy;

    fn l(s: &str) -> ChordLabel {
        parse_chord_label(s).unwrap()
    }

    fn policy(names: &[&str]) -> VotePolicy {
        VotePolicy::new(names.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn strict_majority_wins() {
        let v = Vocabulary::majmin();
        let got = majority_vote_frame(
            &[("A", l("C:maj")), ("B", l("C:maj")), ("C", l("G:maj"))],
            &v,
            &policy(&["C", "B", "A"]),
        );
        assert_eq!(got, l("C:maj"));
    }

    #[test]
    fn ties_follow_priority() {
        let v = Vocabulary::majmin();
        let votes = [("A", l("C:maj")), ("B", l("G:maj"))];
        assert_eq!(majority_vote_frame(&votes, &v, &policy(&["B", "A"])), l("G:maj"));
        assert_eq!(majority_vote_frame(&votes, &v, &policy(&["A", "B"])), l("C:maj"));
        // Unlisted systems fall back to name order.
        assert_eq!(majority_vote_frame(&votes, &v, &VotePolicy::default()), l("C:maj"));
    }

    #[test]
    fn equivalent_chords_vote_together() {
        let v = Vocabulary::majmin();
        let got = majority_vote_frame(
            &[("A", l("C:maj7")), ("B", l("C:maj")), ("C", l("G:maj"))],
            &v,
            &policy(&["C", "A", "B"]),
        );
        assert_eq!(got.to_string(), "C:maj");
    }

    #[test]
    fn all_excluded_gives_unknown() {
        let v = Vocabulary::majmin();
        let got = majority_vote_frame(&[("A", l("X")), ("B", l("C:sus4"))], &v, &VotePolicy::default());
        assert_eq!(got, ChordLabel::unknown());
        // Abstentions do not count against a single real vote.
        let got = majority_vote_frame(&[("A", l("X")), ("B", l("D:min"))], &v, &policy(&["A", "B"]));
        assert_eq!(got, l("D:min"));
    }

    fn preds(items: &[(&str, &str)]) -> BTreeMap<String, Annotation> {
        items
            .iter()
            .map(|(s, t)| (s.to_string(), parse_lab(t).unwrap()))
            .collect()
    }

    #[test]
    fn unanimity_reproduces_the_class_sequence() {
        let text = "0 2.5 C:maj7\n2.5 4 A:min\n5 6.05 G";
        let p = preds(&[("A", text), ("B", text), ("C", text)]);
        let c = consensus_annotation(&p, &FrameSpec::default(), &Vocabulary::majmin(), &VotePolicy::default());
        let rendered: Vec<String> = c
            .segments()
            .iter()
            .map(|s| format!("{:.1} {:.2} {}", s.onset, s.offset, s.label))
            .collect();
        assert_eq!(
            rendered,
            // The last frame's center sits at 6.05, past the final chord.
            [
                "0.0 2.50 C:maj",
                "2.5 4.00 A:min",
                "4.0 5.00 N",
                "5.0 6.00 G:maj",
                "6.0 6.05 N"
            ]
        );
    }

    #[test]
    fn one_wrong_system_is_outvoted() {
        let truth = "0 10 C\n10 20 F";
        let p = preds(&[("A", truth), ("B", truth), ("C", "0 5 E:min\n5 10 C\n10 20 F")]);
        let c = consensus_annotation(
            &p,
            &FrameSpec::default(),
            &Vocabulary::majmin(),
            &policy(&["C", "B", "A"]),
        );
        let reference = parse_lab(truth).unwrap();
        let acc = frame_accuracy(&c, &reference, &FrameSpec::default(), &Vocabulary::majmin()).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn full_disagreement_follows_the_first_priority() {
        let p = preds(&[("A", "0 3 C\n3 6 D"), ("B", "0 3 E:min\n3 6 F")]);
        let c = consensus_annotation(&p, &FrameSpec::default(), &Vocabulary::majmin(), &policy(&["A", "B"]));
        assert_eq!(c.segments().len(), 2);
        assert_eq!(c.segments()[0].label, l("C:maj"));
        assert_eq!(c.segments()[1].label, l("D:maj"));
        assert_eq!(c.duration(), 6.0);
    }

    #[test]
    fn permuting_inputs_does_not_change_output() {
        let a = preds(&[("A", "0 3 C\n3 6 D"), ("B", "0 3 E:min\n3 6 D"), ("C", "0 6 F")]);
        let b = preds(&[("C", "0 6 F"), ("A", "0 3 C\n3 6 D"), ("B", "0 3 E:min\n3 6 D")]);
        let pol = policy(&["B", "C", "A"]);
        let f = FrameSpec::default();
        let v = Vocabulary::majmin();
        assert_eq!(
            consensus_annotation(&a, &f, &v, &pol),
            consensus_annotation(&b, &f, &v, &pol)
        );
    }
}
