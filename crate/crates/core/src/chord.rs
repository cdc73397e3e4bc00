//! Chord symbols and the comparison vocabularies used for frame matching.
//!
//! Grammar: `root[:quality][/bass]` where `root` is a letter `A`..`G`
//! followed by any number of `#` or `b` modifiers. `N` is no-chord and
//! `X` is unknown. The bass part is accepted and dropped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChordError {
    #[error("malformed chord label {0:?}")]
    MalformedLabel(String),
}

/// Pitch class, C = 0 in semitone steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PitchClass(u8);

impl PitchClass {
    /// Reduces any semitone offset modulo 12.
    pub fn new(semitones: i32) -> Self {
        PitchClass(semitones.rem_euclid(12) as u8)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        const NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];
        NAMES[self.0 as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChordKind {
    Chord,
    NoChord,
    Unknown,
}

/// Triad family a quality reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QualityFamily {
    Major,
    Minor,
}

const MAJOR_QUALITIES: &[&str] = &[
    "maj", "maj7", "7", "maj6", "6", "9", "maj9", "11", "13", "maj13", "maj11",
];
const MINOR_QUALITIES: &[&str] = &[
    "min", "min7", "min6", "min9", "min11", "min13", "minmaj7", "dim", "dim7", "hdim7",
];

/// Maps a raw quality string onto its triad family, if it has one.
pub fn quality_family(quality: &str) -> Option<QualityFamily> {
    if MAJOR_QUALITIES.contains(&quality) {
        Some(QualityFamily::Major)
    } else if MINOR_QUALITIES.contains(&quality) {
        Some(QualityFamily::Minor)
    } else {
        None
    }
}

/// A parsed chord symbol. The raw quality string is kept so that rendering
/// does not lose information the vocabulary happens to ignore.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChordLabel {
    kind: ChordKind,
    root: Option<PitchClass>,
    quality: String,
}

impl ChordLabel {
    pub fn no_chord() -> Self {
        ChordLabel {
            kind: ChordKind::NoChord,
            root: None,
            quality: String::new(),
        }
    }

    pub fn unknown() -> Self {
        ChordLabel {
            kind: ChordKind::Unknown,
            root: None,
            quality: String::new(),
        }
    }

    pub fn chord(root: PitchClass, quality: impl Into<String>) -> Self {
        ChordLabel {
            kind: ChordKind::Chord,
            root: Some(root),
            quality: quality.into(),
        }
    }

    pub fn kind(&self) -> ChordKind {
        self.kind
    }

    pub fn root(&self) -> Option<PitchClass> {
        self.root
    }

    /// Raw quality string; empty for `N` and `X`.
    pub fn quality(&self) -> &str {
        &self.quality
    }

    pub fn family(&self) -> Option<QualityFamily> {
        match self.kind {
            ChordKind::Chord => quality_family(&self.quality),
            _ => None,
        }
    }

    /// Same chord with the root moved by `semitones`.
    pub fn transposed(&self, semitones: i32) -> Self {
        match self.root {
            Some(r) => ChordLabel::chord(PitchClass::new(r.index() as i32 + semitones), &*self.quality),
            None => self.clone(),
        }
    }
}

pub fn parse_chord_label(text: &str) -> Result<ChordLabel, ChordError> {
    let malformed = || ChordError::MalformedLabel(text.to_string());
    let trimmed = text.trim();
    match trimmed {
        "" => return Err(malformed()),
        "N" => return Ok(ChordLabel::no_chord()),
        "X" => return Ok(ChordLabel::unknown()),
        _ => {}
    }

    // Slash chords: the bass is parsed for syntax only.
    let (body, bass) = match trimmed.split_once('/') {
        Some((body, bass)) => (body, Some(bass)),
        None => (trimmed, None),
    };
    if let Some(bass) = bass {
        if bass.is_empty() || bass.contains('/') || bass.chars().any(char::is_whitespace) {
            return Err(malformed());
        }
    }

    let (root_text, quality) = match body.split_once(':') {
        Some((root, quality)) => {
            if quality.is_empty() || quality.contains(':') || quality.chars().any(char::is_whitespace) {
                return Err(malformed());
            }
            (root, quality)
        }
        None => (body, "maj"),
    };
    let root = parse_root(root_text).ok_or_else(malformed)?;
    Ok(ChordLabel::chord(root, quality))
}

fn parse_root(text: &str) -> Option<PitchClass> {
    let mut chars = text.chars();
    let base = match chars.next()? {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return None,
    };
    let mut offset = 0i32;
    for c in chars {
        match c {
            '#' => offset += 1,
            'b' => offset -= 1,
            _ => return None,
        }
    }
    Some(PitchClass::new(base + offset))
}

impl FromStr for ChordLabel {
    type Err = ChordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_chord_label(s)
    }
}

impl fmt::Display for ChordLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.root) {
            (ChordKind::NoChord, _) => f.write_str("N"),
            (ChordKind::Unknown, _) => f.write_str("X"),
            (ChordKind::Chord, Some(root)) => write!(f, "{}:{}", root.name(), self.quality),
            (ChordKind::Chord, None) => unreachable!("chord labels always carry a root"),
        }
    }
}

/// Class id inside a vocabulary.
pub type ClassId = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VocabClass {
    Class(ClassId),
    Excluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchOutcome {
    Match,
    Mismatch,
    Excluded,
}

/// How `X` frames are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownPolicy {
    #[default]
    Exclude,
    AsNoChord,
}

/// The major/minor comparison vocabulary.
///
/// Classes 0..12 are major triads by root, 12..24 minor triads, 24 is
/// no-chord. Unknown chords and qualities outside the reduction table
/// map to [`VocabClass::Excluded`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Vocabulary {
    unknown: UnknownPolicy,
}

const NO_CHORD_CLASS: ClassId = 24;

impl Vocabulary {
    pub fn majmin() -> Self {
        Vocabulary {
            unknown: UnknownPolicy::Exclude,
        }
    }

    pub fn with_unknown_policy(unknown: UnknownPolicy) -> Self {
        Vocabulary { unknown }
    }

    /// Looks a vocabulary up by name: `majmin`, or `majmin-xn` where `X`
    /// counts as no-chord.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "majmin" => Some(Self::majmin()),
            "majmin-xn" => Some(Self::with_unknown_policy(UnknownPolicy::AsNoChord)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.unknown {
            UnknownPolicy::Exclude => "majmin",
            UnknownPolicy::AsNoChord => "majmin-xn",
        }
    }

    pub fn unknown_policy(&self) -> UnknownPolicy {
        self.unknown
    }

    /// Number of class ids; `Excluded` is not a class.
    pub fn class_count(&self) -> usize {
        25
    }

    pub fn classify(&self, label: &ChordLabel) -> VocabClass {
        match label.kind() {
            ChordKind::NoChord => VocabClass::Class(NO_CHORD_CLASS),
            ChordKind::Unknown => match self.unknown {
                UnknownPolicy::Exclude => VocabClass::Excluded,
                UnknownPolicy::AsNoChord => VocabClass::Class(NO_CHORD_CLASS),
            },
            ChordKind::Chord => {
                let root = label.root().expect("chord has root").index() as ClassId;
                match label.family() {
                    Some(QualityFamily::Major) => VocabClass::Class(root),
                    Some(QualityFamily::Minor) => VocabClass::Class(12 + root),
                    None => VocabClass::Excluded,
                }
            }
        }
    }

    /// Canonical label for a class id.
    pub fn representative(&self, class: ClassId) -> ChordLabel {
        match class {
            0..=11 => ChordLabel::chord(PitchClass::new(class as i32), "maj"),
            12..=23 => ChordLabel::chord(PitchClass::new(class as i32 - 12), "min"),
            NO_CHORD_CLASS => ChordLabel::no_chord(),
            _ => panic!("class id {class} outside the majmin vocabulary"),
        }
    }
}

pub fn labels_match(a: &ChordLabel, b: &ChordLabel, vocab: &Vocabulary) -> MatchOutcome {
    match (vocab.classify(a), vocab.classify(b)) {
        (VocabClass::Class(x), VocabClass::Class(y)) if x == y => MatchOutcome::Match,
        (VocabClass::Class(_), VocabClass::Class(_)) => MatchOutcome::Mismatch,
        _ => MatchOutcome::Excluded,
    }
}
