//! Frame-wise accuracy and the per-song, per-system accuracy table.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{Annotation, Dataset};
use crate::chord::{labels_match, MatchOutcome, Vocabulary};
use crate::exec::Execution;

pub const DEFAULT_HOP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("reference annotation has zero duration")]
    EmptyReference,
    #[error("every frame is excluded")]
    AllFramesExcluded,
    #[error("song {song}, system {system} ({reference}): {source}")]
    Cell {
        song: String,
        system: String,
        reference: &'static str,
        source: Box<ScoreError>,
    },
}

/// Fixed-hop frame grid over `[0, duration)`, sampled at frame centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    hop: f64,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec { hop: DEFAULT_HOP }
    }
}

impl FrameSpec {
    /// Returns `None` unless `hop` is positive and finite.
    pub fn new(hop: f64) -> Option<Self> {
        (hop > 0.0 && hop.is_finite()).then_some(FrameSpec { hop })
    }

    pub fn hop(&self) -> f64 {
        self.hop
    }

    /// `ceil(duration / hop)`, ignoring float noise just above an integer.
    pub fn frame_count(&self, duration: f64) -> usize {
        if duration <= 0.0 {
            return 0;
        }
        let ratio = duration / self.hop;
        (ratio - ratio.abs() * 1e-12).ceil().max(0.0) as usize
    }

    pub fn center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.hop
    }

    pub fn start(&self, k: usize) -> f64 {
        k as f64 * self.hop
    }
}

/// Frame counts behind one accuracy value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameTally {
    pub matched: usize,
    pub excluded: usize,
    pub total: usize,
}

impl FrameTally {
    pub fn accuracy(&self) -> Result<f64, ScoreError> {
        let scored = self.total - self.excluded;
        if scored == 0 {
            return Err(ScoreError::AllFramesExcluded);
        }
        Ok(self.matched as f64 / scored as f64)
    }
}

pub fn frame_tally(
    pred: &Annotation,
    reference: &Annotation,
    frames: &FrameSpec,
    vocab: &Vocabulary,
) -> Result<FrameTally, ScoreError> {
    let duration = reference.duration();
    if duration <= 0.0 {
        return Err(ScoreError::EmptyReference);
    }
    let mut tally = FrameTally {
        total: frames.frame_count(duration),
        ..FrameTally::default()
    };
    for k in 0..tally.total {
        let t = frames.center(k);
        match labels_match(&pred.label_at(t), &reference.label_at(t), vocab) {
            MatchOutcome::Match => tally.matched += 1,
            MatchOutcome::Excluded => tally.excluded += 1,
            MatchOutcome::Mismatch => {}
        }
    }
    Ok(tally)
}

/// Fraction of non-excluded frames on which `pred` agrees with `reference`.
pub fn frame_accuracy(
    pred: &Annotation,
    reference: &Annotation,
    frames: &FrameSpec,
    vocab: &Vocabulary,
) -> Result<f64, ScoreError> {
    frame_tally(pred, reference, frames, vocab)?.accuracy()
}

/// Pseudo accuracy `x` and, for validation songs, ground-truth accuracy `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPair {
    pub song_id: String,
    pub system: String,
    pub genre: String,
    pub x: f64,
    pub y: Option<f64>,
}

pub fn score_dataset(
    dataset: &Dataset,
    frames: &FrameSpec,
    vocab: &Vocabulary,
) -> Result<Vec<AccuracyPair>, ScoreError> {
    score_dataset_with(dataset, frames, vocab, Execution::default())
}

/// One pair per (system, song), ordered by the system pool order and then
/// by song id.
pub fn score_dataset_with(
    dataset: &Dataset,
    frames: &FrameSpec,
    vocab: &Vocabulary,
    exec: Execution,
) -> Result<Vec<AccuracyPair>, ScoreError> {
    let mut songs: Vec<_> = dataset.songs().iter().collect();
    songs.sort_by(|a, b| a.id.cmp(&b.id));
    let cells: Vec<_> = dataset
        .systems()
        .iter()
        .flat_map(|system| songs.iter().map(move |song| (system, *song)))
        .collect();

    let scored = exec.map(&cells, |(system, song)| {
        let pred = &song.predictions[*system];
        let cell_err = |reference: &'static str| {
            let song = song.id.clone();
            let system = (*system).clone();
            move |e: ScoreError| ScoreError::Cell {
                song,
                system,
                reference,
                source: Box::new(e),
            }
        };
        let x = frame_accuracy(pred, &song.pseudo, frames, vocab).map_err(cell_err("pseudo"))?;
        let y = song
            .gt
            .as_ref()
            .map(|gt| frame_accuracy(pred, gt, frames, vocab).map_err(cell_err("gt")))
            .transpose()?;
        Ok(AccuracyPair {
            song_id: song.id.clone(),
            system: (*system).clone(),
            genre: song.genre.clone(),
            x,
            y,
        })
    });
    scored.into_iter().collect()
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("expected header song_id,system,genre,x,y")]
    Header,
    #[error("row {row}: bad {field}")]
    Field { row: usize, field: &'static str },
}

pub const TABLE_HEADER: [&str; 5] = ["song_id", "system", "genre", "x", "y"];

/// Writes `song_id,system,genre,x,y` with six decimals and an empty `y`
/// for test songs.
pub fn write_table<W: io::Write>(out: W, pairs: &[AccuracyPair]) -> Result<(), TableError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for p in pairs {
        let x = format!("{:.6}", p.x);
        let y = p.y.map(|y| format!("{y:.6}")).unwrap_or_default();
        w.write_record([p.song_id.as_str(), &p.system, &p.genre, &x, &y])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_table<R: io::Read>(input: R) -> Result<Vec<AccuracyPair>, TableError> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(TABLE_HEADER) {
        return Err(TableError::Header);
    }
    let mut pairs = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let unit = |s: &str, field| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| (0.0..=1.0).contains(v))
                .ok_or(TableError::Field { row, field })
        };
        let text = |idx: usize, field| {
            record
                .get(idx)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .ok_or(TableError::Field { row, field })
        };
        let y_text = record.get(4).unwrap_or("");
        pairs.push(AccuracyPair {
            song_id: text(0, "song_id")?,
            system: text(1, "system")?,
            genre: text(2, "genre")?,
            x: unit(record.get(3).unwrap_or(""), "x")?,
            y: if y_text.trim().is_empty() {
                None
            } else {
                Some(unit(y_text, "y")?)
            },
        });
    }
    Ok(pairs)
}
