//! JSON manifest binding songs to their annotation files.
//!
//! ```json
//! { "systems": ["A", "B"],
//!   "songs": [ { "id": "s1", "genre": "rock", "gt": "s1.gt.lab" | null,
//!                "pseudo": "s1.pseudo.lab",
//!                "predictions": { "A": "s1.A.lab", "B": "s1.B.lab" } } ] }
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::io;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::{parse_lab, Annotation, LabError};
use crate::exec::Execution;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("manifest schema error: {0}")]
    SchemaError(String),
    #[error("song {song} has no prediction for system {system}")]
    MissingPrediction { song: String, system: String },
    #[error("{path}: {source}")]
    Lab { path: PathBuf, source: LabError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SongRecord {
    pub id: String,
    pub genre: String,
    pub gt: Option<Annotation>,
    pub pseudo: Annotation,
    pub predictions: BTreeMap<String, Annotation>,
}

impl SongRecord {
    pub fn is_validation(&self) -> bool {
        self.gt.is_some()
    }
}

/// Songs plus the ordered pool of evaluated systems.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    systems: Vec<String>,
    songs: Vec<SongRecord>,
}

impl Dataset {
    pub fn new(systems: Vec<String>, songs: Vec<SongRecord>) -> Result<Self, ManifestError> {
        if systems.is_empty() {
            return Err(ManifestError::SchemaError("systems: empty".into()));
        }
        let mut seen = HashSet::new();
        for s in &systems {
            if s.is_empty() || !seen.insert(s.as_str()) {
                return Err(ManifestError::SchemaError(format!(
                    "systems: bad or duplicate name {s:?}"
                )));
            }
        }
        let mut ids = HashSet::new();
        for song in &songs {
            if song.id.is_empty() || !ids.insert(song.id.as_str()) {
                return Err(ManifestError::SchemaError(format!(
                    "songs.id: bad or duplicate id {:?}",
                    song.id
                )));
            }
            if song.genre.is_empty() {
                return Err(ManifestError::SchemaError(format!("songs[{}].genre: empty", song.id)));
            }
            if let Some(extra) = song.predictions.keys().find(|k| !seen.contains(k.as_str())) {
                return Err(ManifestError::SchemaError(format!(
                    "songs[{}].predictions: unknown system {extra:?}",
                    song.id
                )));
            }
            if let Some(missing) = systems.iter().find(|s| !song.predictions.contains_key(*s)) {
                return Err(ManifestError::MissingPrediction {
                    song: song.id.clone(),
                    system: missing.clone(),
                });
            }
        }
        Ok(Dataset { systems, songs })
    }

    pub fn systems(&self) -> &[String] {
        &self.systems
    }

    pub fn songs(&self) -> &[SongRecord] {
        &self.songs
    }

    /// Songs with ground truth (n).
    pub fn validation_count(&self) -> usize {
        self.songs.iter().filter(|s| s.is_validation()).count()
    }

    /// Songs without ground truth (m).
    pub fn test_count(&self) -> usize {
        self.songs.len() - self.validation_count()
    }
}

#[derive(Deserialize)]
struct RawManifest {
    systems: Vec<String>,
    songs: Vec<RawSong>,
}

#[derive(Deserialize)]
struct RawSong {
    id: String,
    genre: String,
    #[serde(default)]
    gt: Option<String>,
    pseudo: String,
    predictions: BTreeMap<String, String>,
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Dataset, ManifestError> {
    load_manifest_with(path, Execution::default())
}

pub fn load_manifest_with(path: impl AsRef<Path>, exec: Execution) -> Result<Dataset, ManifestError> {
    let path = path.as_ref();
    let text = read(path)?;
    let raw: RawManifest = serde_json::from_str(&text).map_err(|e| ManifestError::SchemaError(e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));

    // Validate the shape before touching any annotation file.
    let skeleton: Vec<SongRecord> = raw
        .songs
        .iter()
        .map(|s| SongRecord {
            id: s.id.clone(),
            genre: s.genre.clone(),
            gt: None,
            pseudo: Annotation::default(),
            predictions: s
                .predictions
                .keys()
                .map(|k| (k.clone(), Annotation::default()))
                .collect(),
        })
        .collect();
    Dataset::new(raw.systems.clone(), skeleton)?;

    let loaded = exec.map(&raw.songs, |song| load_song(base, song));
    let songs = loaded.into_iter().collect::<Result<Vec<_>, _>>()?;
    Dataset::new(raw.systems, songs)
}

fn load_song(base: &Path, song: &RawSong) -> Result<SongRecord, ManifestError> {
    let gt = song.gt.as_deref().map(|p| load_lab(&base.join(p))).transpose()?;
    let pseudo = load_lab(&base.join(&song.pseudo))?;
    let predictions = song
        .predictions
        .iter()
        .map(|(system, p)| Ok((system.clone(), load_lab(&base.join(p))?)))
        .collect::<Result<_, ManifestError>>()?;
    Ok(SongRecord {
        id: song.id.clone(),
        genre: song.genre.clone(),
        gt,
        pseudo,
        predictions,
    })
}

fn read(path: &Path) -> Result<String, ManifestError> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => ManifestError::MissingFile(path.to_path_buf()),
        _ => ManifestError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })
}

fn load_lab(path: &Path) -> Result<Annotation, ManifestError> {
    parse_lab(&read(path)?).map_err(|source| ManifestError::Lab {
        path: path.to_path_buf(),
        source,
    })
}
