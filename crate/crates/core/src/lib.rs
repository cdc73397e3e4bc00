//! Evaluate chord recognizers on songs without ground-truth annotations.
//!
//! Predictions are scored frame-wise against pseudo annotations, giving a
//! pseudo accuracy `x` per song and system. On a validation set where
//! ground truth is also available, a statistical model relating `x` to the
//! ground-truth accuracy `y` is fitted; it then turns pseudo accuracies on
//! an unannotated test set into interval estimates of ground-truth
//! accuracy.
//!
//! - [`chord`]: chord symbols and the comparison vocabulary
//! - [`annotation`]: LAB files and the dataset manifest
//! - [`scoring`]: frame-wise accuracy and the accuracy table
//! - [`estimators`]: S, I and L models with their intervals
//! - [`consensus`]: frame-level majority vote
//! - [`simulator`]: synthetic data and coverage experiments

pub mod annotation;
pub mod chord;
pub mod consensus;
pub mod estimators;
pub mod exec;
pub mod scoring;
pub mod simulator;

pub use annotation::{load_manifest, parse_lab, write_lab, Annotation, Dataset, Segment, SongRecord};
pub use chord::{labels_match, parse_chord_label, ChordLabel, MatchOutcome, Vocabulary};
pub use estimators::{
    normal_quantile, EstimatorError, FittedModel, IntervalEstimate, MeanVariance, ModelKind, QuantileMode,
};
pub use exec::Execution;
pub use scoring::{frame_accuracy, score_dataset, AccuracyPair, FrameSpec};
