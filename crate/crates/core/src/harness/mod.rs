//! Metrics, multi-seed experiments, checkpoints and reporting.

mod checkpoint;
mod experiment;
mod metrics;
mod qualitative;
mod reference;

pub use checkpoint::{Checkpoint, StoredVectors, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use experiment::{multi_run, single_run, MultiRunReport, RunResult};
pub use metrics::{bootstrap_ci, macro_f1, BootstrapCI, ConfusionCounts, DEFAULT_RESAMPLES};
pub use qualitative::{qualitative_rows, write_tsv, QualitativeRow};
pub use reference::{ReferenceScore, ReferenceStats, ReferenceTable, REFERENCE_TOLERANCE};
