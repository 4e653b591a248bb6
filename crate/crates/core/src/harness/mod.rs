//! Batch evaluation: candidates, scoring under every index, ranking, the
//! ARI success rule, accuracy aggregation, calibration and file outputs.

mod accuracy;
mod calibrate;
mod config;
mod evaluate;
mod svg;

use std::path::PathBuf;

use thiserror::Error;

use crate::data::DataError;
use crate::kdi::KdiError;
use crate::partition::PartitionError;

pub use accuracy::{aggregate_accuracy, AccuracyTable};
pub use calibrate::{calibrate, calibration_grid, Calibration};
pub use config::{load_config, RunConfig, CONFIG_ENV};
pub use evaluate::{
    evaluate_candidates, evaluate_dataset, rank_candidates, CandidateRow, EvaluationReport, IndexOutcome, RankEntry,
    SUCCESS_THRESHOLD,
};
pub use svg::{emit_svg, render_svg, PALETTE};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Kdi(#[from] KdiError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("nothing to aggregate: {0}")]
    Empty(String),
    #[error("cannot plot: {0}")]
    Plot(String),
}

impl HarnessError {
    /// True for errors caused by how the tool was invoked rather than by the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
