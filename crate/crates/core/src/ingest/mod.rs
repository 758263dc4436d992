//! Dataset and prediction-file loading, JSON extraction from raw LLM
//! completions, and assembly of parsed runs into a campaign store.

mod dataset;
mod extract;
mod parse;
mod store;

use std::path::PathBuf;

use thiserror::Error;

pub use dataset::{load_dataset, read_dataset, write_dataset, Dataset};
pub use extract::{extract_json_block, ExtractError};
pub use parse::{
    parse_line, parse_prediction, parse_row, LenientFlag, ParseFailure, ParseFailureKind,
    ParseOutcome, PredictionKeys, PredictionLine, Provenance,
};
pub use store::{
    assemble_runs, load_predictions, read_predictions, write_exclusions, write_predictions,
    CampaignStore, CellKey, ExclusionEntry, ExclusionReport, StoreWarning,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: duplicate subject_id {subject_id}")]
    DuplicateSubject { line: usize, subject_id: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: crate::domain::DomainError,
    },
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }
}
