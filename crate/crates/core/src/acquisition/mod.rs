//! Building the answer matrix: augmentation, oracle queries, persistence.

mod collect;
pub mod image;
mod manifest;
mod matrix;
pub mod mock;
pub mod oracle;
mod synth;

use std::fmt;
use std::path::Path;

use thiserror::Error;

pub use collect::{augment_dataset, collect_answers, CollectOptions, RetryPolicy};
pub use image::{apply_channel_shift, rgb_shift, FloatImage};
pub use manifest::{load_manifest, DatasetManifest, ManifestEntry};
pub use matrix::{load_matrix, save_matrix, AnswerMatrix, AnswerRecord, MATRIX_FORMAT};
pub use oracle::{AnswerOracle, HttpOracle, OracleError, ReplayEntry, ReplayOracle};
pub use synth::{synth_matrix, QuestionRates, SyntheticProfile};

/// Augmented copies per image-question pair used by the reference setup.
pub const DEFAULT_N_AUG: usize = 6;

#[derive(Debug)]
pub struct FailedQuery {
    pub image_id: String,
    pub aug_index: usize,
    pub question_id: usize,
    pub error: OracleError,
}

impl fmt::Display for FailedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "image {:?} aug {} question {}: {}",
            self.image_id, self.aug_index, self.question_id, self.error
        )
    }
}

#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("read error: {0}")]
    Read(#[source] std::io::Error),
    #[error("write error: {0}")]
    Write(#[source] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[source] serde_json::Error),
    #[error("cannot load image {path}: {message}")]
    Image { path: String, message: String },
    #[error("malformed image: {0}")]
    MalformedImage(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("matrix schema error: {0}")]
    Schema(String),
    #[error("incomplete answer matrix: {0}")]
    Incomplete(String),
    #[error("question hash mismatch: header says {expected}, questions hash to {actual}")]
    HashMismatch { expected: String, actual: String },
    #[error("invalid synthetic profile: {0}")]
    Profile(String),
    #[error("{} of {total} oracle queries failed; first: {}", failed.len(), failed[0])]
    OracleFailed {
        total: usize,
        failed: Vec<FailedQuery>,
    },
    #[error("mock server: {0}")]
    Server(String),
}

impl AcquisitionError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        AcquisitionError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
