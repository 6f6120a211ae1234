//! Answer sources for [`collect_answers`](super::collect_answers).

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AcquisitionError;
use crate::question_grid::Question;

/// Environment variable consulted when no endpoint flag is given.
pub const ENDPOINT_ENV: &str = "QSEL_VQA_ENDPOINT";

#[derive(Debug, Clone, Error)]
pub enum OracleError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {0}")]
    Status(u16),
    #[error("malformed oracle response: {0}")]
    Protocol(String),
    #[error("no recorded answer for image {image_id:?} aug {aug_index} question {question_id}")]
    Missing {
        image_id: String,
        aug_index: usize,
        question_id: usize,
    },
}

impl OracleError {
    /// Permanent failures are not retried.
    pub fn is_transient(&self) -> bool {
        !matches!(self, OracleError::Missing { .. })
    }
}

/// One (image, augmentation, question) query.
pub struct Query<'a> {
    pub image_id: &'a str,
    pub aug_index: usize,
    pub question: &'a Question,
    /// PNG bytes of the augmented image; `None` when the oracle does not
    /// need pixels.
    pub png: Option<&'a [u8]>,
}

pub trait AnswerOracle: Sync {
    /// Whether queries must carry the augmented image.
    fn needs_pixels(&self) -> bool;

    fn answer(&self, query: &Query<'_>) -> Result<String, OracleError>;
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VqaRequest {
    pub image: String,
    pub question: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VqaResponse {
    pub answer: String,
}

/// Remote VQA endpoint speaking `POST /vqa`.
pub struct HttpOracle {
    url: String,
    agent: ureq::Agent,
}

impl HttpOracle {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let url = format!("{}/vqa", endpoint.trim_end_matches('/'));
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .new_agent();
        HttpOracle { url, agent }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl AnswerOracle for HttpOracle {
    fn needs_pixels(&self) -> bool {
        true
    }

    fn answer(&self, query: &Query<'_>) -> Result<String, OracleError> {
        let png = query
            .png
            .ok_or_else(|| OracleError::Protocol("query carries no image".into()))?;
        let body = VqaRequest {
            image: base64::engine::general_purpose::STANDARD.encode(png),
            question: query.question.text.clone(),
        };
        let mut response = self
            .agent
            .post(&self.url)
            .send_json(&body)
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(OracleError::Status(status));
        }
        let parsed: VqaResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| OracleError::Protocol(e.to_string()))?;
        Ok(parsed.answer)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub image_id: String,
    pub aug_index: usize,
    pub question_id: usize,
    pub answer: String,
}

/// Answers served from a JSON-lines recording.
#[derive(Debug, Clone, Default)]
pub struct ReplayOracle {
    answers: HashMap<(String, usize, usize), String>,
}

impl ReplayOracle {
    pub fn from_entries(
        entries: impl IntoIterator<Item = ReplayEntry>,
    ) -> Result<Self, AcquisitionError> {
        let mut answers = HashMap::new();
        for e in entries {
            let key = (e.image_id, e.aug_index, e.question_id);
            if answers.contains_key(&key) {
                return Err(AcquisitionError::Schema(format!(
                    "duplicate replay entry for image {:?} aug {} question {}",
                    key.0, key.1, key.2
                )));
            }
            answers.insert(key, e.answer);
        }
        Ok(ReplayOracle { answers })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AcquisitionError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| AcquisitionError::io(path, e))?;
        let mut entries = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(AcquisitionError::Read)?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ReplayEntry = serde_json::from_str(&line).map_err(|e| {
                AcquisitionError::Schema(format!("{} line {}: {e}", path.display(), n + 1))
            })?;
            entries.push(entry);
        }
        Self::from_entries(entries)
    }

    pub fn get(&self, image_id: &str, aug_index: usize, question_id: usize) -> Option<&str> {
        self.answers
            .get(&(image_id.to_string(), aug_index, question_id))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }
}

impl AnswerOracle for ReplayOracle {
    fn needs_pixels(&self) -> bool {
        false
    }

    fn answer(&self, query: &Query<'_>) -> Result<String, OracleError> {
        self.get(query.image_id, query.aug_index, query.question.id)
            .map(str::to_string)
            .ok_or_else(|| OracleError::Missing {
                image_id: query.image_id.to_string(),
                aug_index: query.aug_index,
                question_id: query.question.id,
            })
    }
}
