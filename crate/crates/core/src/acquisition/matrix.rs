//! The complete (image × augmentation × question) answer store and its file
//! format: one JSON header line followed by one JSON record per line.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AcquisitionError, DatasetManifest};
use crate::answer::{classify, normalize_answer, Outcome};
use crate::question_grid::{grid_hash, validate_questions, Question};

pub const MATRIX_FORMAT: &str = "qsel.answer-matrix.v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub image_id: String,
    pub aug_index: usize,
    pub question_id: usize,
    pub raw_answer: String,
    pub outcome: Outcome,
}

#[derive(Serialize, Deserialize)]
struct MatrixHeader {
    format: String,
    question_hash: String,
    n_aug: usize,
    questions: Vec<Question>,
    manifest: DatasetManifest,
}

/// Immutable, complete answer matrix. Records are held in canonical order:
/// manifest order, then augmentation index, then question id.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerMatrix {
    questions: Vec<Question>,
    manifest: DatasetManifest,
    n_aug: usize,
    records: Vec<AnswerRecord>,
}

impl AnswerMatrix {
    /// Builds a matrix from records in any order, rejecting incomplete,
    /// duplicated or misclassified input.
    pub fn new(
        questions: Vec<Question>,
        manifest: DatasetManifest,
        n_aug: usize,
        records: Vec<AnswerRecord>,
    ) -> Result<Self, AcquisitionError> {
        validate_questions(&questions).map_err(|e| AcquisitionError::Schema(e.to_string()))?;
        manifest.validate()?;
        if n_aug == 0 {
            return Err(AcquisitionError::Schema("n_aug must be at least 1".into()));
        }
        let n_q = questions.len();
        let expected = manifest.len() * n_aug * n_q;
        let index_of: HashMap<&str, usize> = manifest
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.image_id.as_str(), i))
            .collect();

        let mut slots: Vec<Option<AnswerRecord>> = vec![None; expected];
        for record in records {
            let image = *index_of.get(record.image_id.as_str()).ok_or_else(|| {
                AcquisitionError::Incomplete(format!(
                    "record for unknown image {:?}",
                    record.image_id
                ))
            })?;
            if record.aug_index >= n_aug || record.question_id >= n_q {
                return Err(AcquisitionError::Incomplete(format!(
                    "record index out of range: image {:?} aug {} question {}",
                    record.image_id, record.aug_index, record.question_id
                )));
            }
            let question = &questions[record.question_id];
            let label = manifest.entries[image].label;
            let outcome = classify(
                normalize_answer(&record.raw_answer),
                question.polarity,
                label,
            );
            if outcome != record.outcome {
                return Err(AcquisitionError::Schema(format!(
                    "record ({:?}, {}, {}) stores outcome {:?} but its answer {:?} classifies as {:?}",
                    record.image_id,
                    record.aug_index,
                    record.question_id,
                    record.outcome,
                    record.raw_answer,
                    outcome
                )));
            }
            let slot = &mut slots[(image * n_aug + record.aug_index) * n_q + record.question_id];
            if slot.is_some() {
                return Err(AcquisitionError::Incomplete(format!(
                    "duplicate record: image {:?} aug {} question {}",
                    record.image_id, record.aug_index, record.question_id
                )));
            }
            *slot = Some(record);
        }
        let missing = slots.iter().filter(|s| s.is_none()).count();
        if missing > 0 {
            return Err(AcquisitionError::Incomplete(format!(
                "{missing} of {expected} records missing"
            )));
        }
        let records = slots.into_iter().map(|s| s.expect("checked")).collect();
        Ok(AnswerMatrix {
            questions,
            manifest,
            n_aug,
            records,
        })
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn n_aug(&self) -> usize {
        self.n_aug
    }

    pub fn n_images(&self) -> usize {
        self.manifest.len()
    }

    pub fn n_questions(&self) -> usize {
        self.questions.len()
    }

    pub fn records(&self) -> &[AnswerRecord] {
        &self.records
    }

    pub fn question_hash(&self) -> String {
        grid_hash(&self.questions)
    }

    /// Record at (manifest position, augmentation, question).
    pub fn record(&self, image: usize, aug_index: usize, question_id: usize) -> &AnswerRecord {
        &self.records[(image * self.n_aug + aug_index) * self.questions.len() + question_id]
    }

    pub fn write_to<W: Write>(&self, writer: W) -> Result<(), AcquisitionError> {
        let mut w = BufWriter::new(writer);
        let header = MatrixHeader {
            format: MATRIX_FORMAT.to_string(),
            question_hash: self.question_hash(),
            n_aug: self.n_aug,
            questions: self.questions.clone(),
            manifest: self.manifest.clone(),
        };
        serde_json::to_writer(&mut w, &header).map_err(AcquisitionError::Json)?;
        w.write_all(b"\n").map_err(AcquisitionError::Write)?;
        for record in &self.records {
            serde_json::to_writer(&mut w, record).map_err(AcquisitionError::Json)?;
            w.write_all(b"\n").map_err(AcquisitionError::Write)?;
        }
        w.flush().map_err(AcquisitionError::Write)
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, AcquisitionError> {
        let mut lines = reader.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| AcquisitionError::Schema("empty matrix file".into()))?
            .map_err(AcquisitionError::Read)?;
        let header: MatrixHeader = serde_json::from_str(&header_line)
            .map_err(|e| AcquisitionError::Schema(format!("bad matrix header: {e}")))?;
        if header.format != MATRIX_FORMAT {
            return Err(AcquisitionError::Schema(format!(
                "unsupported matrix format {:?}",
                header.format
            )));
        }
        let actual = grid_hash(&header.questions);
        if actual != header.question_hash {
            return Err(AcquisitionError::HashMismatch {
                expected: header.question_hash,
                actual,
            });
        }
        let mut records = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(AcquisitionError::Read)?;
            if line.trim().is_empty() {
                continue;
            }
            let record: AnswerRecord = serde_json::from_str(&line)
                .map_err(|e| AcquisitionError::Schema(format!("record line {}: {e}", n + 2)))?;
            records.push(record);
        }
        AnswerMatrix::new(header.questions, header.manifest, header.n_aug, records)
    }
}

pub fn save_matrix(matrix: &AnswerMatrix, path: impl AsRef<Path>) -> Result<(), AcquisitionError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| AcquisitionError::io(path, e))?;
    matrix.write_to(file)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<AnswerMatrix, AcquisitionError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| AcquisitionError::io(path, e))?;
    AnswerMatrix::read_from(BufReader::new(file))
}
