use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::Rng;

use super::image::{rgb_shift, FloatImage};
use super::oracle::{AnswerOracle, OracleError, Query};
use super::{AcquisitionError, AnswerMatrix, AnswerRecord, DatasetManifest, FailedQuery};
use crate::answer::{classify, normalize_answer};
use crate::question_grid::Question;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubled for each later one.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectOptions {
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            max_in_flight: 4,
            retry: RetryPolicy::default(),
        }
    }
}

/// Generates `n_aug` RGBShift variants per manifest image, PNG-encoded.
///
/// The generator is consumed image by image in manifest order, so the
/// result depends only on the seed and the source pixels.
pub fn augment_dataset<R: Rng + ?Sized>(
    manifest: &DatasetManifest,
    image_root: &Path,
    n_aug: usize,
    rng: &mut R,
) -> Result<Vec<Vec<Vec<u8>>>, AcquisitionError> {
    manifest
        .entries
        .iter()
        .map(|entry| {
            let source = FloatImage::open(&image_root.join(&entry.path))?;
            Ok((0..n_aug)
                .map(|_| rgb_shift(&source, rng).to_png())
                .collect())
        })
        .collect()
}

fn ask_with_retry(
    oracle: &dyn AnswerOracle,
    query: &Query<'_>,
    retry: RetryPolicy,
) -> Result<String, OracleError> {
    let mut delay = retry.base_delay;
    let mut attempt = 1;
    loop {
        match oracle.answer(query) {
            Ok(answer) => return Ok(answer),
            Err(e) if !e.is_transient() || attempt >= retry.attempts.max(1) => return Err(e),
            Err(e) => {
                log::debug!("oracle attempt {attempt} failed: {e}; retrying");
                std::thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
        }
    }
}

/// Queries every (image, augmentation, question) triple exactly once and
/// assembles a complete [`AnswerMatrix`].
///
/// Augmentations are drawn from `rng` before any query is issued. Failed
/// triples are reported together; no partial matrix is returned.
pub fn collect_answers<R: Rng + ?Sized>(
    manifest: &DatasetManifest,
    image_root: &Path,
    questions: &[Question],
    oracle: &dyn AnswerOracle,
    n_aug: usize,
    rng: &mut R,
    options: CollectOptions,
) -> Result<AnswerMatrix, AcquisitionError> {
    manifest.validate()?;
    if n_aug == 0 {
        return Err(AcquisitionError::Schema("n_aug must be at least 1".into()));
    }
    let pixels = if oracle.needs_pixels() {
        Some(augment_dataset(manifest, image_root, n_aug, rng)?)
    } else {
        None
    };

    let n_q = questions.len();
    let total = manifest.len() * n_aug * n_q;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<String, OracleError>>>> = Mutex::new(vec![None; total]);
    let workers = options.max_in_flight.clamp(1, total.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= total {
                    break;
                }
                let q = idx % n_q;
                let aug = (idx / n_q) % n_aug;
                let image = idx / (n_q * n_aug);
                let query = Query {
                    image_id: &manifest.entries[image].image_id,
                    aug_index: aug,
                    question: &questions[q],
                    png: pixels.as_ref().map(|p| p[image][aug].as_slice()),
                };
                let result = ask_with_retry(oracle, &query, options.retry);
                results.lock().expect("result lock")[idx] = Some(result);
            });
        }
    });

    let results = results.into_inner().expect("result lock");
    let mut records = Vec::with_capacity(total);
    let mut failed = Vec::new();
    for (idx, result) in results.into_iter().enumerate() {
        let q = idx % n_q;
        let aug = (idx / n_q) % n_aug;
        let entry = &manifest.entries[idx / (n_q * n_aug)];
        match result.expect("every index visited") {
            Ok(raw_answer) => {
                let outcome = classify(
                    normalize_answer(&raw_answer),
                    questions[q].polarity,
                    entry.label,
                );
                records.push(AnswerRecord {
                    image_id: entry.image_id.clone(),
                    aug_index: aug,
                    question_id: q,
                    raw_answer,
                    outcome,
                });
            }
            Err(error) => failed.push(FailedQuery {
                image_id: entry.image_id.clone(),
                aug_index: aug,
                question_id: q,
                error,
            }),
        }
    }
    if !failed.is_empty() {
        return Err(AcquisitionError::OracleFailed { total, failed });
    }
    AnswerMatrix::new(questions.to_vec(), manifest.clone(), n_aug, records)
}
