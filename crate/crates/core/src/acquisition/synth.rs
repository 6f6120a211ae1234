//! Seeded synthetic answer matrices, standing in for a real VQA model.

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use super::{AcquisitionError, AnswerMatrix, AnswerRecord, DatasetManifest};
use crate::answer::{expected_answer, Outcome};
use crate::question_grid::Question;
use crate::seeded_rng;

const INVALID_REPLIES: [&str; 4] = ["door", "it is unclear", "a kitchen", "maybe"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionRates {
    pub question_id: usize,
    pub p_correct: f64,
    pub p_invalid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    pub seed: u64,
    pub questions: Vec<QuestionRates>,
}

impl SyntheticProfile {
    /// Same rates for every question.
    pub fn uniform(n_questions: usize, p_correct: f64, p_invalid: f64, seed: u64) -> Self {
        SyntheticProfile {
            seed,
            questions: (0..n_questions)
                .map(|question_id| QuestionRates {
                    question_id,
                    p_correct,
                    p_invalid,
                })
                .collect(),
        }
    }

    /// Per-question rates drawn from `rng`: `p_correct` uniform in
    /// `p_correct_range`, `p_invalid` uniform in `[0, p_invalid_max]`, then
    /// scaled down together if they would exceed 1.
    pub fn random<R: Rng + ?Sized>(
        n_questions: usize,
        p_correct_range: (f64, f64),
        p_invalid_max: f64,
        seed: u64,
        rng: &mut R,
    ) -> Self {
        let questions = (0..n_questions)
            .map(|question_id| {
                let mut p_correct = rng.random_range(p_correct_range.0..=p_correct_range.1);
                let mut p_invalid = rng.random_range(0.0..=p_invalid_max);
                let sum = p_correct + p_invalid;
                if sum > 1.0 {
                    p_correct /= sum;
                    p_invalid = 1.0 - p_correct;
                }
                QuestionRates {
                    question_id,
                    p_correct,
                    p_invalid,
                }
            })
            .collect();
        SyntheticProfile { seed, questions }
    }

    pub fn validate(&self, n_questions: usize) -> Result<(), AcquisitionError> {
        let mut covered = vec![false; n_questions];
        for r in &self.questions {
            let in_unit = |p: f64| (0.0..=1.0).contains(&p);
            if !in_unit(r.p_correct) || !in_unit(r.p_invalid) || r.p_correct + r.p_invalid > 1.0 {
                return Err(AcquisitionError::Profile(format!(
                    "question {}: p_correct={} p_invalid={} out of range",
                    r.question_id, r.p_correct, r.p_invalid
                )));
            }
            match covered.get_mut(r.question_id) {
                Some(c) if !*c => *c = true,
                Some(_) => {
                    return Err(AcquisitionError::Profile(format!(
                        "question {} listed twice",
                        r.question_id
                    )))
                }
                None => {
                    return Err(AcquisitionError::Profile(format!(
                        "question {} is not in the grid",
                        r.question_id
                    )))
                }
            }
        }
        if let Some(missing) = covered.iter().position(|c| !c) {
            return Err(AcquisitionError::Profile(format!(
                "no rates for question {missing}"
            )));
        }
        Ok(())
    }

    fn rates_by_question(&self, n_questions: usize) -> Vec<QuestionRates> {
        let mut by_id = self.questions.clone();
        by_id.sort_by_key(|r| r.question_id);
        debug_assert_eq!(by_id.len(), n_questions);
        by_id
    }
}

/// Draws every record independently: Correct with `p_correct`, Invalid with
/// `p_invalid`, otherwise Wrong. Raw answers are written to agree with the
/// drawn outcome, so the matrix classifies back to the same values.
pub fn synth_matrix(
    manifest: &DatasetManifest,
    questions: &[Question],
    profile: &SyntheticProfile,
    n_aug: usize,
) -> Result<AnswerMatrix, AcquisitionError> {
    manifest.validate()?;
    profile.validate(questions.len())?;
    let rates = profile.rates_by_question(questions.len());
    let mut rng = seeded_rng(profile.seed);
    let mut records = Vec::with_capacity(manifest.len() * n_aug * questions.len());
    for entry in &manifest.entries {
        for aug_index in 0..n_aug {
            for (q, r) in questions.iter().zip(&rates) {
                let u: f64 = rng.random();
                let expected = expected_answer(q.polarity, entry.label);
                let (outcome, raw) = if u < r.p_correct {
                    (Outcome::Correct, expected.as_str())
                } else if u < r.p_correct + r.p_invalid {
                    (
                        Outcome::Invalid,
                        INVALID_REPLIES[q.id % INVALID_REPLIES.len()],
                    )
                } else {
                    (Outcome::Wrong, expected.flipped().as_str())
                };
                records.push(AnswerRecord {
                    image_id: entry.image_id.clone(),
                    aug_index,
                    question_id: q.id,
                    raw_answer: raw.to_string(),
                    outcome,
                });
            }
        }
    }
    AnswerMatrix::new(questions.to_vec(), manifest.clone(), n_aug, records)
}
