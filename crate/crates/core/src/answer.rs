//! Mapping raw VQA replies onto Correct / Wrong / Invalid.

use serde::{Deserialize, Serialize};

use crate::question_grid::Polarity;

/// A reply that normalized to exactly "yes" or "no".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValidAnswer {
    Yes,
    No,
}

impl ValidAnswer {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidAnswer::Yes => "yes",
            ValidAnswer::No => "no",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ValidAnswer::Yes => ValidAnswer::No,
            ValidAnswer::No => ValidAnswer::Yes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Correct,
    Wrong,
    Invalid,
}

/// Lowercases, trims whitespace and trailing `.`, `,`, `!`, then accepts only
/// an exact "yes" or "no". Anything else is `None` (an invalid reply).
pub fn normalize_answer(raw: &str) -> Option<ValidAnswer> {
    let lowered = raw.to_lowercase();
    let stripped = lowered
        .trim()
        .trim_end_matches(|c: char| matches!(c, '.' | ',' | '!') || c.is_whitespace());
    match stripped {
        "yes" => Some(ValidAnswer::Yes),
        "no" => Some(ValidAnswer::No),
        _ => None,
    }
}

/// The answer a perfect recognizer would give for a question of this polarity
/// on an image whose target state is `label`.
pub fn expected_answer(polarity: Polarity, label: bool) -> ValidAnswer {
    let asserted = match polarity {
        Polarity::Positive => label,
        Polarity::Negated => !label,
    };
    if asserted {
        ValidAnswer::Yes
    } else {
        ValidAnswer::No
    }
}

pub fn classify(answer: Option<ValidAnswer>, polarity: Polarity, label: bool) -> Outcome {
    match answer {
        None => Outcome::Invalid,
        Some(a) if a == expected_answer(polarity, label) => Outcome::Correct,
        Some(_) => Outcome::Wrong,
    }
}
