//! Candidate question generation.
//!
//! A [`QuestionSpec`] declares the four axes a question can vary along
//! (form, article, state expression, wording). [`expand_grid`] takes their
//! Cartesian product in a fixed row-major order so question ids are stable.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Default upper bound on the number of generated questions.
pub const DEFAULT_GRID_CAP: usize = 64;

const PLACEHOLDERS: [&str; 3] = ["article", "wording", "state"];

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("failed to read question spec {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed question spec: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("question spec has an empty `{0}` list")]
    EmptyDimension(&'static str),
    #[error("form template {template:?} uses unknown placeholder {{{name}}}")]
    UnknownPlaceholder { template: String, name: String },
    #[error("form template {template:?} has an unbalanced brace")]
    UnbalancedBrace { template: String },
    #[error("form template {template:?} is missing placeholder {{{name}}}")]
    MissingPlaceholder {
        template: String,
        name: &'static str,
    },
    #[error("state entry {index} ({text:?}) has no polarity tag")]
    MissingPolarity { index: usize, text: String },
    #[error("question spec has no positive state entry")]
    NoPositiveState,
    #[error("grid exceeds cap: {size} questions > cap {cap}")]
    GridExceedsCap { size: usize, cap: usize },
    #[error("invalid question grid: {0}")]
    InvalidGrid(String),
}

/// Question form family. Baselines group questions by this label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Does,
    Is,
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Style::Does => "does",
            Style::Is => "is",
        })
    }
}

/// Whether a "yes" answer asserts the target state (`Positive`) or its
/// negation (`Negated`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormTemplate {
    pub style: Style,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateExpression {
    pub text: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuestionSpec {
    pub forms: Vec<FormTemplate>,
    pub articles: Vec<String>,
    pub states: Vec<StateExpression>,
    pub wordings: Vec<String>,
}

// On-disk shape; polarity is optional here so a missing tag gets a precise error.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    forms: Vec<FormTemplate>,
    articles: Vec<String>,
    states: Vec<RawState>,
    wordings: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    text: String,
    polarity: Option<Polarity>,
}

impl QuestionSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let raw: RawSpec = serde_json::from_str(text)?;
        let states = raw
            .states
            .into_iter()
            .enumerate()
            .map(|(index, s)| match s.polarity {
                Some(polarity) => Ok(StateExpression {
                    text: s.text,
                    polarity,
                }),
                None => Err(SpecError::MissingPolarity {
                    index,
                    text: s.text,
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let spec = QuestionSpec {
            forms: raw.forms,
            articles: raw.articles,
            states,
            wordings: raw.wordings,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.forms.is_empty() {
            return Err(SpecError::EmptyDimension("forms"));
        }
        if self.articles.is_empty() {
            return Err(SpecError::EmptyDimension("articles"));
        }
        if self.states.is_empty() {
            return Err(SpecError::EmptyDimension("states"));
        }
        if self.wordings.is_empty() {
            return Err(SpecError::EmptyDimension("wordings"));
        }
        for form in &self.forms {
            check_template(&form.template)?;
        }
        if !self.states.iter().any(|s| s.polarity == Polarity::Positive) {
            return Err(SpecError::NoPositiveState);
        }
        Ok(())
    }

    pub fn grid_size(&self) -> usize {
        self.forms.len() * self.articles.len() * self.states.len() * self.wordings.len()
    }
}

/// Splits a template into literal text and placeholder names.
fn tokenize(template: &str) -> Result<Vec<Token<'_>>, SpecError> {
    let unbalanced = || SpecError::UnbalancedBrace {
        template: template.to_string(),
    };
    let mut tokens = Vec::new();
    let mut rest = template;
    while !rest.is_empty() {
        match rest.find(['{', '}']) {
            None => {
                tokens.push(Token::Literal(rest));
                break;
            }
            Some(pos) => {
                if rest.as_bytes()[pos] == b'}' {
                    return Err(unbalanced());
                }
                if pos > 0 {
                    tokens.push(Token::Literal(&rest[..pos]));
                }
                let after = &rest[pos + 1..];
                let close = after.find('}').ok_or_else(unbalanced)?;
                let name = &after[..close];
                if name.contains('{') {
                    return Err(unbalanced());
                }
                tokens.push(Token::Placeholder(name));
                rest = &after[close + 1..];
            }
        }
    }
    Ok(tokens)
}

enum Token<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

fn check_template(template: &str) -> Result<(), SpecError> {
    let tokens = tokenize(template)?;
    for token in &tokens {
        if let Token::Placeholder(name) = token {
            if !PLACEHOLDERS.contains(name) {
                return Err(SpecError::UnknownPlaceholder {
                    template: template.to_string(),
                    name: name.to_string(),
                });
            }
        }
    }
    for required in PLACEHOLDERS {
        let present = tokens
            .iter()
            .any(|t| matches!(t, Token::Placeholder(n) if *n == required));
        if !present {
            return Err(SpecError::MissingPlaceholder {
                template: template.to_string(),
                name: required,
            });
        }
    }
    Ok(())
}

fn substitute(template: &str, article: &str, wording: &str, state: &str) -> String {
    // Templates are validated on construction, so tokenizing cannot fail here.
    let tokens = tokenize(template).expect("template validated");
    let mut out = String::with_capacity(template.len() + 32);
    for token in tokens {
        match token {
            Token::Literal(s) => out.push_str(s),
            Token::Placeholder("article") => out.push_str(article),
            Token::Placeholder("wording") => out.push_str(wording),
            Token::Placeholder("state") => out.push_str(state),
            Token::Placeholder(other) => unreachable!("unknown placeholder {other}"),
        }
    }
    out
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<QuestionSpec, SpecError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    QuestionSpec::from_json(&text)
}

/// Position of a question along each grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridCoords {
    pub form: usize,
    pub article: usize,
    pub state: usize,
    pub wording: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: usize,
    pub text: String,
    pub style: Style,
    pub polarity: Polarity,
    pub coords: GridCoords,
}

/// Expands the spec into `forms × articles × states × wordings` questions,
/// form outermost and wording innermost.
pub fn expand_grid(spec: &QuestionSpec, cap: usize) -> Result<Vec<Question>, SpecError> {
    spec.validate()?;
    let size = spec.grid_size();
    if size > cap {
        return Err(SpecError::GridExceedsCap { size, cap });
    }
    let mut questions = Vec::with_capacity(size);
    for (fi, form) in spec.forms.iter().enumerate() {
        for (ai, article) in spec.articles.iter().enumerate() {
            for (si, state) in spec.states.iter().enumerate() {
                for (wi, wording) in spec.wordings.iter().enumerate() {
                    questions.push(Question {
                        id: questions.len(),
                        text: substitute(&form.template, article, wording, &state.text),
                        style: form.style,
                        polarity: state.polarity,
                        coords: GridCoords {
                            form: fi,
                            article: ai,
                            state: si,
                            wording: wi,
                        },
                    });
                }
            }
        }
    }
    Ok(questions)
}

/// Checks that a question list loaded from disk has dense ids `0..n`.
pub fn validate_questions(questions: &[Question]) -> Result<(), SpecError> {
    if questions.is_empty() {
        return Err(SpecError::InvalidGrid("question list is empty".into()));
    }
    for (pos, q) in questions.iter().enumerate() {
        if q.id != pos {
            return Err(SpecError::InvalidGrid(format!(
                "question at position {pos} has id {}",
                q.id
            )));
        }
        if q.text.contains('{') || q.text.contains('}') {
            return Err(SpecError::InvalidGrid(format!(
                "question {pos} has an unsubstituted placeholder: {:?}",
                q.text
            )));
        }
    }
    Ok(())
}

/// SHA-256 over the canonical JSON encoding of the question list.
///
/// Train results and test matrices must agree on this value before any
/// selection is evaluated against a matrix.
pub fn grid_hash(questions: &[Question]) -> String {
    let canonical = serde_json::to_vec(questions).expect("questions serialize");
    hex::encode(Sha256::digest(&canonical))
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<Vec<Question>, SpecError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let questions: Vec<Question> = serde_json::from_str(&text)?;
    validate_questions(&questions)?;
    Ok(questions)
}
