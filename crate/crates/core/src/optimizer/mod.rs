//! Searching the non-empty question subsets.

mod brute;
mod ga;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use brute::{brute_force, DEFAULT_MAX_NQ};
pub use ga::{ga_optimize, EMPTY_FITNESS};

use crate::fitness::{FitnessError, SelectionVector, Variant, DEFAULT_ALPHA, DEFAULT_BETA};
use crate::question_grid::{Question, Style};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),
    #[error("{n_questions} questions exceed the exhaustive-search limit of {limit}; raise --max-nq (runtime doubles per question)")]
    TooManyQuestions { n_questions: usize, limit: usize },
    #[error("no question of style {0:?} in the grid")]
    MissingStyle(Style),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error("{path}: {message}")]
    ResultFile { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Probability that an individual is mutated at all.
    pub mutation_prob: f64,
    /// Flip probability of each bit of a mutated individual.
    pub per_bit_flip_prob: f64,
    pub tournament_size: usize,
    pub seed: u64,
    pub variant: Variant,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 1000,
            generations: 200,
            crossover_prob: 0.5,
            mutation_prob: 0.2,
            per_bit_flip_prob: 0.05,
            tournament_size: 5,
            seed: 0,
            variant: Variant::EPlus,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: String| Err(OptimizerError::InvalidConfig(m));
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
            ("per_bit_flip_prob", self.per_bit_flip_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name}={p} is not a probability"));
            }
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be at least 1".into());
        }
        if self.population_size < self.tournament_size {
            return bad(format!(
                "population_size {} is smaller than tournament_size {}",
                self.population_size, self.tournament_size
            ));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return bad("alpha and beta must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_selection: SelectionVector,
    pub best_fitness: f64,
    /// Best-ever fitness after each generation, initial population first.
    pub per_generation_best: Vec<f64>,
    pub evaluations_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    Does,
    Is,
    All,
}

impl Baseline {
    pub fn selection_name(self) -> &'static str {
        match self {
            Baseline::Does => "s_does",
            Baseline::Is => "s_is",
            Baseline::All => "s_all",
        }
    }
}

/// Fixed comparison selections: every question of one form style, or all.
pub fn baseline_selection(
    questions: &[Question],
    kind: Baseline,
) -> Result<SelectionVector, OptimizerError> {
    let style = match kind {
        Baseline::All => return Ok(SelectionVector::all(questions.len())),
        Baseline::Does => Style::Does,
        Baseline::Is => Style::Is,
    };
    let bits: Vec<bool> = questions.iter().map(|q| q.style == style).collect();
    if !bits.iter().any(|&b| b) {
        return Err(OptimizerError::MissingStyle(style));
    }
    Ok(SelectionVector::from_bits(bits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    Ga,
    BruteForce,
}

/// Persisted optimization output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub method: SearchMethod,
    pub variant: Variant,
    pub selected_question_ids: Vec<usize>,
    pub bitstring: String,
    pub fitness: f64,
    pub alpha: f64,
    pub beta: f64,
    /// GA settings; absent for exhaustive search.
    pub config: Option<GaConfig>,
    pub per_generation_best: Vec<f64>,
    pub evaluations: usize,
    pub question_hash: String,
    pub n_questions: usize,
    pub n_train_images: usize,
}

impl ResultFile {
    pub fn selection(&self) -> Result<SelectionVector, OptimizerError> {
        let bad = |message: String| OptimizerError::ResultFile {
            path: String::new(),
            message,
        };
        let s = SelectionVector::from_bitstring(&self.bitstring)
            .ok_or_else(|| bad(format!("malformed bitstring {:?}", self.bitstring)))?;
        if s.len() != self.n_questions {
            return Err(bad(format!(
                "bitstring has {} bits but n_questions is {}",
                s.len(),
                self.n_questions
            )));
        }
        if s.selected() != self.selected_question_ids {
            return Err(bad("selected_question_ids disagree with bitstring".into()));
        }
        if s.none_selected() {
            return Err(bad("empty selection".into()));
        }
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), OptimizerError> {
        let path = path.as_ref();
        let err = |message: String| OptimizerError::ResultFile {
            path: path.display().to_string(),
            message,
        };
        let mut text = serde_json::to_string_pretty(self).map_err(|e| err(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| err(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OptimizerError> {
        let path = path.as_ref();
        let err = |message: String| OptimizerError::ResultFile {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let file: ResultFile = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        file.selection().map_err(|e| err(e.to_string()))?;
        Ok(file)
    }
}
