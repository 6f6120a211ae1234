//! Binary visual-state recognizers built from ensembles of yes/no VQA
//! questions, with a genetic algorithm choosing which questions to ensemble.
//!
//! Pipeline: [`question_grid`] expands candidate questions,
//! [`acquisition`] gathers a complete answer matrix from a VQA oracle,
//! [`fitness`] scores question subsets, [`optimizer`] searches them, and
//! [`report`] renders held-out evaluation tables.

pub mod acquisition;
pub mod answer;
pub mod fitness;
pub mod optimizer;
pub mod question_grid;
pub mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator behind every seeded operation. ChaCha output is fixed
/// across platforms, so a seed pins results everywhere.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}
