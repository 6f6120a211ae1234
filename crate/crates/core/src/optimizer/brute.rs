use std::cmp::Ordering;

use rayon::prelude::*;

use super::{OptimizationResult, OptimizerError};
use crate::fitness::{fitness_of_indices, SelectionVector, TallyTable, Variant, Weights};

pub const DEFAULT_MAX_NQ: usize = 20;
const HARD_MAX_NQ: usize = 40;

/// Total order over (fitness, mask): higher fitness first, then fewer
/// questions, then the selection whose lowest differing question is set.
fn preferred(a: (f64, u64), b: (f64, u64)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| a.1.count_ones().cmp(&b.1.count_ones()))
        .then_with(|| {
            let diff = a.1 ^ b.1;
            let lowest = diff & diff.wrapping_neg();
            if diff == 0 {
                Ordering::Equal
            } else if a.1 & lowest != 0 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        })
}

/// Enumerates all `2^N_q - 1` non-empty selections and returns the best
/// under [`preferred`]'s deterministic tie-breaking.
pub fn brute_force(
    t: &TallyTable,
    variant: Variant,
    alpha: f64,
    beta: f64,
    max_nq: usize,
) -> Result<OptimizationResult, OptimizerError> {
    let n_q = t.n_questions();
    let limit = max_nq.min(HARD_MAX_NQ);
    if n_q > limit {
        return Err(OptimizerError::TooManyQuestions {
            n_questions: n_q,
            limit,
        });
    }
    let w = Weights { alpha, beta };
    let last = (1u64 << n_q) - 1;
    let best = (1..=last)
        .into_par_iter()
        .map_init(Vec::new, |selected, mask| {
            selected.clear();
            selected.extend((0..n_q).filter(|&i| mask >> i & 1 == 1));
            (fitness_of_indices(t, selected, variant, w), mask)
        })
        .reduce_with(|a, b| {
            if preferred(a, b) == Ordering::Greater {
                b
            } else {
                a
            }
        })
        .expect("at least one non-empty selection");
    Ok(OptimizationResult {
        best_selection: SelectionVector::from_mask(n_q, best.1),
        best_fitness: best.0,
        per_generation_best: Vec::new(),
        evaluations_count: last as usize,
    })
}
