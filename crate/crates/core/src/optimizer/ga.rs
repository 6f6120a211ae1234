//! Generational GA over question-selection bitstrings.
//!
//! Each generation: tournament selection refills the population, adjacent
//! pairs undergo two-point crossover, then individuals undergo bit-flip
//! mutation. Only changed individuals are re-evaluated.

use rand::{Rng, RngExt};
use rayon::prelude::*;

use super::{GaConfig, OptimizationResult, OptimizerError};
use crate::fitness::{dominance_holds, fitness_of_indices, SelectionVector, TallyTable, Weights};
use crate::seeded_rng;

/// Fitness assigned to the empty selection.
pub const EMPTY_FITNESS: f64 = f64::NEG_INFINITY;

#[derive(Clone)]
struct Individual {
    bits: Vec<bool>,
    fitness: Option<f64>,
}

fn score(t: &TallyTable, bits: &[bool], cfg: &GaConfig) -> f64 {
    let selected: Vec<usize> = bits
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i)
        .collect();
    if selected.is_empty() {
        return EMPTY_FITNESS;
    }
    let w = Weights {
        alpha: cfg.alpha,
        beta: cfg.beta,
    };
    fitness_of_indices(t, &selected, cfg.variant, w)
}

/// Scores every individual lacking a fitness value; returns how many.
fn evaluate_pending(t: &TallyTable, pop: &mut [Individual], cfg: &GaConfig) -> usize {
    pop.par_iter_mut()
        .filter(|ind| ind.fitness.is_none())
        .map(|ind| {
            ind.fitness = Some(score(t, &ind.bits, cfg));
        })
        .count()
}

fn tournament<'a, R: Rng + ?Sized>(
    pop: &'a [Individual],
    size: usize,
    rng: &mut R,
) -> &'a Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let challenger = &pop[rng.random_range(0..pop.len())];
        if challenger.fitness > best.fitness {
            best = challenger;
        }
    }
    best
}

/// Swaps `a[lo..hi]` with `b[lo..hi]` for two distinct cut points drawn in
/// `1..len`.
pub(crate) fn two_point_crossover<R: Rng + ?Sized>(a: &mut [bool], b: &mut [bool], rng: &mut R) {
    let len = a.len().min(b.len());
    if len < 2 {
        return;
    }
    let first = rng.random_range(1..=len);
    let mut second = rng.random_range(1..len);
    let (lo, hi) = if second >= first {
        second += 1;
        (first, second)
    } else {
        (second, first)
    };
    a[lo..hi].swap_with_slice(&mut b[lo..hi]);
}

pub(crate) fn flip_bits<R: Rng + ?Sized>(bits: &mut [bool], per_bit: f64, rng: &mut R) {
    for bit in bits.iter_mut() {
        if rng.random_bool(per_bit) {
            *bit = !*bit;
        }
    }
}

pub fn ga_optimize(t: &TallyTable, cfg: &GaConfig) -> Result<OptimizationResult, OptimizerError> {
    cfg.validate()?;
    let n_q = t.n_questions();
    if !dominance_holds(
        t.n_images(),
        Weights {
            alpha: cfg.alpha,
            beta: cfg.beta,
        },
    ) {
        log::warn!(
            "alpha={} no longer dominates for {} images; recognized-image count is not strictly prioritized",
            cfg.alpha,
            t.n_images()
        );
    }
    let mut rng = seeded_rng(cfg.seed);

    let mut pop: Vec<Individual> = (0..cfg.population_size)
        .map(|_| Individual {
            bits: (0..n_q).map(|_| rng.random_bool(0.5)).collect(),
            fitness: None,
        })
        .collect();
    let mut evaluations = evaluate_pending(t, &mut pop, cfg);

    let mut best = pop[0].clone();
    let mut history = Vec::with_capacity(cfg.generations + 1);
    let track = |pop: &[Individual], best: &mut Individual, history: &mut Vec<f64>| {
        for ind in pop {
            if ind.fitness > best.fitness {
                *best = ind.clone();
            }
        }
        history.push(best.fitness.expect("evaluated"));
    };
    track(&pop, &mut best, &mut history);

    for _ in 0..cfg.generations {
        let mut offspring: Vec<Individual> = (0..pop.len())
            .map(|_| tournament(&pop, cfg.tournament_size, &mut rng).clone())
            .collect();
        for pair in offspring.chunks_exact_mut(2) {
            if rng.random_bool(cfg.crossover_prob) {
                let (left, right) = pair.split_at_mut(1);
                two_point_crossover(&mut left[0].bits, &mut right[0].bits, &mut rng);
                left[0].fitness = None;
                right[0].fitness = None;
            }
        }
        for ind in offspring.iter_mut() {
            if rng.random_bool(cfg.mutation_prob) {
                flip_bits(&mut ind.bits, cfg.per_bit_flip_prob, &mut rng);
                ind.fitness = None;
            }
        }
        evaluations += evaluate_pending(t, &mut offspring, cfg);
        pop = offspring;
        track(&pop, &mut best, &mut history);
    }

    let mut best_selection = SelectionVector::from_bits(best.bits);
    let mut best_fitness = best.fitness.expect("evaluated");
    if best_selection.none_selected() {
        // Every individual ever seen was empty; fall back to the best singleton.
        let (q, f) = (0..n_q)
            .map(|q| {
                (
                    q,
                    score(t, SelectionVector::from_indices(n_q, &[q]).bits(), cfg),
                )
            })
            .fold(
                (0, EMPTY_FITNESS),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
        evaluations += n_q;
        best_selection = SelectionVector::from_indices(n_q, &[q]);
        best_fitness = f;
        if let Some(last) = history.last_mut() {
            *last = f;
        }
    }
    Ok(OptimizationResult {
        best_selection,
        best_fitness,
        per_generation_best: history,
        evaluations_count: evaluations,
    })
}
