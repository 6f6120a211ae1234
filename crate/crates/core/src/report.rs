//! Held-out evaluation tables.
//!
//! Every number in a row comes straight from [`metrics`] on the test table;
//! formatting only rounds for display.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::fitness::{metrics, FitnessError, SelectionVector, TallyTable};
use crate::optimizer::{baseline_selection, Baseline};
use crate::question_grid::Question;

pub const TABLE_HEADER: [&str; 5] = [
    "selection",
    "N_img_correct",
    "R_ave_correct",
    "R_invalid",
    "N_s_q",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub selection_name: String,
    pub bitstring: String,
    pub n_img_correct: usize,
    pub n_images: usize,
    pub r_ave_correct: f64,
    pub r_invalid: f64,
    pub n_selected: usize,
    pub n_questions: usize,
}

impl EvaluationRow {
    /// Unprimed statistics of `selection` on the test table.
    pub fn compute(
        name: &str,
        table: &TallyTable,
        selection: &SelectionVector,
    ) -> Result<Self, FitnessError> {
        let m = metrics(table, selection)?;
        Ok(EvaluationRow {
            selection_name: name.to_string(),
            bitstring: selection.bitstring(),
            n_img_correct: m.n_img_correct,
            n_images: m.n_images,
            r_ave_correct: m.r_ave,
            r_invalid: m.r_invalid,
            n_selected: m.n_selected,
            n_questions: m.n_questions,
        })
    }

    /// `["20 / 20", "1.000", "0.000", "16 / 16"]`
    pub fn cells(&self) -> [String; 4] {
        [
            format!("{} / {}", self.n_img_correct, self.n_images),
            format!("{:.3}", self.r_ave_correct),
            format!("{:.3}", self.r_invalid),
            format!("{} / {}", self.n_selected, self.n_questions),
        ]
    }

    /// Cells joined with `" | "`, without the selection name.
    pub fn cells_line(&self) -> String {
        self.cells().join(" | ")
    }
}

/// Optimized rows in the given order, then `s_does`, `s_is`, `s_all`.
/// A style baseline is skipped when the grid has no question of that style.
pub fn evaluation_rows(
    table: &TallyTable,
    questions: &[Question],
    optimized: &[(String, SelectionVector)],
    include_baselines: bool,
) -> Result<Vec<EvaluationRow>, FitnessError> {
    let mut rows = Vec::new();
    for (name, selection) in optimized {
        rows.push(EvaluationRow::compute(name, table, selection)?);
    }
    if include_baselines {
        for kind in [Baseline::Does, Baseline::Is, Baseline::All] {
            match baseline_selection(questions, kind) {
                Ok(s) => rows.push(EvaluationRow::compute(kind.selection_name(), table, &s)?),
                Err(e) => log::warn!("skipping {}: {e}", kind.selection_name()),
            }
        }
    }
    Ok(rows)
}

pub fn render_table(rows: &[EvaluationRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.selection_name.chars().count())
        .chain([TABLE_HEADER[0].len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$} | {}",
        TABLE_HEADER[0],
        TABLE_HEADER[1..].join(" | ")
    );
    for row in rows {
        let _ = writeln!(out, "{:<width$} | {}", row.selection_name, row.cells_line());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub question_hash: String,
    pub state_name: String,
    pub n_test_images: usize,
    pub rows: Vec<EvaluationRow>,
}
