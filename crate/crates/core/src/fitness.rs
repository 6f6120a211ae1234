//! Recognition statistics and evaluation functions for a question subset.
//!
//! For image `i` and selection `s`, the counts of the selected questions are
//! pooled over all augmentations:
//!
//! * `R^i  = C / (C + W)` (invalid replies ignored; `0` when `C + W = 0`)
//! * `R'^i = C / (C + W + I)` (invalid replies count against the image)
//!
//! An image is recognized when its rate is strictly above one half. The four
//! evaluation functions combine the recognized fraction, the mean rate and
//! the fraction of questions used:
//!
//! ```text
//! E+  = α·R_img  + R_ave  + β·R_q      E-  = α·R_img  + R_ave  - β·R_q
//! E'+ = α·R_img' + R_ave' + β·R_q      E'- = α·R_img' + R_ave' - β·R_q
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::AnswerMatrix;
use crate::answer::Outcome;

pub const DEFAULT_ALPHA: f64 = 100.0;
pub const DEFAULT_BETA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitnessError {
    #[error("selection is empty")]
    EmptySelection,
    #[error("selection has {actual} bits but the table has {expected} questions")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("unknown image {0:?}")]
    UnknownImage(String),
    #[error("invalid tally table: {0}")]
    InvalidTable(String),
}

/// Outcome counts for one (image, question) cell, summed over augmentations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: u32,
    pub wrong: u32,
    pub invalid: u32,
}

impl Tally {
    pub fn new(correct: u32, wrong: u32, invalid: u32) -> Self {
        Tally {
            correct,
            wrong,
            invalid,
        }
    }

    pub fn total(&self) -> u32 {
        self.correct + self.wrong + self.invalid
    }

    fn add(&mut self, other: Tally) {
        self.correct += other.correct;
        self.wrong += other.wrong;
        self.invalid += other.invalid;
    }
}

/// Per-(image, question) outcome counts; the optimizer's only input.
#[derive(Debug, Clone, PartialEq)]
pub struct TallyTable {
    image_ids: Vec<String>,
    labels: Vec<bool>,
    n_questions: usize,
    n_aug: usize,
    cells: Vec<Tally>,
}

impl TallyTable {
    /// `cells` is image-major: `cells[image * n_questions + question]`.
    pub fn from_cells(
        image_ids: Vec<String>,
        labels: Vec<bool>,
        n_questions: usize,
        n_aug: usize,
        cells: Vec<Tally>,
    ) -> Result<Self, FitnessError> {
        let bad = |m: String| Err(FitnessError::InvalidTable(m));
        if image_ids.is_empty() || n_questions == 0 || n_aug == 0 {
            return bad("table needs at least one image, question and augmentation".into());
        }
        if labels.len() != image_ids.len() {
            return bad(format!(
                "{} labels for {} images",
                labels.len(),
                image_ids.len()
            ));
        }
        if cells.len() != image_ids.len() * n_questions {
            return bad(format!(
                "{} cells for {} images x {n_questions} questions",
                cells.len(),
                image_ids.len()
            ));
        }
        if let Some(pos) = cells.iter().position(|c| c.total() as usize != n_aug) {
            return bad(format!(
                "cell {pos} sums to {} instead of n_aug={n_aug}",
                cells[pos].total()
            ));
        }
        Ok(TallyTable {
            image_ids,
            labels,
            n_questions,
            n_aug,
            cells,
        })
    }

    pub fn n_images(&self) -> usize {
        self.image_ids.len()
    }

    pub fn n_questions(&self) -> usize {
        self.n_questions
    }

    pub fn n_aug(&self) -> usize {
        self.n_aug
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn cell(&self, image: usize, question: usize) -> Tally {
        self.cells[image * self.n_questions + question]
    }

    fn row(&self, image: usize) -> &[Tally] {
        &self.cells[image * self.n_questions..(image + 1) * self.n_questions]
    }
}

/// Counts outcomes per (image, question) over all augmentations.
pub fn tally(matrix: &AnswerMatrix) -> TallyTable {
    let n_q = matrix.n_questions();
    let mut cells = vec![Tally::default(); matrix.n_images() * n_q];
    for image in 0..matrix.n_images() {
        for aug in 0..matrix.n_aug() {
            for q in 0..n_q {
                let cell = &mut cells[image * n_q + q];
                match matrix.record(image, aug, q).outcome {
                    Outcome::Correct => cell.correct += 1,
                    Outcome::Wrong => cell.wrong += 1,
                    Outcome::Invalid => cell.invalid += 1,
                }
            }
        }
    }
    let manifest = matrix.manifest();
    TallyTable::from_cells(
        manifest
            .entries
            .iter()
            .map(|e| e.image_id.clone())
            .collect(),
        manifest.labels(),
        n_q,
        matrix.n_aug(),
        cells,
    )
    .expect("a complete matrix yields a consistent table")
}

/// Binary vector over the question grid; set bits are ensembled.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelectionVector(Vec<bool>);

impl SelectionVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        SelectionVector(bits)
    }

    pub fn from_indices(n_questions: usize, selected: &[usize]) -> Self {
        let mut bits = vec![false; n_questions];
        for &i in selected {
            bits[i] = true;
        }
        SelectionVector(bits)
    }

    /// Bit `i` of `mask` selects question `i`.
    pub fn from_mask(n_questions: usize, mask: u64) -> Self {
        SelectionVector((0..n_questions).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn all(n_questions: usize) -> Self {
        SelectionVector(vec![true; n_questions])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn none_selected(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn selected(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }

    /// `"0110…"`, question 0 first.
    pub fn bitstring(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(SelectionVector)
    }
}

fn check_selection(t: &TallyTable, s: &SelectionVector) -> Result<Vec<usize>, FitnessError> {
    if s.len() != t.n_questions {
        return Err(FitnessError::LengthMismatch {
            expected: t.n_questions,
            actual: s.len(),
        });
    }
    let selected = s.selected();
    if selected.is_empty() {
        return Err(FitnessError::EmptySelection);
    }
    Ok(selected)
}

fn pooled(row: &[Tally], selected: &[usize]) -> Tally {
    let mut sum = Tally::default();
    for &q in selected {
        sum.add(row[q]);
    }
    sum
}

/// `(R^i, R'^i)` from pooled counts.
fn rates(sum: Tally) -> (f64, f64) {
    let c = f64::from(sum.correct);
    let valid = sum.correct + sum.wrong;
    let r = if valid == 0 {
        0.0
    } else {
        c / f64::from(valid)
    };
    let total = sum.total();
    let r_prime = if total == 0 {
        0.0
    } else {
        c / f64::from(total)
    };
    (r, r_prime)
}

pub fn image_rates(
    t: &TallyTable,
    s: &SelectionVector,
    image_id: &str,
) -> Result<(f64, f64), FitnessError> {
    let selected = check_selection(t, s)?;
    let image = t
        .image_ids
        .iter()
        .position(|id| id == image_id)
        .ok_or_else(|| FitnessError::UnknownImage(image_id.to_string()))?;
    Ok(rates(pooled(t.row(image), &selected)))
}

/// Recognition statistics for one selection over a whole table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub per_image_rates: Vec<f64>,
    pub per_image_rates_prime: Vec<f64>,
    pub n_img_correct: usize,
    pub n_img_correct_prime: usize,
    pub r_img: f64,
    pub r_ave: f64,
    pub r_img_prime: f64,
    pub r_ave_prime: f64,
    pub r_invalid: f64,
    pub r_q: f64,
    pub n_selected: usize,
    pub n_questions: usize,
    pub n_images: usize,
}

/// Everything an evaluation function needs, accumulated in one pass.
struct Summary {
    n_img: usize,
    n_img_prime: usize,
    sum_r: f64,
    sum_r_prime: f64,
}

fn summarize(
    t: &TallyTable,
    selected: &[usize],
    mut per_image: impl FnMut(f64, f64, Tally),
) -> Summary {
    let mut s = Summary {
        n_img: 0,
        n_img_prime: 0,
        sum_r: 0.0,
        sum_r_prime: 0.0,
    };
    for image in 0..t.n_images() {
        let sum = pooled(t.row(image), selected);
        let (r, r_prime) = rates(sum);
        if r > 0.5 {
            s.n_img += 1;
        }
        if r_prime > 0.5 {
            s.n_img_prime += 1;
        }
        s.sum_r += r;
        s.sum_r_prime += r_prime;
        per_image(r, r_prime, sum);
    }
    s
}

pub fn metrics(t: &TallyTable, s: &SelectionVector) -> Result<Metrics, FitnessError> {
    let selected = check_selection(t, s)?;
    let n = t.n_images();
    let mut per_image_rates = Vec::with_capacity(n);
    let mut per_image_rates_prime = Vec::with_capacity(n);
    let mut invalid = 0u64;
    let mut answers = 0u64;
    let summary = summarize(t, &selected, |r, rp, sum| {
        per_image_rates.push(r);
        per_image_rates_prime.push(rp);
        invalid += u64::from(sum.invalid);
        answers += u64::from(sum.total());
    });
    let nf = n as f64;
    Ok(Metrics {
        per_image_rates,
        per_image_rates_prime,
        n_img_correct: summary.n_img,
        n_img_correct_prime: summary.n_img_prime,
        r_img: summary.n_img as f64 / nf,
        r_ave: summary.sum_r / nf,
        r_img_prime: summary.n_img_prime as f64 / nf,
        r_ave_prime: summary.sum_r_prime / nf,
        r_invalid: invalid as f64 / answers as f64,
        r_q: selected.len() as f64 / t.n_questions() as f64,
        n_selected: selected.len(),
        n_questions: t.n_questions(),
        n_images: n,
    })
}

/// Which of the four evaluation functions to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "e-plus")]
    EPlus,
    #[serde(rename = "e-prime-plus")]
    EPrimePlus,
    #[serde(rename = "e-minus")]
    EMinus,
    #[serde(rename = "e-prime-minus")]
    EPrimeMinus,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::EPlus,
        Variant::EPrimePlus,
        Variant::EMinus,
        Variant::EPrimeMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::EPlus => "e-plus",
            Variant::EPrimePlus => "e-prime-plus",
            Variant::EMinus => "e-minus",
            Variant::EPrimeMinus => "e-prime-minus",
        }
    }

    /// Name of the selection this variant produces, as used in report rows.
    pub fn selection_name(self) -> &'static str {
        match self {
            Variant::EPlus => "s_+",
            Variant::EPrimePlus => "s'_+",
            Variant::EMinus => "s_-",
            Variant::EPrimeMinus => "s'_-",
        }
    }

    pub fn is_primed(self) -> bool {
        matches!(self, Variant::EPrimePlus | Variant::EPrimeMinus)
    }

    fn q_sign(self) -> f64 {
        match self {
            Variant::EPlus | Variant::EPrimePlus => 1.0,
            Variant::EMinus | Variant::EPrimeMinus => -1.0,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
        }
    }
}

fn combine(r_img: f64, r_ave: f64, r_q: f64, variant: Variant, w: Weights) -> f64 {
    w.alpha * r_img + r_ave + variant.q_sign() * w.beta * r_q
}

pub fn evaluate(m: &Metrics, variant: Variant, alpha: f64, beta: f64) -> f64 {
    let w = Weights { alpha, beta };
    if variant.is_primed() {
        combine(m.r_img_prime, m.r_ave_prime, m.r_q, variant, w)
    } else {
        combine(m.r_img, m.r_ave, m.r_q, variant, w)
    }
}

/// `evaluate(metrics(t, s), …)` without building per-image vectors; returns
/// exactly the same value.
pub fn fitness(
    t: &TallyTable,
    s: &SelectionVector,
    variant: Variant,
    w: Weights,
) -> Result<f64, FitnessError> {
    let selected = check_selection(t, s)?;
    Ok(fitness_of_indices(t, &selected, variant, w))
}

pub(crate) fn fitness_of_indices(
    t: &TallyTable,
    selected: &[usize],
    variant: Variant,
    w: Weights,
) -> f64 {
    let summary = summarize(t, selected, |_, _, _| {});
    let nf = t.n_images() as f64;
    let r_q = selected.len() as f64 / t.n_questions() as f64;
    if variant.is_primed() {
        combine(
            summary.n_img_prime as f64 / nf,
            summary.sum_r_prime / nf,
            r_q,
            variant,
            w,
        )
    } else {
        combine(
            summary.n_img as f64 / nf,
            summary.sum_r / nf,
            r_q,
            variant,
            w,
        )
    }
}

/// Whether one extra recognized image always outweighs any change in the
/// mean rate and question-fraction terms: `α / N_data > 1 + β`.
pub fn dominance_holds(n_images: usize, w: Weights) -> bool {
    w.alpha / n_images as f64 > 1.0 + w.beta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[(u32, u32, u32)]], n_aug: usize) -> TallyTable {
        let n_q = rows[0].len();
        let cells = rows
            .iter()
            .flat_map(|r| r.iter().map(|&(c, w, i)| Tally::new(c, w, i)))
            .collect();
        TallyTable::from_cells(
            (0..rows.len()).map(|i| format!("img{i}")).collect(),
            (0..rows.len()).map(|i| i % 2 == 0).collect(),
            n_q,
            n_aug,
            cells,
        )
        .unwrap()
    }

    #[test]
    fn image_rate_formulas() {
        let t = table(&[&[(3, 1, 2)]], 6);
        let s = SelectionVector::all(1);
        assert_eq!(image_rates(&t, &s, "img0").unwrap(), (0.75, 0.5));
    }

    #[test]
    fn rates_pool_selected_questions() {
        let t = table(&[&[(2, 0, 1), (1, 1, 1), (0, 3, 0)]], 3);
        let s = SelectionVector::from_indices(3, &[0, 1]);
        assert_eq!(image_rates(&t, &s, "img0").unwrap(), (0.75, 0.5));
    }

    #[test]
    fn all_correct_and_all_invalid() {
        let t = table(&[&[(6, 0, 0)], &[(0, 0, 6)]], 6);
        let s = SelectionVector::all(1);
        assert_eq!(image_rates(&t, &s, "img0").unwrap(), (1.0, 1.0));
        assert_eq!(image_rates(&t, &s, "img1").unwrap(), (0.0, 0.0));
        let m = metrics(&t, &s).unwrap();
        assert_eq!(m.n_img_correct, 1);
        assert_eq!(m.r_ave, 0.5);
        assert_eq!(m.r_invalid, 0.5);
    }

    #[test]
    fn unknown_image_and_empty_selection() {
        let t = table(&[&[(1, 0, 0), (1, 0, 0)]], 1);
        assert_eq!(
            image_rates(&t, &SelectionVector::all(2), "nope"),
            Err(FitnessError::UnknownImage("nope".into()))
        );
        assert_eq!(
            metrics(&t, &SelectionVector::from_bits(vec![false, false])),
            Err(FitnessError::EmptySelection)
        );
        assert!(matches!(
            metrics(&t, &SelectionVector::all(3)),
            Err(FitnessError::LengthMismatch {
                expected: 2,
                actual: 3
            })
        ));
    }

    #[test]
    fn two_images_one_of_two_questions() {
        let t = table(&[&[(6, 0, 0), (6, 0, 0)], &[(6, 0, 0), (6, 0, 0)]], 6);
        let m = metrics(&t, &SelectionVector::from_indices(2, &[1])).unwrap();
        assert_eq!(m.n_img_correct, 2);
        assert_eq!(m.r_ave, 1.0);
        assert_eq!(m.r_invalid, 0.0);
        assert_eq!(m.r_q, 0.5);
        assert_eq!(m.n_selected, 1);
    }

    #[test]
    fn exact_half_is_not_recognized() {
        let t = table(&[&[(2, 2, 0)], &[(3, 1, 0)], &[(1, 1, 2)]], 4);
        let m = metrics(&t, &SelectionVector::all(1)).unwrap();
        assert_eq!(m.per_image_rates, vec![0.5, 0.75, 0.5]);
        assert_eq!(m.per_image_rates_prime, vec![0.5, 0.75, 0.25]);
        assert_eq!(m.n_img_correct, 1);
        assert_eq!(m.n_img_correct_prime, 1);
    }

    #[test]
    fn evaluation_arithmetic() {
        let m = Metrics {
            per_image_rates: vec![],
            per_image_rates_prime: vec![],
            n_img_correct: 0,
            n_img_correct_prime: 0,
            r_img: 1.0,
            r_ave: 1.0,
            r_img_prime: 0.5,
            r_ave_prime: 0.25,
            r_invalid: 0.0,
            r_q: 0.5,
            n_selected: 0,
            n_questions: 0,
            n_images: 0,
        };
        assert!((evaluate(&m, Variant::EPlus, 100.0, 0.1) - 101.05).abs() < 1e-12);
        assert!((evaluate(&m, Variant::EMinus, 100.0, 0.1) - 100.95).abs() < 1e-12);
        assert!((evaluate(&m, Variant::EPrimePlus, 100.0, 0.1) - 50.3).abs() < 1e-12);
        assert!((evaluate(&m, Variant::EPrimeMinus, 100.0, 0.1) - 50.2).abs() < 1e-12);
    }

    #[test]
    fn fast_fitness_matches_metrics_path() {
        let t = table(
            &[
                &[(2, 1, 0), (0, 1, 2)],
                &[(1, 1, 1), (3, 0, 0)],
                &[(0, 0, 3), (1, 2, 0)],
            ],
            3,
        );
        for mask in 1..4u64 {
            let s = SelectionVector::from_mask(2, mask);
            let m = metrics(&t, &s).unwrap();
            for v in Variant::ALL {
                let w = Weights::default();
                assert_eq!(
                    fitness(&t, &s, v, w).unwrap(),
                    evaluate(&m, v, w.alpha, w.beta)
                );
            }
        }
    }

    #[test]
    fn bitstrings() {
        let s = SelectionVector::from_mask(5, 0b10110);
        assert_eq!(s.bitstring(), "01101");
        assert_eq!(s.selected(), vec![1, 2, 4]);
        assert_eq!(SelectionVector::from_bitstring("01101"), Some(s));
        assert_eq!(SelectionVector::from_bitstring("01x"), None);
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(
                serde_json::to_string(&v).unwrap(),
                format!("\"{}\"", v.name())
            );
        }
    }

    #[test]
    fn dominance_guard() {
        assert!(dominance_holds(20, Weights::default()));
        assert!(dominance_holds(90, Weights::default()));
        assert!(!dominance_holds(91, Weights::default()));
    }

    #[test]
    fn inconsistent_cells_rejected() {
        let err = TallyTable::from_cells(
            vec!["a".into()],
            vec![true],
            1,
            6,
            vec![Tally::new(1, 1, 1)],
        );
        assert!(err.is_err());
    }
}
