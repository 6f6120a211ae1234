#![allow(dead_code)]

use std::path::{Path, PathBuf};

use qsel::acquisition::{
    synth_matrix, AnswerMatrix, AnswerRecord, DatasetManifest, FloatImage, ManifestEntry,
    SyntheticProfile,
};
use qsel::answer::{classify, expected_answer, normalize_answer, Outcome};
use qsel::fitness::{tally, TallyTable};
use qsel::question_grid::{expand_grid, load_spec, GridCoords, Polarity, Question, Style};
use qsel::seeded_rng;
use rand::RngExt;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/questions")
        .join(format!("{name}.json"))
}

pub fn fixture_grid(name: &str) -> Vec<Question> {
    expand_grid(&load_spec(fixture(name)).unwrap(), 64).unwrap()
}

/// `n` questions alternating style and polarity.
pub fn plain_grid(n: usize) -> Vec<Question> {
    (0..n)
        .map(|id| Question {
            id,
            text: format!("Is question {id} true?"),
            style: if id % 2 == 0 { Style::Is } else { Style::Does },
            polarity: if id % 3 == 2 {
                Polarity::Negated
            } else {
                Polarity::Positive
            },
            coords: GridCoords {
                form: id % 2,
                article: id,
                state: id % 3,
                wording: 0,
            },
        })
        .collect()
}

/// `n` images, the first half labeled true.
pub fn manifest(n: usize, prefix: &str) -> DatasetManifest {
    DatasetManifest {
        state_name: "door_open".into(),
        entries: (0..n)
            .map(|i| ManifestEntry {
                image_id: format!("{prefix}{i:02}"),
                path: format!("{prefix}{i:02}.png").into(),
                label: i < n / 2,
            })
            .collect(),
    }
}

/// Writes small random-pixel PNGs for every manifest entry under `dir`.
pub fn write_images(dir: &Path, manifest: &DatasetManifest, seed: u64) {
    let mut rng = seeded_rng(seed);
    for e in &manifest.entries {
        let data = (0..6 * 5 * 3)
            .map(|_| rng.random_range(0.0f32..=1.0))
            .collect();
        let img = FloatImage::new(6, 5, data).unwrap();
        std::fs::write(dir.join(&e.path), img.to_png()).unwrap();
    }
}

pub fn write_manifest(dir: &Path, manifest: &DatasetManifest, name: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(manifest).unwrap()).unwrap();
    path
}

/// Per-question answering behavior that depends on the image label, so some
/// questions recognize one state well and the other poorly.
#[derive(Debug, Clone, Copy)]
pub struct LabelRates {
    pub p_correct_true: f64,
    pub p_correct_false: f64,
    pub p_invalid: f64,
}

pub fn random_rates(seed: u64, n_q: usize) -> Vec<LabelRates> {
    let mut rng = seeded_rng(seed ^ 0x5eed);
    (0..n_q)
        .map(|_| {
            let p_invalid = rng.random_range(0.0..=0.35);
            let scale = 1.0 - p_invalid;
            LabelRates {
                p_correct_true: scale * rng.random_range(0.05..=1.0),
                p_correct_false: scale * rng.random_range(0.05..=1.0),
                p_invalid,
            }
        })
        .collect()
}

pub const INVALID_REPLIES: [&str; 3] = ["the door", "kitchen", "i don't know"];

/// Raw answer for a drawn outcome; capitalization and punctuation vary.
pub fn raw_for(outcome: Outcome, polarity: Polarity, label: bool, salt: usize) -> String {
    let expected = expected_answer(polarity, label);
    let base = match outcome {
        Outcome::Correct => expected.as_str(),
        Outcome::Wrong => expected.flipped().as_str(),
        Outcome::Invalid => INVALID_REPLIES[salt % INVALID_REPLIES.len()],
    };
    match salt % 3 {
        0 => base.to_string(),
        1 => format!("{}{}.", base[..1].to_uppercase(), &base[1..]),
        _ => format!(" {base}! "),
    }
}

/// Label-dependent synthetic matrix built record by record.
pub fn label_dependent_matrix(
    seed: u64,
    n_images: usize,
    n_q: usize,
    n_aug: usize,
) -> AnswerMatrix {
    let questions = plain_grid(n_q);
    let manifest = manifest(n_images, "img");
    let rates = random_rates(seed, n_q);
    let mut rng = seeded_rng(seed);
    let mut records = Vec::new();
    for e in &manifest.entries {
        for aug_index in 0..n_aug {
            for q in &questions {
                let r = rates[q.id];
                let p_correct = if e.label {
                    r.p_correct_true
                } else {
                    r.p_correct_false
                };
                let u: f64 = rng.random();
                let drawn = if u < p_correct {
                    Outcome::Correct
                } else if u < p_correct + r.p_invalid {
                    Outcome::Invalid
                } else {
                    Outcome::Wrong
                };
                let raw = raw_for(drawn, q.polarity, e.label, aug_index + q.id);
                let outcome = classify(normalize_answer(&raw), q.polarity, e.label);
                assert_eq!(outcome, drawn);
                records.push(AnswerRecord {
                    image_id: e.image_id.clone(),
                    aug_index,
                    question_id: q.id,
                    raw_answer: raw,
                    outcome,
                });
            }
        }
    }
    AnswerMatrix::new(questions, manifest, n_aug, records).unwrap()
}

pub fn label_dependent_table(seed: u64, n_images: usize, n_q: usize, n_aug: usize) -> TallyTable {
    tally(&label_dependent_matrix(seed, n_images, n_q, n_aug))
}

/// Matrix from the library's synthetic oracle with random per-question rates.
pub fn synthetic_matrix(seed: u64, n_images: usize, n_q: usize, n_aug: usize) -> AnswerMatrix {
    let questions = plain_grid(n_q);
    let profile = SyntheticProfile::random(
        n_q,
        (0.2, 0.95),
        0.4,
        seed,
        &mut seeded_rng(seed.wrapping_add(1)),
    );
    synth_matrix(&manifest(n_images, "img"), &questions, &profile, n_aug).unwrap()
}

/// Statistics recomputed straight from outcome lists, without the tally table.
#[derive(Debug, Clone, PartialEq)]
pub struct Recount {
    pub per_image: Vec<f64>,
    pub per_image_prime: Vec<f64>,
    pub n_img: usize,
    pub n_img_prime: usize,
    pub r_ave: f64,
    pub r_ave_prime: f64,
    pub r_invalid: f64,
    pub r_q: f64,
    pub n_selected: usize,
}

/// `outcomes_by_image[i]` lists `(question_id, outcome)` for every answer
/// given about image `i` (all augmentations).
pub fn recount(
    outcomes_by_image: &[Vec<(usize, Outcome)>],
    n_questions: usize,
    selected: &[bool],
) -> Recount {
    let mut per_image = Vec::new();
    let mut per_image_prime = Vec::new();
    let (mut invalid_total, mut answer_total) = (0usize, 0usize);
    for answers in outcomes_by_image {
        let picked: Vec<Outcome> = answers
            .iter()
            .filter(|(q, _)| selected[*q])
            .map(|&(_, o)| o)
            .collect();
        let c = picked.iter().filter(|&&o| o == Outcome::Correct).count();
        let w = picked.iter().filter(|&&o| o == Outcome::Wrong).count();
        let i = picked.len() - c - w;
        per_image.push(if c + w == 0 {
            0.0
        } else {
            c as f64 / (c + w) as f64
        });
        per_image_prime.push(if picked.is_empty() {
            0.0
        } else {
            c as f64 / picked.len() as f64
        });
        invalid_total += i;
        answer_total += picked.len();
    }
    let n = outcomes_by_image.len() as f64;
    let n_selected = selected.iter().filter(|&&b| b).count();
    Recount {
        n_img: per_image.iter().filter(|&&r| r > 0.5).count(),
        n_img_prime: per_image_prime.iter().filter(|&&r| r > 0.5).count(),
        r_ave: per_image.iter().sum::<f64>() / n,
        r_ave_prime: per_image_prime.iter().sum::<f64>() / n,
        r_invalid: invalid_total as f64 / answer_total as f64,
        r_q: n_selected as f64 / n_questions as f64,
        n_selected,
        per_image,
        per_image_prime,
    }
}

/// Groups a matrix's records by image, in manifest order.
pub fn outcomes_by_image(m: &AnswerMatrix) -> Vec<Vec<(usize, Outcome)>> {
    m.manifest()
        .entries
        .iter()
        .map(|e| {
            m.records()
                .iter()
                .filter(|r| r.image_id == e.image_id)
                .map(|r| (r.question_id, r.outcome))
                .collect()
        })
        .collect()
}

pub fn random_selection(rng: &mut impl rand::Rng, n_q: usize) -> Vec<bool> {
    loop {
        let bits: Vec<bool> = (0..n_q).map(|_| rng.random_bool(0.5)).collect();
        if bits.iter().any(|&b| b) {
            return bits;
        }
    }
}

/// Runs the `qsel` binary; returns (success, stdout, stderr).
pub fn qsel(args: &[&str]) -> (bool, String, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_qsel"))
        .args(args)
        .output()
        .expect("spawn qsel");
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Like [`qsel`] but panics with the captured stderr on failure.
pub fn qsel_ok(args: &[&str]) -> String {
    let (ok, stdout, stderr) = qsel(args);
    assert!(ok, "qsel {args:?} failed:\n{stderr}");
    stdout
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Independent classification of a raw reply: `Some(true)` for yes,
/// `Some(false)` for no, `None` for anything else.
pub fn reply_is_yes(raw: &str) -> Option<bool> {
    let mut s = raw.trim().to_lowercase();
    while s.ends_with(['.', ',', '!']) || s.ends_with(char::is_whitespace) {
        s.pop();
    }
    match s.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

pub fn recount_outcome(raw: &str, polarity: Polarity, label: bool) -> Outcome {
    let truth_is_yes = label == (polarity == Polarity::Positive);
    match reply_is_yes(raw) {
        None => Outcome::Invalid,
        Some(yes) if yes == truth_is_yes => Outcome::Correct,
        Some(_) => Outcome::Wrong,
    }
}

/// Groups raw answers by image (manifest order), classifying each one
/// without the library's normalizer.
pub fn outcomes_from_raw(
    manifest: &DatasetManifest,
    questions: &[Question],
    records: impl IntoIterator<Item = (String, usize, String)>,
) -> Vec<Vec<(usize, Outcome)>> {
    let mut by_image = vec![Vec::new(); manifest.entries.len()];
    for (image_id, question_id, raw) in records {
        let i = manifest
            .entries
            .iter()
            .position(|e| e.image_id == image_id)
            .expect("known image");
        let label = manifest.entries[i].label;
        let outcome = recount_outcome(&raw, questions[question_id].polarity, label);
        by_image[i].push((question_id, outcome));
    }
    by_image
}
