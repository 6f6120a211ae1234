mod common;

use std::path::{Path, PathBuf};

use common::{path_str, qsel, qsel_ok};
use qsel::acquisition::ReplayEntry;
use qsel::optimizer::ResultFile;
use qsel::question_grid::Question;

fn gen_grid(dir: &Path, fixture: &str) -> PathBuf {
    let out = dir.join(format!("{fixture}.grid.json"));
    qsel_ok(&[
        "gen-questions",
        "--spec",
        path_str(&common::fixture(fixture)),
        "--out",
        path_str(&out),
    ]);
    out
}

/// Collects a synthetic matrix for `n` images; `uniform` fixes the rates.
fn synth_matrix(
    dir: &Path,
    grid: &Path,
    n: usize,
    name: &str,
    seed: &str,
    uniform: Option<(&str, &str)>,
) -> PathBuf {
    let manifest = common::write_manifest(dir, &common::manifest(n, name), &format!("{name}.json"));
    let profile = dir.join(format!("{name}.profile.json"));
    let mut args = vec![
        "synth-profile",
        "--seed",
        seed,
        "--grid",
        path_str(grid),
        "--out",
        path_str(&profile),
    ];
    if let Some((c, i)) = uniform {
        args.extend(["--p-correct", c, "--p-invalid", i]);
    }
    qsel_ok(&args);
    let out = dir.join(format!("{name}.jsonl"));
    qsel_ok(&[
        "collect",
        "--seed",
        seed,
        "--manifest",
        path_str(&manifest),
        "--grid",
        path_str(grid),
        "--oracle",
        "synth",
        "--profile",
        path_str(&profile),
        "--out",
        path_str(&out),
    ]);
    out
}

#[test]
fn gen_questions_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(dir.path(), "door");
    let questions: Vec<Question> =
        serde_json::from_str(&std::fs::read_to_string(grid).unwrap()).unwrap();
    assert_eq!(questions.len(), 16);
}

#[test]
fn gen_questions_rejects_bad_spec_and_cap() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"forms": [], "articles": ["a"], "states": [], "wordings": []}"#,
    )
    .unwrap();
    let out = dir.path().join("g.json");
    let (ok, _, stderr) = qsel(&[
        "gen-questions",
        "--spec",
        path_str(&bad),
        "--out",
        path_str(&out),
    ]);
    assert!(!ok);
    assert!(stderr.starts_with("error:"), "{stderr}");
    assert!(!out.exists());

    let door = common::fixture("door");
    let (ok, _, stderr) = qsel(&[
        "gen-questions",
        "--spec",
        path_str(&door),
        "--out",
        path_str(&out),
        "--cap",
        "8",
    ]);
    assert!(!ok);
    assert!(stderr.contains("grid exceeds cap"), "{stderr}");
}

#[test]
fn stochastic_commands_need_seed() {
    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(dir.path(), "door");
    let matrix = synth_matrix(dir.path(), &grid, 6, "t", "1", None);
    let out = dir.path().join("r.json");
    let (ok, _, stderr) = qsel(&[
        "optimize",
        "--matrix",
        path_str(&matrix),
        "--variant",
        "e-plus",
        "--out",
        path_str(&out),
    ]);
    assert!(!ok);
    assert!(stderr.contains("--seed"), "{stderr}");
    let (ok, _, _) = qsel(&[
        "synth-profile",
        "--grid",
        path_str(&grid),
        "--out",
        path_str(&out),
    ]);
    assert!(!ok);
}

#[test]
fn synth_collection_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(dir.path(), "elevator");
    let run = |sub: &str, seed: &str| {
        let d = dir.path().join(sub);
        std::fs::create_dir(&d).unwrap();
        std::fs::read(synth_matrix(&d, &grid, 10, "a", seed, None)).unwrap()
    };
    let first = run("one", "42");
    assert_eq!(first, run("two", "42"));
    assert_ne!(first, run("three", "43"));
}

#[test]
fn replay_collection() {
    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(dir.path(), "door");
    let manifest = common::manifest(2, "p");
    let manifest_path = common::write_manifest(dir.path(), &manifest, "m.json");
    let replay = dir.path().join("replay.jsonl");
    let mut lines = String::new();
    for e in &manifest.entries {
        for aug in 0..2 {
            for q in 0..16 {
                let entry = ReplayEntry {
                    image_id: e.image_id.clone(),
                    aug_index: aug,
                    question_id: q,
                    answer: "Yes.".into(),
                };
                lines.push_str(&serde_json::to_string(&entry).unwrap());
                lines.push('\n');
            }
        }
    }
    std::fs::write(&replay, lines).unwrap();
    let out = dir.path().join("out.jsonl");
    let stdout = qsel_ok(&[
        "collect",
        "--seed",
        "0",
        "--manifest",
        path_str(&manifest_path),
        "--grid",
        path_str(&grid),
        "--oracle",
        "replay",
        "--replay",
        path_str(&replay),
        "--n-aug",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert!(stdout.contains("64 records"), "{stdout}");
    let m = qsel::acquisition::load_matrix(&out).unwrap();
    assert_eq!(m.n_aug(), 2);
}

#[test]
fn optimize_all_variants_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(dir.path(), "door");
    let train = synth_matrix(dir.path(), &grid, 20, "train", "3", None);
    let test = synth_matrix(dir.path(), &grid, 20, "test", "4", None);
    let results = dir.path().join("results");
    qsel_ok(&[
        "optimize",
        "--seed",
        "5",
        "--matrix",
        path_str(&train),
        "--variant",
        "all",
        "--out",
        path_str(&results),
        "--population",
        "50",
        "--generations",
        "10",
    ]);
    let mut names: Vec<String> = std::fs::read_dir(&results)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "e-minus.json",
            "e-plus.json",
            "e-prime-minus.json",
            "e-prime-plus.json"
        ]
    );
    let file = ResultFile::load(results.join("e-plus.json")).unwrap();
    assert_eq!(file.n_questions, 16);
    assert_eq!(file.config.unwrap().population_size, 50);
    assert_eq!(file.per_generation_best.len(), 11);

    let report = dir.path().join("report.json");
    let table = qsel_ok(&[
        "evaluate",
        "--test-matrix",
        path_str(&test),
        "--result",
        path_str(&results.join("e-plus.json")),
        "--result",
        path_str(&results.join("e-minus.json")),
        "--baselines",
        "--out",
        path_str(&report),
    ]);
    let names: Vec<&str> = table
        .lines()
        .skip(1)
        .map(|l| l.split(" | ").next().unwrap().trim())
        .collect();
    assert_eq!(names, ["s_+", "s_-", "s_does", "s_is", "s_all"]);
    assert!(report.exists());
}

#[test]
fn all_correct_test_matrix_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(dir.path(), "door");
    let test = synth_matrix(dir.path(), &grid, 20, "perfect", "1", Some(("1", "0")));
    let report = dir.path().join("report.json");
    let table = qsel_ok(&[
        "evaluate",
        "--test-matrix",
        path_str(&test),
        "--baselines",
        "--out",
        path_str(&report),
    ]);
    let row = table.lines().find(|l| l.starts_with("s_all")).unwrap();
    assert!(row.ends_with("20 / 20 | 1.000 | 0.000 | 16 / 16"), "{row}");
}

#[test]
fn evaluate_rejects_mismatched_grid() {
    let dir = tempfile::tempdir().unwrap();
    let door = gen_grid(dir.path(), "door");
    let elevator = gen_grid(dir.path(), "elevator");
    let train = synth_matrix(dir.path(), &door, 6, "train", "1", None);
    let test = synth_matrix(dir.path(), &elevator, 6, "test", "1", None);
    let result = dir.path().join("r.json");
    qsel_ok(&[
        "optimize",
        "--seed",
        "1",
        "--matrix",
        path_str(&train),
        "--variant",
        "e-minus",
        "--out",
        path_str(&result),
        "--population",
        "20",
        "--generations",
        "2",
    ]);
    let report = dir.path().join("report.json");
    let (ok, stdout, stderr) = qsel(&[
        "evaluate",
        "--test-matrix",
        path_str(&test),
        "--result",
        path_str(&result),
        "--out",
        path_str(&report),
    ]);
    assert!(!ok);
    assert!(stdout.is_empty());
    assert!(stderr.contains("does not match"), "{stderr}");
    assert!(!report.exists());
}

/// Writes a one-form spec with `n` wordings and a single positive state.
fn wide_spec(dir: &Path, n: usize) -> PathBuf {
    let wordings: Vec<String> = (0..n).map(|i| format!("door{i}")).collect();
    let spec = serde_json::json!({
        "forms": [{"style": "is", "template": "Is {article} {wording} {state}?"}],
        "articles": ["the"],
        "states": [{"text": "open", "polarity": "positive"}],
        "wordings": wordings,
    });
    let path = dir.join(format!("wide{n}.json"));
    std::fs::write(&path, spec.to_string()).unwrap();
    let grid = dir.join(format!("wide{n}.grid.json"));
    qsel_ok(&[
        "gen-questions",
        "--spec",
        path_str(&path),
        "--out",
        path_str(&grid),
    ]);
    grid
}

#[test]
fn brute_force_limits() {
    let dir = tempfile::tempdir().unwrap();
    let grid = wide_spec(dir.path(), 25);
    let matrix = synth_matrix(dir.path(), &grid, 4, "wide", "2", None);
    let (ok, _, stderr) = qsel(&[
        "brute-force",
        "--matrix",
        path_str(&matrix),
        "--variant",
        "e-plus",
    ]);
    assert!(!ok);
    assert!(stderr.contains("exhaustive-search limit"), "{stderr}");

    let grid = wide_spec(dir.path(), 10);
    let matrix = synth_matrix(dir.path(), &grid, 4, "narrow", "2", None);
    let (ok, _, _) = qsel(&[
        "brute-force",
        "--matrix",
        path_str(&matrix),
        "--variant",
        "e-plus",
        "--max-nq",
        "8",
    ]);
    assert!(!ok);
    let out = dir.path().join("brute.json");
    qsel_ok(&[
        "brute-force",
        "--matrix",
        path_str(&matrix),
        "--variant",
        "e-minus",
        "--out",
        path_str(&out),
    ]);
    let file = ResultFile::load(&out).unwrap();
    assert_eq!(file.evaluations, 1023);
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let grid = gen_grid(dir.path(), "door");
    let train = synth_matrix(dir.path(), &grid, 8, "train", "1", None);
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"ga": {"population_size": 12, "generations": 3}}"#,
    )
    .unwrap();
    let out = dir.path().join("r.json");
    qsel_ok(&[
        "optimize",
        "--seed",
        "1",
        "--config",
        path_str(&config),
        "--matrix",
        path_str(&train),
        "--variant",
        "e-plus",
        "--out",
        path_str(&out),
    ]);
    let cfg = ResultFile::load(&out).unwrap().config.unwrap();
    assert_eq!((cfg.population_size, cfg.generations), (12, 3));

    std::fs::write(&config, r#"{"ga": {"populaton_size": 12}}"#).unwrap();
    let (ok, _, _) = qsel(&[
        "optimize",
        "--seed",
        "1",
        "--config",
        path_str(&config),
        "--matrix",
        path_str(&train),
        "--variant",
        "e-plus",
        "--out",
        path_str(&out),
    ]);
    assert!(!ok);
}
