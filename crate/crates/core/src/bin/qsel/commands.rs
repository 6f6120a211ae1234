use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};

use qsel::acquisition::mock::{MockVqaServer, ReplayResponder};
use qsel::acquisition::oracle::ENDPOINT_ENV;
use qsel::acquisition::{
    collect_answers, load_manifest, load_matrix, save_matrix, synth_matrix, AnswerOracle,
    HttpOracle, ReplayOracle, SyntheticProfile,
};
use qsel::fitness::{tally, Variant};
use qsel::optimizer::{brute_force, ga_optimize, OptimizationResult, ResultFile, SearchMethod};
use qsel::question_grid::{expand_grid, grid_hash, load_grid, load_spec};
use qsel::report::{evaluation_rows, render_table, EvaluationReport};
use qsel::seeded_rng;

use crate::config::RunConfig;
use crate::{Cli, CollectArgs, Command, OptimizeArgs, OracleKind, SynthProfileArgs};

fn require_seed(seed: Option<u64>, command: &str) -> Result<u64> {
    seed.with_context(|| {
        format!("`{command}` is stochastic and needs an explicit --seed for reproducibility")
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn run(cli: Cli) -> Result<()> {
    let config = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenQuestions { spec, out, cap } => {
            let spec = load_spec(&spec)?;
            let grid = expand_grid(&spec, cap.unwrap_or(config.grid_cap))?;
            write_json(&out, &grid)?;
            println!("wrote {} questions to {}", grid.len(), out.display());
        }
        Command::Collect(args) => collect(args, cli.seed, &config)?,
        Command::Optimize(args) => optimize(args, cli.seed, &config)?,
        Command::BruteForce {
            matrix,
            variant,
            max_nq,
            alpha,
            beta,
            out,
        } => {
            let m = load_matrix(&matrix)?;
            let t = tally(&m);
            let alpha = alpha.unwrap_or(config.ga.alpha);
            let beta = beta.unwrap_or(config.ga.beta);
            let variants = variant.variants();
            ensure!(
                variants.len() == 1 || out.is_none(),
                "--out takes a single variant for brute-force"
            );
            for v in variants {
                let r = brute_force(&t, v, alpha, beta, max_nq.unwrap_or(config.max_nq))?;
                println!(
                    "{} optimum: fitness {:.6} selecting {:?} ({})",
                    v,
                    r.best_fitness,
                    r.best_selection.selected(),
                    r.best_selection.bitstring()
                );
                if let Some(out) = &out {
                    let file = result_file(&m, &r, v, SearchMethod::BruteForce, None, alpha, beta);
                    file.save(out)?;
                }
            }
        }
        Command::Evaluate {
            test_matrix,
            results,
            baselines,
            out,
        } => evaluate(&test_matrix, &results, baselines, &out)?,
        Command::SynthProfile(args) => synth_profile(args, cli.seed)?,
        Command::MockServer {
            manifest,
            grid,
            replay,
            n_aug,
            bind,
        } => {
            let seed = require_seed(cli.seed, "mock-server")?;
            let manifest_data = load_manifest(&manifest)?;
            let questions = load_grid(&grid)?;
            let responder = ReplayResponder::new(
                &manifest_data,
                &parent_dir(&manifest),
                &questions,
                n_aug.unwrap_or(config.n_aug),
                seed,
                ReplayOracle::load(&replay)?,
            )?;
            let server = MockVqaServer::replaying(&bind, responder)?;
            println!("serving POST {}/vqa", server.endpoint());
            server.join();
        }
    }
    Ok(())
}

fn collect(args: CollectArgs, seed: Option<u64>, config: &RunConfig) -> Result<()> {
    let seed = require_seed(seed, "collect")?;
    let manifest = load_manifest(&args.manifest)?;
    let questions = load_grid(&args.grid)?;
    let n_aug = args.n_aug.unwrap_or(config.n_aug);
    let mut options = config.collect_options();
    if let Some(n) = args.in_flight {
        options.max_in_flight = n;
    }

    let matrix = match args.oracle {
        OracleKind::Synth => {
            let path = args.profile.context("--oracle synth needs --profile")?;
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let mut profile: SyntheticProfile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            profile.seed = seed;
            synth_matrix(&manifest, &questions, &profile, n_aug)?
        }
        kind => {
            let oracle: Box<dyn AnswerOracle> = match kind {
                OracleKind::Replay => {
                    let path = args.replay.context("--oracle replay needs --replay")?;
                    Box::new(ReplayOracle::load(&path)?)
                }
                _ => {
                    let endpoint = match args.endpoint {
                        Some(e) => e,
                        None => std::env::var(ENDPOINT_ENV).with_context(|| {
                            format!("--oracle http needs --endpoint or {ENDPOINT_ENV}")
                        })?,
                    };
                    Box::new(HttpOracle::new(
                        &endpoint,
                        Duration::from_millis(config.request_timeout_ms),
                    ))
                }
            };
            collect_answers(
                &manifest,
                &parent_dir(&args.manifest),
                &questions,
                oracle.as_ref(),
                n_aug,
                &mut seeded_rng(seed),
                options,
            )?
        }
    };
    save_matrix(&matrix, &args.out)?;
    println!(
        "wrote {} records ({} images x {} augmentations x {} questions) to {}",
        matrix.records().len(),
        matrix.n_images(),
        matrix.n_aug(),
        matrix.n_questions(),
        args.out.display()
    );
    Ok(())
}

fn result_file(
    matrix: &qsel::acquisition::AnswerMatrix,
    r: &OptimizationResult,
    variant: Variant,
    method: SearchMethod,
    config: Option<qsel::optimizer::GaConfig>,
    alpha: f64,
    beta: f64,
) -> ResultFile {
    ResultFile {
        method,
        variant,
        selected_question_ids: r.best_selection.selected(),
        bitstring: r.best_selection.bitstring(),
        fitness: r.best_fitness,
        alpha,
        beta,
        config,
        per_generation_best: r.per_generation_best.clone(),
        evaluations: r.evaluations_count,
        question_hash: matrix.question_hash(),
        n_questions: matrix.n_questions(),
        n_train_images: matrix.n_images(),
    }
}

fn optimize(args: OptimizeArgs, seed: Option<u64>, config: &RunConfig) -> Result<()> {
    let seed = require_seed(seed, "optimize")?;
    let matrix = load_matrix(&args.matrix)?;
    ensure!(
        matrix.manifest().has_both_classes(),
        "training manifest must contain images of both labels"
    );
    let t = tally(&matrix);

    let mut base = config.ga;
    base.seed = seed;
    macro_rules! set {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                base.$field = v;
            }
        };
    }
    set!(population_size, args.population);
    set!(generations, args.generations);
    set!(crossover_prob, args.crossover_prob);
    set!(mutation_prob, args.mutation_prob);
    set!(per_bit_flip_prob, args.per_bit_flip_prob);
    set!(tournament_size, args.tournament_size);
    set!(alpha, args.alpha);
    set!(beta, args.beta);

    let variants = args.variant.variants();
    let batch = variants.len() > 1;
    if batch {
        std::fs::create_dir_all(&args.out)
            .with_context(|| format!("creating {}", args.out.display()))?;
    }
    for variant in variants {
        let cfg = qsel::optimizer::GaConfig { variant, ..base };
        let r = ga_optimize(&t, &cfg)?;
        let out = if batch {
            args.out.join(format!("{variant}.json"))
        } else {
            args.out.clone()
        };
        result_file(
            &matrix,
            &r,
            variant,
            SearchMethod::Ga,
            Some(cfg),
            cfg.alpha,
            cfg.beta,
        )
        .save(&out)?;
        println!(
            "{} best fitness {:.6} with {} of {} questions -> {}",
            variant,
            r.best_fitness,
            r.best_selection.count(),
            t.n_questions(),
            out.display()
        );
    }
    Ok(())
}

fn evaluate(test_matrix: &Path, results: &[PathBuf], baselines: bool, out: &Path) -> Result<()> {
    let matrix = load_matrix(test_matrix)?;
    let hash = grid_hash(matrix.questions());
    let mut named = Vec::new();
    for path in results {
        let file = ResultFile::load(path)?;
        if file.question_hash != hash {
            bail!(
                "question grid of {} ({}) does not match test matrix {} ({})",
                path.display(),
                file.question_hash,
                test_matrix.display(),
                hash
            );
        }
        if file.n_train_images != matrix.n_images() {
            log::warn!(
                "{} was optimized on {} images but the test set has {}",
                path.display(),
                file.n_train_images,
                matrix.n_images()
            );
        }
        named.push((file.variant.selection_name().to_string(), file.selection()?));
    }
    ensure!(
        !named.is_empty() || baselines,
        "nothing to evaluate: pass --result and/or --baselines"
    );
    let t = tally(&matrix);
    let rows = evaluation_rows(&t, matrix.questions(), &named, baselines)?;
    let report = EvaluationReport {
        question_hash: hash,
        state_name: matrix.manifest().state_name.clone(),
        n_test_images: matrix.n_images(),
        rows,
    };
    write_json(out, &report)?;
    print!("{}", render_table(&report.rows));
    Ok(())
}

fn synth_profile(args: SynthProfileArgs, seed: Option<u64>) -> Result<()> {
    let seed = require_seed(seed, "synth-profile")?;
    let questions = load_grid(&args.grid)?;
    let profile = match (args.p_correct, args.p_invalid) {
        (Some(c), Some(i)) => SyntheticProfile::uniform(questions.len(), c, i, seed),
        _ => {
            ensure!(
                args.p_correct_min <= args.p_correct_max,
                "--p-correct-min exceeds --p-correct-max"
            );
            SyntheticProfile::random(
                questions.len(),
                (args.p_correct_min, args.p_correct_max),
                args.p_invalid_max,
                seed,
                &mut seeded_rng(seed),
            )
        }
    };
    profile.validate(questions.len())?;
    write_json(&args.out, &profile)?;
    println!(
        "wrote profile for {} questions to {}",
        questions.len(),
        args.out.display()
    );
    Ok(())
}
