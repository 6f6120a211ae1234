mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qsel::fitness::Variant;

#[derive(Parser)]
#[command(
    name = "qsel",
    version,
    about = "Select VQA question ensembles for binary state recognition"
)]
struct Cli {
    /// Seed for every stochastic step; required by collect, optimize and synth-profile.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// JSON settings file (GA parameters, n_aug, grid cap, oracle limits).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a question spec into the full question grid.
    GenQuestions {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Maximum grid size (default 64).
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Query an answer oracle for every (image, augmentation, question).
    Collect(CollectArgs),
    /// Run the genetic algorithm on a training matrix.
    Optimize(OptimizeArgs),
    /// Exhaustively search all non-empty selections (small grids only).
    BruteForce {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum)]
        variant: VariantArg,
        /// Largest grid to enumerate (default 20). Runtime doubles per question.
        #[arg(long)]
        max_nq: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score optimized and baseline selections on a held-out matrix.
    Evaluate {
        #[arg(long)]
        test_matrix: PathBuf,
        /// Optimization result files, reported in the order given.
        #[arg(long = "result")]
        results: Vec<PathBuf>,
        /// Append the s_does, s_is and s_all rows.
        #[arg(long)]
        baselines: bool,
        /// Machine-readable report.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic-oracle profile for a question grid.
    SynthProfile(SynthProfileArgs),
    /// Serve recorded answers over the VQA wire protocol.
    MockServer {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        replay: PathBuf,
        #[arg(long)]
        n_aug: Option<usize>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleKind {
    Http,
    Replay,
    Synth,
}

#[derive(Args)]
struct CollectArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, value_enum)]
    oracle: OracleKind,
    /// VQA endpoint base URL; falls back to QSEL_VQA_ENDPOINT.
    #[arg(long)]
    endpoint: Option<String>,
    /// JSON-lines answer recording (replay oracle).
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Synthetic profile (synth oracle).
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    n_aug: Option<usize>,
    /// Concurrent oracle requests.
    #[arg(long)]
    in_flight: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    EPlus,
    EPrimePlus,
    EMinus,
    EPrimeMinus,
    All,
}

impl VariantArg {
    fn variants(self) -> Vec<Variant> {
        match self {
            VariantArg::EPlus => vec![Variant::EPlus],
            VariantArg::EPrimePlus => vec![Variant::EPrimePlus],
            VariantArg::EMinus => vec![Variant::EMinus],
            VariantArg::EPrimeMinus => vec![Variant::EPrimeMinus],
            VariantArg::All => Variant::ALL.to_vec(),
        }
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Result file; a directory when --variant all.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    crossover_prob: Option<f64>,
    #[arg(long)]
    mutation_prob: Option<f64>,
    #[arg(long)]
    per_bit_flip_prob: Option<f64>,
    #[arg(long)]
    tournament_size: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct SynthProfileArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Constant correct probability for every question.
    #[arg(long, requires = "p_invalid")]
    p_correct: Option<f64>,
    /// Constant invalid probability for every question.
    #[arg(long, requires = "p_correct")]
    p_invalid: Option<f64>,
    /// Random profiles: range of per-question correct probability.
    #[arg(long, default_value_t = 0.3)]
    p_correct_min: f64,
    #[arg(long, default_value_t = 0.95)]
    p_correct_max: f64,
    #[arg(long, default_value_t = 0.3)]
    p_invalid_max: f64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = commands::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
