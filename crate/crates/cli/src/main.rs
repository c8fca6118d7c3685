mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    /// Bad input: flags, config, cache content, strategy text. Exit code 2.
    Validation(String),
    /// Failure while running: I/O and the like. Exit code 3.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "mutreduce", version, about = "Evolve and compare mutant reduction strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create, inspect and convert mutation caches.
    #[command(subcommand)]
    Cache(CacheCommand),
    /// Evolve strategies on a cache, one front file per seed.
    Train(TrainArgs),
    /// Sweep the conventional strategies, one front file per kind and seed.
    Baselines(BaselinesArgs),
    /// Re-run every strategy of a front file against another cache.
    Evaluate(EvaluateArgs),
    /// Compare front sets by HV and IGD and write report tables.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum CacheCommand {
    /// Generate a synthetic cache.
    Synth(SynthArgs),
    /// Print counts, global score and operator yields.
    Inspect {
        /// Cache file (.json, or .csv kill matrix).
        path: PathBuf,
    },
    /// Convert between the CSV kill matrix and the JSON cache format.
    Convert {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Re-draw the killer sets of a fraction of the mutants.
    Perturb {
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    operators: usize,
    #[arg(long, default_value_t = 100)]
    mutants: usize,
    #[arg(long, default_value_t = 50)]
    tests: usize,
    #[arg(long, default_value_t = 0.3)]
    kill_density: f64,
    #[arg(long, default_value_t = 2.0)]
    cost_skew: f64,
    #[arg(long, default_value_t = 0.5)]
    redundancy: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ge,
    Random,
}

#[derive(Args)]
struct TrainArgs {
    /// Cache file; taken from the manifest when rerunning.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// BNF grammar file; the built-in grammar when absent.
    #[arg(long)]
    grammar: Option<PathBuf>,
    /// `key = value` file of GE parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    settings: Vec<String>,
    #[arg(long, value_enum)]
    algorithm: Option<Algorithm>,
    /// First seed; runs use seeds S, S+1, ...
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Rerun exactly what a previous manifest describes.
    #[arg(long, conflicts_with_all = ["config", "settings", "algorithm", "seed", "runs", "grammar"])]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    jobs: JobsArg,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct JobsArg {
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "MUTREDUCE_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct BaselinesArgs {
    #[arg(long)]
    cache: PathBuf,
    /// Comma-separated kinds among rms, ros, sm.
    #[arg(long, value_delimiter = ',', default_value = "rms,ros,sm")]
    kinds: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Strategy executions averaged per evaluation.
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[command(flatten)]
    jobs: JobsArg,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Front file to re-evaluate.
    front: PathBuf,
    /// Target cache.
    #[arg(long)]
    cache: PathBuf,
    /// Evaluation seed for every row; each row's own seed when absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// `NAME=PATH`, where PATH is a directory of front files or one front
    /// file holding several seeds. The first method is the one compared
    /// against the others. Give at least two.
    #[arg(long = "method", value_name = "NAME=PATH", required = true)]
    methods: Vec<String>,
    /// Label written in the first column of the tables.
    #[arg(long, default_value = "experiment")]
    experiment: String,
    #[arg(short, long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cache(CacheCommand::Synth(a)) => commands::cache_synth(&a),
        Command::Cache(CacheCommand::Inspect { path }) => commands::cache_inspect(&path),
        Command::Cache(CacheCommand::Convert { input, output }) => commands::cache_convert(&input, &output),
        Command::Cache(CacheCommand::Perturb { input, fraction, seed, output }) => {
            commands::cache_perturb(&input, fraction, seed, &output)
        }
        Command::Train(a) => commands::train(&a),
        Command::Baselines(a) => commands::baselines(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mutreduce: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
