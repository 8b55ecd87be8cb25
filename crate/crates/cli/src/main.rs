use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Fit, decode and score log-space hidden Markov models.
#[derive(Parser, Debug)]
#[command(name = "loghmm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model with Baum-Welch.
    Fit(FitArgs),
    /// Most probable state per observation.
    Decode(DecodeArgs),
    /// Log-likelihood and information criteria of a model on data.
    Eval(EvalArgs),
    /// Time forward-backward on the dishonest-casino model.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Observation file; blank lines separate sequences.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Zero-based column holding the observations.
    #[arg(long, default_value_t = 0)]
    column: usize,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Dataset {
    Earthquake,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Viterbi,
    Posterior,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Use an embedded dataset instead of --data.
    #[arg(long, value_enum, conflicts_with = "data")]
    benchmark: Option<Dataset>,
    /// Starting model; replaces --states/--family.
    #[arg(long, conflicts_with_all = ["states", "family"])]
    seed_model: Option<PathBuf>,
    #[arg(long)]
    states: Option<usize>,
    /// Emission family, or one per state, comma separated.
    #[arg(long, value_delimiter = ',')]
    family: Vec<String>,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Relative log-likelihood change that counts as converged.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Where to write the fitted model.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = Method::Viterbi)]
    method: Method,
    /// Write the decoded states here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` adds the posterior of every state at every step.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Sequence lengths to time.
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1_000, 10_000, 100_000])]
    lengths: Vec<usize>,
    /// Timed runs per length; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // exit code 2 is reserved for "did not converge", so usage errors use 1
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
    };
    let result = match cli.command {
        Command::Fit(args) => commands::fit(&args),
        Command::Decode(args) => commands::decode(&args).map(|()| true),
        Command::Eval(args) => commands::eval(&args).map(|()| true),
        Command::Benchmark(args) => commands::benchmark(&args).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
