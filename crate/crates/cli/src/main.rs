mod commands;
mod error;
mod output;
mod system;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "remetric", version, about = "Remetrization of finite dynamical systems")]
struct Cli {
    /// Directory for CSV tables and report.json; tables go to stdout otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Cap on distinct maps kept by the closure.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    table_budget: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Submultiplicative envelope b_n of a growth sequence.
    Envelope(EnvelopeArgs),
    /// Build the remetrized d̂ for a system and check the Lipschitz bounds.
    Remetrize(RemetrizeArgs),
    /// Finite checks of the hypotheses.
    Check(CheckArgs),
    /// Run a bundled system end to end.
    Demo(DemoArgs),
}

#[derive(Args, Debug)]
pub struct EnvelopeArgs {
    /// `log`, `const:<v>`, `linear` or `list:<csv>`.
    #[arg(long, default_value = "log")]
    pub a: String,
    #[arg(long, default_value_t = 64)]
    pub horizon: usize,
    /// Largest n·m checked for submultiplicativity; defaults to the horizon.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct BuildArgs {
    /// Growth sequence for the envelope.
    #[arg(long, default_value = "log")]
    pub a: String,
    /// Bound constant; overrides the system's own.
    #[arg(long)]
    pub c: Option<f64>,
    /// Envelope horizon available to the tail criterion.
    #[arg(long, default_value_t = 4096)]
    pub horizon: usize,
    /// Modulus sequence checked against each F^n.
    #[arg(long, default_value = "loglin")]
    pub omega: String,
    /// Validate the input metric even for large built-in carriers.
    #[arg(long)]
    pub audit: bool,
}

#[derive(Args, Debug)]
pub struct RemetrizeArgs {
    /// `tent:<L>`, `rotation:<q>`, `group:<json>` or a system JSON file.
    #[arg(long)]
    pub system: String,
    #[arg(long, default_value_t = 12)]
    pub max_n: usize,
    #[command(flatten)]
    pub build: BuildArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    Iv,
    Phi,
    TentWitness,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub condition: Condition,
    #[arg(long, default_value = "loglin")]
    pub omega: String,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Comma-separated t values (iv).
    #[arg(long, default_value = "0.1,1")]
    pub t_grid: String,
    /// `lo:hi` window of indices (iv).
    #[arg(long, default_value = "100:200")]
    pub window: String,
    /// Horizon of the φ construction (phi).
    #[arg(long, default_value_t = 100)]
    pub horizon: usize,
    /// Tent system (tent-witness).
    #[arg(long, default_value = "tent:12")]
    pub system: String,
    /// Largest iterate checked (tent-witness).
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value = "log")]
    pub a: String,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemoName {
    Tent,
    Rotation,
    Group,
    Counterexample,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    S3,
    S3All,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(value_enum)]
    pub name: DemoName,
    /// Dyadic grid level (tent).
    #[arg(long = "L", default_value_t = 10)]
    pub level: u32,
    /// Cycle length (rotation).
    #[arg(long, default_value_t = 12)]
    pub q: usize,
    /// Largest composition length checked; defaults per demo.
    #[arg(long)]
    pub max_n: Option<usize>,
    #[arg(long, value_enum, default_value = "s3")]
    pub preset: Preset,
    /// Permutations JSON overriding the preset (group).
    #[arg(long)]
    pub perms: Option<PathBuf>,
    /// Index k of F_k (counterexample).
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Largest generator index in the word alphabet (counterexample).
    #[arg(long, default_value_t = 6)]
    pub bound: u64,
    /// Check this many seeded random words instead of all of them.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Comma-separated δ schedule for the non-equicontinuity witness.
    #[arg(long, default_value = "0.1,0.01,0.001,0.0001")]
    pub deltas: String,
    #[command(flatten)]
    pub build: BuildArgs,
}

pub struct Globals {
    pub out: Option<PathBuf>,
    pub tol: f64,
    pub table_budget: usize,
    pub seed: u64,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("REMETRIC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("REMETRIC_THREADS={raw:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let g = Globals {
        out: cli.out,
        tol: cli.tol,
        table_budget: cli.table_budget,
        seed: cli.seed,
    };
    match cli.command {
        Command::Envelope(a) => commands::envelope(&g, &a),
        Command::Remetrize(a) => commands::remetrize(&g, &a),
        Command::Check(a) => commands::check(&g, &a),
        Command::Demo(a) => commands::demo(&g, &a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let result = run(cli);
    eprintln!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
