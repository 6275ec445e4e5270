//! `kemplab` command-line harness.
//!
//! Every subcommand writes a JSON report (or per-element CSV with
//! `--format csv`). Exit codes: 0 ok, 1 verdict failure, 2 usage, 3 internal.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CliError, Outcome};

#[derive(Parser)]
#[command(name = "kemplab", version, about = "Finite-model laboratory for nearly minimal expansion")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone, Debug)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

#[derive(Args, Clone, Debug)]
pub struct Inputs {
    #[arg(long)]
    pub group: PathBuf,
    #[arg(long = "set-a")]
    pub set_a: PathBuf,
    #[arg(long = "set-b")]
    pub set_b: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plant a Bohr pair on a torus model and write group and set files.
    Gen(commands::GenArgs),
    /// Product-set measure and deficit of a pair.
    Deficit(commands::DeficitArgs),
    /// Pass a pair to a quotient through half-fiber level sets.
    Transfer(commands::TransferArgs),
    /// Build d_A and check the pseudometric axioms.
    Pseudo(commands::PseudoArgs),
    /// Search for the loop weight α_λ.
    Alpha(commands::AlphaArgs),
    /// Run the full inverse pipeline and fit a character with arcs.
    Pipeline(commands::PipelineArgs),
    /// Randomized search for a small toric K-nonexpander.
    Probe(commands::ProbeArgs),
    /// Run one or all property suites.
    Suite(commands::SuiteArgs),
    /// Time the naive and fast sumset kernels.
    Bench(commands::BenchArgs),
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(v) = std::env::var("KEMPLAB_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| CliError::Usage(format!("KEMPLAB_THREADS must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(CliError::Usage("KEMPLAB_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Internal(e.to_string()))
}

fn dispatch(cmd: Cmd) -> Result<Outcome, CliError> {
    threads_from_env()?;
    match cmd {
        Cmd::Gen(a) => commands::gen(a),
        Cmd::Deficit(a) => commands::deficit(a),
        Cmd::Transfer(a) => commands::transfer(a),
        Cmd::Pseudo(a) => commands::pseudo(a),
        Cmd::Alpha(a) => commands::alpha(a),
        Cmd::Pipeline(a) => commands::pipeline(a),
        Cmd::Probe(a) => commands::probe(a),
        Cmd::Suite(a) => commands::suite(a),
        Cmd::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let run = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(cli.cmd)));
    let res = run.unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(CliError::Internal(msg.unwrap_or_else(|| "panic".into())))
    });
    match res.and_then(|o| o.emit().map(|()| o.pass)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
