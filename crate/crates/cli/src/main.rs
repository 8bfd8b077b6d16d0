use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod io;

#[derive(Parser, Debug)]
#[command(name = "meterguard", version, about = "Find small meter sets that defend state variables against undetectable false-data injection")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Network case file (JSON).
    #[arg(long, global = true)]
    pub case: Option<PathBuf>,
    /// Measurement placement file (JSON).
    #[arg(long, global = true)]
    pub meas: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Model PMUs as pseudo flow meters on pseudo branches to the reference.
    #[arg(long, global = true)]
    pub pmu: bool,
    /// Relative pivot tolerance for rank tests.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub eps: f64,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the measurement Jacobian with meter and bus labels.
    Jacobian,
    /// Check observability, or whether a meter set or plan defends targets.
    Check(commands::CheckArgs),
    /// Compute a protection plan.
    Protect(commands::ProtectArgs),
    /// Synthesize an undetectable attack on one target and run the residual test.
    Attack(commands::AttackArgs),
    /// Repeat the solvers over random target sets and tabulate the results.
    Bench(commands::BenchArgs),
    /// Build a feasible measured tree from a set of meters.
    Tree(commands::TreeArgs),
}

/// Error raised by a command, tagged with the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type CmdResult = Result<ExitCode, Failure>;

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<meterguard::Error>() {
            Some(meterguard::Error::Verification(_)) => 3,
            _ => 2,
        };
        Failure { code, error }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = match &cli.command {
        Command::Jacobian => commands::jacobian(&cli.global),
        Command::Check(a) => commands::check(&cli.global, a),
        Command::Protect(a) => commands::protect(&cli.global, a),
        Command::Attack(a) => commands::attack(&cli.global, a),
        Command::Bench(a) => commands::bench(&cli.global, a),
        Command::Tree(a) => commands::tree(&cli.global, a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
