//! `dctc`: run the counterexample demos, sweeps and solvers from the shell.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

mod commands;
mod config;
mod output;

use std::fmt;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use config::Opts;
use output::Run;

#[derive(Debug, Parser)]
#[command(name = "dctc", version, about = "Deutsch CTC fixed-point simulator")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    /// Period-3 orbit of U1 and its Cesàro mean.
    U1Cycle,
    /// Two consistent states of U2 and what the noisy dynamics selects.
    U2Bistable,
    /// Kraus operators of the U2 limit channel and their commutator residual.
    KrausRefutation,
    /// Ket-reading resolution for the three-qubit unitary.
    U3Ordering,
}

impl Demo {
    pub fn name(&self) -> &'static str {
        match self {
            Demo::U1Cycle => "u1-cycle",
            Demo::U2Bistable => "u2-bistable",
            Demo::KrausRefutation => "kraus-refutation",
            Demo::U3Ordering => "u3-ordering",
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Print one of the gallery counterexamples and write its artifacts.
    Demo {
        #[arg(value_enum)]
        name: Demo,
    },
    /// Random-start scatter of noiseless vs noisy fixed-point entropies.
    Sweep,
    /// Entropy of the selected CV state over the (ε_α, ε_β) grid of U3.
    Surface,
    /// Maximum-entropy consistent state of the bare map.
    Maxent,
    /// Fixed subspace of the bare map.
    Fixedpoints,
    /// Kraus operators of the limit channel lim Mⁿ.
    Kraus,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Demo { name } => format!("demo {}", name.name()),
            Command::Sweep => "sweep".into(),
            Command::Surface => "surface".into(),
            Command::Maxent => "maxent".into(),
            Command::Fixedpoints => "fixedpoints".into(),
            Command::Kraus => "kraus".into(),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numerical(dctc_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl From<dctc_core::Error> for CliError {
    fn from(e: dctc_core::Error) -> Self {
        match e {
            dctc_core::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let started = Instant::now();
    let settings = match config::resolve(cli.opts) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("dctc: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let mut run = match Run::new(cli.command.name(), settings) {
        Ok(run) => run,
        Err(e) => {
            eprintln!("dctc: {e}");
            return ExitCode::from(e.exit_code());
        }
    };

    let result = match cli.command {
        Command::Demo { name } => commands::demo(&mut run, name),
        Command::Sweep => commands::sweep(&mut run),
        Command::Surface => commands::surface(&mut run),
        Command::Maxent => commands::maxent(&mut run),
        Command::Fixedpoints => commands::fixedpoints(&mut run),
        Command::Kraus => commands::kraus(&mut run),
    };

    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("dctc: {e}");
            e.exit_code()
        }
    };
    let error = result.err().map(|e| e.to_string());
    if let Err(e) = run.write_manifest(started.elapsed(), code, error) {
        eprintln!("dctc: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
