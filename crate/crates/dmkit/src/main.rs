//! `dmkit` command-line interface.
//!
//! Usage:
//!   dmkit classical|diskmargin|trace|mimo|exclusion <model.json>
//!         [--skew R] [--grid N|lo:hi:N] [--worst-case] [--points P]
//!         [--out PATH] [--format json|csv]
//!
//! Exit codes: 0 success, 1 input error, 2 nominal closed loop unstable
//! or ill-posed, 3 numerical failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dmkit::commands::seed_from;
use dmkit::{CliError, Command, Format, GridSpec, Invocation, Options, PointsSpec};

#[derive(Parser)]
#[command(
    name = "dmkit",
    version,
    about = "Classical, disk and multi-loop stability margins of LTI feedback loops"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classical gain and phase margins.
    Classical(Args),
    /// Disk margin for one skew, optionally with the worst-case perturbation.
    Diskmargin(Args),
    /// Disk margin against frequency (CSV by default).
    Trace(Args),
    /// Multi-loop disk margin of a (P, K) pair.
    Mimo(Args),
    /// Nyquist exclusion disk and L(jw) samples.
    Exclusion(Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct Args {
    /// Model file (JSON).
    model: PathBuf,
    /// Disk skew sigma.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    skew: f64,
    /// N log points, or lo:hi:N.
    #[arg(long)]
    grid: Option<String>,
    /// Build and verify the worst-case dynamic perturbation (diskmargin).
    #[arg(long)]
    worst_case: bool,
    /// Perturbation points for mimo: input, output, io, or a channel list
    /// such as 0,3.
    #[arg(long, default_value = "input")]
    points: String,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

fn invocation(cmd: Cmd) -> Result<(Invocation, Option<PathBuf>), CliError> {
    let (command, a) = match cmd {
        Cmd::Classical(a) => (Command::Classical, a),
        Cmd::Diskmargin(a) => (Command::DiskMargin, a),
        Cmd::Trace(a) => (Command::Trace, a),
        Cmd::Mimo(a) => (Command::Mimo, a),
        Cmd::Exclusion(a) => (Command::Exclusion, a),
    };
    if a.worst_case && command != Command::DiskMargin {
        return Err(CliError::input("--worst-case applies to diskmargin only"));
    }
    if a.grid.is_some() && matches!(command, Command::Classical | Command::DiskMargin) {
        return Err(CliError::input(format!("--grid does not apply to {}", command.name())));
    }
    if a.skew != 0.0 && command == Command::Classical {
        return Err(CliError::input("--skew does not apply to classical"));
    }
    let format = match (a.format, command) {
        (Some(FormatArg::Json), _) => Format::Json,
        (Some(FormatArg::Csv), _) | (None, Command::Trace) => Format::Csv,
        (None, _) => Format::Json,
    };
    let options = Options {
        skew: a.skew,
        grid: a.grid.as_deref().map(str::parse::<GridSpec>).transpose()?,
        worst_case: a.worst_case,
        points: a.points.parse::<PointsSpec>()?,
        seed: seed_from(std::env::var("DMKIT_SEED").ok().as_deref())?,
    };
    let inv = Invocation {
        command,
        model_path: a.model.display().to_string(),
        options,
        format,
    };
    Ok((inv, a.out))
}

fn execute(cmd: Cmd) -> Result<(), CliError> {
    let (inv, out) = invocation(cmd)?;
    let text = dmkit::run(&inv)?;
    match out {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
        }
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            // a closed pipe (`dmkit ... | head`) is not an error
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; clap would exit with 2
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dmkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
