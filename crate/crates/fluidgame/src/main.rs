use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fluidgame::commands::{CommandError, CommandResult};
use fluidgame::{cmd_check, cmd_compare, cmd_simulate, cmd_solve, load_scenario, Overrides};
use rayon::prelude::*;

/// Conflict-controlled fluid queue: simulation, verification and analysis.
#[derive(Debug, Parser)]
#[command(name = "fluidgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print epsilon, both conditions and the closed-form bounds.
    Check(Common),
    /// Play the game and write the trajectory CSV and report.
    Simulate(Common),
    /// Search the minimal capture time on the direction grid.
    Solve(Common),
    /// Compare the random queue ensemble with its fluid mean flow.
    Compare(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario files; several are run in parallel.
    #[arg(required = true)]
    scenarios: Vec<PathBuf>,
    /// Output directory, overriding the scenario's.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render an SVG chart (simulate).
    #[arg(long)]
    svg: bool,
    /// Seed for the random attacker and the stochastic ensemble.
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step.
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
}

type Runner = fn(&fluidgame::Scenario, &mut Vec<u8>) -> Result<CommandResult, CommandError>;

fn run_one(
    path: &PathBuf,
    overrides: &Overrides,
    runner: Runner,
) -> (Vec<u8>, Result<i32, String>) {
    let mut buf = Vec::new();
    let result = load_scenario(path)
        .map_err(CommandError::from)
        .and_then(|mut s| {
            overrides.apply(&mut s)?;
            runner(&s, &mut buf)
        });
    match result {
        Ok(r) => {
            for f in &r.written.files {
                let _ = writeln!(buf, "wrote         {}", f.display());
            }
            (buf, Ok(r.outcome.code()))
        }
        Err(e) => (buf, Err(format!("{}: {e}", path.display()))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 1 } else { 0 });
        }
    };
    let (common, runner): (Common, Runner) = match cli.command {
        Command::Check(c) => (c, |s, o| cmd_check(s, o)),
        Command::Simulate(c) => (c, |s, o| cmd_simulate(s, o)),
        Command::Solve(c) => (c, |s, o| cmd_solve(s, o)),
        Command::Compare(c) => (c, |s, o| cmd_compare(s, o)),
    };
    let overrides = Overrides {
        out: common.out,
        svg: common.svg,
        seed: common.seed,
        dt: common.dt,
    };
    let results: Vec<_> = common
        .scenarios
        .par_iter()
        .map(|p| run_one(p, &overrides, runner))
        .collect();

    let mut code = 0;
    let mut failed_io = false;
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    for (i, (buf, result)) in results.into_iter().enumerate() {
        if i > 0 {
            let _ = writeln!(stdout);
        }
        let _ = stdout.write_all(&buf);
        match result {
            Ok(c) => code = code.max(c),
            Err(msg) => {
                eprintln!("error: {msg}");
                failed_io = true;
            }
        }
    }
    // Usage and I/O errors take precedence over verification failures.
    ExitCode::from(if failed_io { 1 } else { code as u8 })
}
