use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use extphase_cli::config::Format;
use extphase_cli::scenario::build_manifest;
use extphase_cli::{run_scenario, verify, write_artifacts, CliError, Command, ScenarioConfig};

/// Simulation and verification toolkit for relativistic dynamics in the
/// extended (time-energy) phase space.
#[derive(Parser)]
#[command(name = "extphase", version)]
struct Cli {
    /// JSON scenario file; omitted sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Table format (overrides output.format).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also render SVG plots.
    #[arg(long, global = true)]
    plot: bool,
    /// Reject the whole resonance table if any row is malformed.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate an extended-phase-space trajectory.
    Trajectory,
    /// Apply a finite boost and check canonicity.
    Boost,
    /// Evolve an action distribution and fit the time law.
    Wave,
    /// Wigner functions of a factorized wave packet.
    Wigner,
    /// Relativistic gas sweep and Fokker-Planck check.
    Gas,
    /// Fit m0c^2/width = a + C/width to a resonance table.
    Fit,
    /// Relativistic corrections for the hydrogen ground state.
    Hydrogen,
    /// Rerun every acceptance check and print a pass/fail table.
    Verify {
        /// Run only these criteria (1-16).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn resolve(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(dir) = &cli.out_dir {
        cfg.output.dir = dir.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    cfg.output.plot |= cli.plot;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let command = match &cli.command {
        Cmd::Verify { only } => {
            let checks: Vec<verify::Check> = if only.is_empty() {
                verify::run_all()
            } else {
                only.iter().map(|id| verify::run(*id)).collect()
            };
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(verify::render_table(&checks).as_bytes())?;
            let total: f64 = checks.iter().map(|c| c.elapsed_s).sum();
            eprintln!("verify runtime {total:.1} s");
            return Ok(checks.iter().all(|c| c.passed));
        }
        Cmd::Trajectory => Command::Trajectory,
        Cmd::Boost => Command::Boost,
        Cmd::Wave => Command::Wave,
        Cmd::Wigner => Command::Wigner,
        Cmd::Gas => Command::Gas,
        Cmd::Fit => Command::Fit,
        Cmd::Hydrogen => Command::Hydrogen,
    };
    let cfg = resolve(cli)?;
    let artifacts = run_scenario(command, &cfg, cli.strict)?;
    let manifest = build_manifest(command, &cfg, &artifacts);
    let path = write_artifacts(&cfg.output.dir, &artifacts, &manifest)?;
    println!("wrote {} files; manifest {}", artifacts.len(), path.display());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
