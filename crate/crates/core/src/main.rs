//! Command-line entry point: run scenario simulations, the derivation
//! verifier, and full-versus-reduced model comparisons. Exit codes: 0 on
//! success, 1 for runtime or verification failures, 2 for invalid
//! configuration or arguments.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qbloch::compare::{run_comparison, write_comparison_csv, CompareError};
use qbloch::config::{load_scenario, Scenario};
use qbloch::integrators::simulate;
use qbloch::output::write_trajectory_csv;
use qbloch::verification::{run_verification, VerificationError, VERIFICATION_TOL};

/// Environment variable that overrides the directory CSV files are written
/// to; the configured file name is kept.
const OUTPUT_DIR_VAR: &str = "QBLOCH_OUTPUT_DIR";

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "qbloch",
    about = "Simulate and verify raw Bloch-equation models for quantum boxes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config and write a trajectory CSV.
    Simulate {
        /// Path to the scenario config (see docs/CONFIG.md).
        config: PathBuf,
    },
    /// Re-derive the right-hand sides symbolically on random systems and
    /// compare them against the hand-coded models.
    Verify {
        /// Largest one-species level count to sample (at most 8).
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Master seed; per-trial seeds derive from it by trial index.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of random systems per check.
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Run the full two-species model against the reduced
    /// population/polarization model from matched initial data.
    Compare {
        /// Path to a two_species scenario config.
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { config } => cmd_simulate(&config),
        Command::Verify { levels, seed, trials } => cmd_verify(levels, seed, trials),
        Command::Compare { config } => cmd_compare(&config),
    }
}

/// Applies the output-directory override to a configured path.
fn resolve_output_path(configured: &str) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) => {
            let name = Path::new(configured)
                .file_name()
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(configured));
            PathBuf::from(dir).join(name)
        }
        None => PathBuf::from(configured),
    }
}

fn load_or_exit(config: &Path) -> Result<Scenario, ExitCode> {
    load_scenario(config).map_err(|err| {
        eprintln!("error: {err}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn cmd_simulate(config: &Path) -> ExitCode {
    let scenario = match load_or_exit(config) {
        Ok(scenario) => scenario,
        Err(code) => return code,
    };
    let trajectory =
        match simulate(&scenario.model, scenario.initial.clone(), &scenario.field, &scenario.stepper)
        {
            Ok(trajectory) => trajectory,
            Err(err) => {
                eprintln!("error: {err}");
                return ExitCode::from(EXIT_RUNTIME);
            }
        };
    let path = resolve_output_path(&scenario.output.path);
    match File::create(&path) {
        Ok(file) => {
            let mut writer = BufWriter::new(file);
            if let Err(err) = write_trajectory_csv(
                &mut writer,
                &scenario.model,
                &trajectory,
                scenario.output.precision,
            )
            .and_then(|()| writer.flush())
            {
                eprintln!("error: cannot write {}: {err}", path.display());
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
        Err(err) => {
            eprintln!("error: cannot create {}: {err}", path.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    println!("wrote {} ({} records)", path.display(), trajectory.len());
    ExitCode::SUCCESS
}

fn cmd_verify(levels: usize, seed: u64, trials: usize) -> ExitCode {
    let summary = match run_verification(levels, seed, trials) {
        Ok(summary) => summary,
        Err(err @ (VerificationError::BadLevelCount { .. } | VerificationError::NoTrials)) => {
            eprintln!("error: {err}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    println!(
        "derivation verifier: levels <= {}, seed {}, {} trials",
        summary.levels, summary.seed, summary.trials
    );
    println!("{:<44} {:>12}  worst coordinate", "check", "max rel dev");
    let mut all_pass = true;
    for check in &summary.checks {
        let location = match &check.worst {
            Some(coordinate) => format!("{} (trial {})", coordinate, check.worst_trial),
            None => "-".to_string(),
        };
        println!("{:<44} {:>12.3e}  {}", check.name, check.max_rel_deviation, location);
        if check.max_rel_deviation >= VERIFICATION_TOL {
            all_pass = false;
            eprintln!(
                "FAIL: {} deviates by {:.3e} at {} (tolerance {:.0e})",
                check.name, check.max_rel_deviation, location, VERIFICATION_TOL
            );
        }
    }
    if all_pass {
        println!("all checks within {VERIFICATION_TOL:.0e}: PASS");
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_RUNTIME)
    }
}

fn cmd_compare(config: &Path) -> ExitCode {
    let scenario = match load_or_exit(config) {
        Ok(scenario) => scenario,
        Err(code) => return code,
    };
    let comparison = match run_comparison(&scenario) {
        Ok(comparison) => comparison,
        Err(err @ CompareError::WrongModel { .. }) => {
            eprintln!("error: {err}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let path = resolve_output_path(&scenario.output.path);
    match File::create(&path) {
        Ok(file) => {
            let mut writer = BufWriter::new(file);
            if let Err(err) = write_comparison_csv(&mut writer, &comparison, scenario.output.precision)
                .and_then(|()| writer.flush())
            {
                eprintln!("error: cannot write {}: {err}", path.display());
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
        Err(err) => {
            eprintln!("error: cannot create {}: {err}", path.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    println!("max population discrepancy: {:e}", comparison.max_population_discrepancy);
    println!("max intra-band coherence: {:e}", comparison.max_intraband_coherence);
    println!("wrote {}", path.display());
    ExitCode::SUCCESS
}
