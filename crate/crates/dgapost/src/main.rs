use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dgapost::presets::{self, PRESETS};
use dgapost::selfcheck::run_checks;
use dgapost::{output_dir, run, Error, ExperimentConfig};

/// Adaptive discontinuous Galerkin experiments with a posteriori error estimators.
#[derive(Parser)]
#[command(name = "dgapost", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs an experiment from a TOML file or a preset name.
    Run {
        /// Path to a configuration file, or the name of a preset.
        config: String,
        /// Output directory (overrides DGAPOST_OUTPUT_DIR and the config file).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Lists the built-in presets.
    ListPresets,
    /// Runs the invariant self-test suite.
    Check,
}

fn load(config: &str) -> Result<ExperimentConfig, Error> {
    let path = Path::new(config);
    if path.exists() {
        ExperimentConfig::load(path)
    } else if presets::find(config).is_some() {
        presets::load(config)
    } else {
        Err(Error::Config(format!(
            "{config:?} is neither a file nor a preset"
        )))
    }
}

fn print_table(out: &dgapost::RunOutput) {
    let ee = out.table.error_eoc();
    let es = out.table.estimate_eoc();
    println!(
        "{:>5} {:>8} {:>9} {:>11} {:>11} {:>11} {:>11} {:>11} {:>7} {:>7}",
        "step", "cells", "dofs", "eta_R", "eta_I", "eta_J", "total", "error", "eoc_e", "eoc_est"
    );
    let f = |v: Option<f64>, w: usize, p: usize| {
        v.map(|x| format!("{x:>w$.p$}"))
            .unwrap_or_else(|| format!("{:>w$}", "-"))
    };
    for (i, r) in out.table.rows.iter().enumerate() {
        let rate = |v: &[Option<f64>]| if i == 0 { None } else { v[i - 1] };
        println!(
            "{:>5} {:>8} {:>9} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {} {} {}",
            r.step,
            r.cells,
            r.dofs,
            r.eta_r,
            r.eta_i,
            r.eta_j,
            r.total,
            r.error
                .map(|e| format!("{e:>11.4e}"))
                .unwrap_or_else(|| format!("{:>11}", "-")),
            f(rate(&ee), 7, 3),
            f(rate(&es), 7, 3),
        );
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, output } => {
            let cfg = load(&config)?;
            let dir = output_dir(&cfg, output.as_deref());
            let out = run(&cfg, &dir)?;
            print_table(&out);
            println!("wrote {}", dir.display());
        }
        Command::ListPresets => {
            for p in PRESETS {
                println!("{:<20} {}", p.name, p.summary);
            }
        }
        Command::Check => {
            let checks = run_checks();
            for c in &checks {
                println!(
                    "[{}] {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Error::Check(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
