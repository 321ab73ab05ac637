// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use magnon_blockade::cli::{
    cmd_analytic, cmd_reduce, cmd_steady, cmd_sweep, cmd_validate, Config, Overrides,
};
use magnon_blockade::Result;

/// Magnon blockade simulations. All rates, detunings and couplings are in
/// units of the pump decay rate kappa.
#[derive(Parser)]
#[command(name = "magblock", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file (numbers in units of kappa)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output path: the CSV for `sweep`, the JSON report otherwise
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Pump-mode Fock cutoff (overrides the configuration)
    #[arg(long, value_name = "N")]
    cutoff_p: Option<usize>,
    /// Magnon-mode Fock cutoff (overrides the configuration)
    #[arg(long, value_name = "N")]
    cutoff_m: Option<usize>,
    /// Seed for randomized checks; echoed in the report
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state of the master equation: magnon g2(0), occupations, residual
    Steady(Common),
    /// Parameter sweep written as CSV, with a dip summary on stdout
    Sweep(Common),
    /// Weak-drive closed form: X, Y, Z, g2, amplitudes, condition roots
    Analytic(Common),
    /// Effective parameters from a full three-mode configuration
    Reduce(Common),
    /// Oracle, solver, truncation and reduction self-checks
    Validate {
        #[command(flatten)]
        common: Common,
        /// Flip the Kerr sign on the amplitude side of the identity check
        #[arg(long, hide = true)]
        mutate_kerr_sign: bool,
    },
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { cutoff_p: self.cutoff_p, cutoff_m: self.cutoff_m, seed: self.seed }
    }

    fn config(&self) -> Result<Config> {
        let path = self.config.as_deref().ok_or_else(|| {
            magnon_blockade::Error::InvalidArgument("--config PATH is required for this command".into())
        })?;
        self.overrides().apply(Config::load(path)?)
    }
}

fn emit(report: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize");
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Steady(c) => {
            let config = c.config()?;
            let out = c.out.clone().or_else(|| config.output.report.clone());
            emit(&cmd_steady(&config)?, out.as_deref())?;
        }
        Command::Sweep(c) => {
            let config = c.config()?;
            let (report, _) = cmd_sweep(&config, c.out.as_deref())?;
            emit(&report, config.output.report.as_deref())?;
        }
        Command::Analytic(c) => {
            let config = c.config()?;
            let out = c.out.clone().or_else(|| config.output.report.clone());
            emit(&cmd_analytic(&config)?, out.as_deref())?;
        }
        Command::Reduce(c) => {
            let config = c.config()?;
            let out = c.out.clone().or_else(|| config.output.report.clone());
            emit(&cmd_reduce(&config)?, out.as_deref())?;
        }
        Command::Validate { common, mutate_kerr_sign } => {
            let config = match &common.config {
                Some(_) => Some(common.config()?),
                None => None,
            };
            let report = cmd_validate(config.as_ref(), &common.overrides(), mutate_kerr_sign)?;
            let out = common.out.clone().or_else(|| config.and_then(|c| c.output.report));
            emit(&report, out.as_deref())?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
