//! Command-line front end.
//!
//! Every command loads a [`RunConfig`], applies flag overrides, validates,
//! runs, writes its data files under the output directory and returns an
//! exit code: 0 pass, 1 physics failure, 2 usage or configuration error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_budget, cmd_fdr_check, cmd_oracle, cmd_relax, oracle_grid, relax_spec, Outcome,
    FDR_DEFAULT_POINTS,
};
pub use config::{
    AtomSection, BathSection, Format, GridSection, LangevinSection, OracleSection, OutputSection,
    RunConfig, Tolerances, DEFAULT_GAMMA,
};

use crate::error::{Error, Result};
use crate::greens::Bath;

#[derive(Debug, Parser)]
#[command(name = "fluxbalance", version, about = "Power budget and fluctuation-dissipation checks for a harmonic atom in a scalar field")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the fluctuation-dissipation identities on a grid.
    FdrCheck,
    /// Compute the four-way power budget (optionally over a cutoff sweep).
    Budget,
    /// Run the Langevin ensemble and compare with the predicted variance.
    Relax,
    /// Compare the direct time-domain correction with the stationary form.
    Oracle,
}

/// Flags that override the configuration file. Flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    /// Inverse temperature of the field.
    #[arg(long, global = true, conflicts_with = "vacuum")]
    pub beta: Option<f64>,
    /// Zero-temperature field.
    #[arg(long, global = true)]
    pub vacuum: bool,
    #[arg(long, global = true)]
    pub cutoff: Option<f64>,
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Comma-separated cutoffs for a budget sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sweep: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub n_traj: Option<usize>,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Primary tolerance of the selected command.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

impl Overrides {
    /// Loads the configuration file (or defaults) and applies the flags.
    pub fn resolve(&self, command: Command) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.omega {
            c.atom.omega = v;
        }
        if let Some(v) = self.mass {
            c.atom.mass = v;
        }
        if let Some(v) = self.gamma {
            c.atom.gamma = Some(v);
            c.atom.coupling = None;
        }
        if let Some(b) = self.beta {
            c.bath.beta = Bath::thermal(b).map_err(|e| Error::Config(format!("--beta: {e}")))?;
        }
        if self.vacuum {
            c.bath.beta = Bath::Vacuum;
        }
        if let Some(v) = self.cutoff {
            c.grid.cutoff = v;
        }
        if let Some(v) = self.grid_points {
            c.grid.n_points = Some(v);
        }
        if let Some(v) = &self.sweep {
            c.grid.sweep = v.clone();
        }
        if let Some(v) = self.seed {
            c.langevin.seed = v;
        }
        if let Some(v) = self.n_traj {
            c.langevin.n_traj = v;
        }
        if let Some(v) = &self.out {
            c.output.directory = v.clone();
        }
        if let Some(v) = self.format {
            c.output.format = v;
        }
        if let Some(v) = self.tolerance {
            let t = &mut c.tolerances;
            match command {
                Command::FdrCheck => t.fdr_relative = v,
                Command::Budget => {
                    t.net = v;
                    t.closure = v;
                }
                Command::Relax => t.relax_relative = v,
                Command::Oracle => t.oracle = v,
            }
        }
        c.validate()?;
        Ok(c)
    }
}

/// Runs one parsed invocation and returns its exit code.
pub fn run(cli: &Cli) -> u8 {
    let config = match cli.overrides.resolve(cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let result = crate::with_workers(cli.overrides.workers, || match cli.command {
        Command::FdrCheck => cmd_fdr_check(&config),
        Command::Budget => cmd_budget(&config),
        Command::Relax => cmd_relax(&config),
        Command::Oracle => cmd_oracle(&config),
    });
    match result.and_then(|r| r) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Entry point of the binary.
pub fn main_from_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => ExitCode::from(run(&cli)),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("fluxbalance").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_defaults() {
        let cli = parse(&["budget", "--gamma", "0.01", "--beta", "2", "--cutoff", "100", "--sweep", "10,100"]);
        assert_eq!(cli.command, Command::Budget);
        let c = cli.overrides.resolve(cli.command).unwrap();
        assert_eq!(c.atom.gamma, Some(0.01));
        assert_eq!(c.bath().beta(), 2.0);
        assert_eq!(c.grid.cutoff, 100.0);
        assert_eq!(c.grid.sweep, vec![10.0, 100.0]);
    }

    #[test]
    fn tolerance_targets_the_command() {
        let cli = parse(&["fdr-check", "--tolerance", "1e-20"]);
        let c = cli.overrides.resolve(cli.command).unwrap();
        assert_eq!(c.tolerances.fdr_relative, 1e-20);
        assert_eq!(c.tolerances.net, 1e-10);
    }

    #[test]
    fn usage_errors() {
        let bad = |a: &[&str]| Cli::try_parse_from(std::iter::once("fluxbalance").chain(a.iter().copied())).is_err();
        assert!(bad(&["budget", "--beta", "warm"]));
        assert!(bad(&["budget", "--beta", "1", "--vacuum"]));
        assert!(bad(&["frobnicate"]));
        let cli = parse(&["budget", "--cutoff=-3"]);
        assert!(cli.overrides.resolve(cli.command).is_err());
    }
}
