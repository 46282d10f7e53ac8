//! `turbmodes`: modal power transfer in turbulent channels from the command
//! line.
//!
//! Exit status: 0 success, 1 invalid input or configuration, 2 a comparison
//! outside tolerance, 3 a numerical failure (quadrature or invariant).

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::commands::{CompareOptions, DumpOptions};
use crate::config::{ExperimentConfig, Strength, StrengthConfig, TurbulenceKind};

/// A comparison that ran correctly but did not meet its tolerance.
#[derive(Debug)]
pub struct ToleranceFailure(pub String);

impl fmt::Display for ToleranceFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tolerance check failed: {}", self.0)
    }
}

impl std::error::Error for ToleranceFailure {}

#[derive(Parser)]
#[command(name = "turbmodes", version, about = "Mean spatial-mode power transfer in turbulent optical channels")]
struct Cli {
    #[command(flatten)]
    global: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// TOML experiment description; defaults apply when absent.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Mode basis, e.g. LG:14 or HG:6.
    #[arg(long, global = true, value_name = "FAMILY:NMAX")]
    basis: Option<String>,
    /// cn2=VALUE, r0=VALUE or lambda00L=VALUE.
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    strength: Option<Strength>,
    /// Use the undamped Kolmogorov spectrum.
    #[arg(long, global = true)]
    pure_kolmogorov: bool,
    /// 1024 x 0.78125 mm grid and 10600 realizations.
    #[arg(long, global = true)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Coupling-rate matrix of the channel.
    Lambda,
    /// Mean modal powers after the channel.
    Propagate,
    /// Monte Carlo ensemble of split-step realizations.
    Simulate,
    /// Deviations between two result files in standard errors.
    Compare {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        sim: PathBuf,
        /// Allowed |deviation| in standard errors per order group.
        #[arg(long, default_value_t = 3.0)]
        sigma: f64,
        /// Only groups up to this order decide the exit status.
        #[arg(long)]
        max_order: Option<u32>,
    },
    /// Diagonal Kolmogorov integrals against 12 (N+1)^(5/6).
    Table1 {
        #[arg(long, default_value_t = 5)]
        n_max: u32,
    },
    /// Acceptance spectrum B_ab(theta) of one mode pair.
    DumpB {
        /// First mode, e.g. "LG(0,0)".
        a: String,
        /// Second mode.
        b: String,
        #[arg(long, default_value_t = 20.0)]
        theta_max: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        /// Fixed phase-wave direction for HG pairs instead of the average.
        #[arg(long)]
        xi: Option<f64>,
    },
}

fn parse_basis(s: &str) -> Result<(String, u32)> {
    let (family, n) = s.split_once(':').context("--basis expects FAMILY:NMAX, e.g. LG:14")?;
    let n: u32 = n.trim().parse().with_context(|| format!("bad NMAX '{n}'"))?;
    Ok((family.trim().to_string(), n))
}

fn effective_config(o: &Overrides) -> Result<ExperimentConfig> {
    let mut c = match &o.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = o.seed {
        c.seed = seed;
    }
    if let Some(dir) = &o.out {
        c.output.dir = dir.clone();
    }
    if let Some(b) = &o.basis {
        let (family, n_max) = parse_basis(b)?;
        c.basis.family = family;
        c.basis.n_max = n_max;
    }
    if let Some(s) = o.strength {
        c.strength = StrengthConfig::from_strength(s);
    }
    if o.pure_kolmogorov {
        c.turbulence.model = TurbulenceKind::Kolmogorov;
    }
    if o.full_scale {
        c.full_scale();
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<()> {
    let config = effective_config(&cli.global)?;
    match cli.command {
        Command::Lambda => commands::lambda(&config),
        Command::Propagate => commands::propagate(&config),
        Command::Simulate => commands::simulate(&config),
        Command::Compare { theory, sim, sigma, max_order } => {
            if !(sigma > 0.0) {
                bail!("--sigma must be positive");
            }
            commands::compare(&config, &CompareOptions { theory, sim, sigma, max_order })
        }
        Command::Table1 { n_max } => commands::table1(&config, n_max),
        Command::DumpB { a, b, theta_max, points, xi } => {
            let path = commands::dump_b(&config, &DumpOptions { a, b, theta_max, points, xi })?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ToleranceFailure>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<turbmodes::Error>() {
            return match e {
                turbmodes::Error::Quadrature { .. } | turbmodes::Error::Invariant(_) => 3,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
