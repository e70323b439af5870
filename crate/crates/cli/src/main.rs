//! `nlci`: batch front end for the nonlocal Chafee-Infante laboratory.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::output::OutDir;

#[derive(Parser)]
#[command(name = "nlci", version, about = "Equilibria, spectra and dynamics of u_t = a(|u_x|^2) u_xx + lambda f(u)")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of interior grid nodes.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Bifurcation parameter.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Seed for random initial states.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest matrix size for the determinant tables.
    #[arg(long, global = true)]
    max_n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate all equilibria and write their profiles.
    Equilibria,
    /// Eigenvalues and stability of every equilibrium.
    Spectrum,
    /// Eigenvalues against the rank-one coupling for sign-changing equilibria.
    Scan,
    /// Integrate the flow from the configured initial state.
    Flow,
    /// Follow unstable directions to find connections between equilibria.
    Probe,
    /// Run the verification suite.
    Verify {
        /// Check a single exact identity instead of the whole suite.
        #[arg(long, value_enum)]
        lemma: Option<Lemma>,
    },
    /// Everything: all artifacts, the verification report and plots.
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum Lemma {
    Determinants,
}

fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => config::load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = common.grid {
        cfg.grid_n = n;
    }
    if let Some(l) = common.lambda {
        cfg.lambda = l;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(m) = common.max_n {
        cfg.max_n = m;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.to_string_lossy().into_owned();
    }
    cfg.validate().context("invalid configuration after command-line overrides")?;
    Ok(cfg)
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("NONLOCAL_CI_THREADS") else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .with_context(|| format!("NONLOCAL_CI_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    let cfg = resolve_config(&cli.common)?;
    let dir = PathBuf::from(&cfg.output_dir);
    commands::check_out_dir(&dir)?;
    let out = OutDir::create(dir)?;
    let outcome = match cli.command {
        Command::Equilibria => commands::equilibria(&cfg, &out)?,
        Command::Spectrum => commands::spectrum(&cfg, &out)?,
        Command::Scan => commands::scan(&cfg, &out)?,
        Command::Flow => commands::flow(&cfg, &out)?,
        Command::Probe => commands::probe(&cfg, &out)?,
        Command::Verify { lemma: Some(Lemma::Determinants) } => commands::verify_determinants(&cfg, &out)?,
        Command::Verify { lemma: None } => commands::verify(&cfg, &out)?,
        Command::Report => commands::report(&cfg, &out)?,
    };
    for line in &outcome.lines {
        println!("{line}");
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    Ok(outcome.success)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
