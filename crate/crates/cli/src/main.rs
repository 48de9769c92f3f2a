use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bakerevt_core::experiment::{parse_config, resolve_out_dir, run, write_outputs};
use bakerevt_core::Error;
use clap::{Args, Parser, Subcommand};

/// Extreme value and recurrence experiments for the baker's map.
#[derive(Parser)]
#[command(name = "bakerevt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Block maxima against the Gumbel law.
    Gumbel(RunArgs),
    /// Extremal index from first return times.
    Ei(RunArgs),
    /// Visit counts against Poisson and Polya-Aeppli laws.
    Visits(RunArgs),
    /// Cluster size law at a periodic center.
    Cluster(RunArgs),
    /// Ulam spectra of the open map.
    Ulam(RunArgs),
    /// Local dimension of the SRB measure.
    Dimension(RunArgs),
    /// Annulus ratios and their scaling exponent.
    Annulus(RunArgs),
    /// Quadrature constants for Euclidean balls at periodic points.
    Geometry(RunArgs),
    /// Shift against coordinate map on random symbol windows.
    Conjugacy(RunArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Self::Gumbel(a) => ("gumbel", a),
            Self::Ei(a) => ("ei", a),
            Self::Visits(a) => ("visits", a),
            Self::Cluster(a) => ("cluster", a),
            Self::Ulam(a) => ("ulam", a),
            Self::Dimension(a) => ("dimension", a),
            Self::Annulus(a) => ("annulus", a),
            Self::Geometry(a) => ("geometry", a),
            Self::Conjugacy(a) => ("conjugacy", a),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides the config and BAKEREVT_OUT_DIR.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Exit status for configs that fail to parse or validate.
const EXIT_CONFIG: u8 = 2;

fn execute(name: &str, args: &RunArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = parse_config(&text)?;
    if cfg.command() != name {
        anyhow::bail!(Error::Config {
            line: 1,
            column: 1,
            message: format!("config is for \"{}\", not \"{name}\"", cfg.command()),
        });
    }
    if let Some(seed) = args.seed {
        if !cfg.set_seed(seed) {
            log::warn!("{name} is deterministic; --seed ignored");
        }
    }
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = args.workers {
            b = b.num_threads(w.max(1));
        }
        b.build().context("starting worker pool")?
    };
    let result = pool
        .install(|| run(&cfg))
        .with_context(|| format!("running {}", args.config.display()))?;
    let dir = resolve_out_dir(args.out_dir.as_deref(), &cfg);
    let manifest = write_outputs(&dir, &cfg, &result)
        .with_context(|| format!("writing results to {}", dir.display()))?;
    for f in &manifest.files {
        println!("{}  {}", f.sha256, dir.join(&f.name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (name, args) = cli.command.parts();
    match execute(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let config_error = matches!(e.downcast_ref::<Error>(), Some(Error::Config { .. }));
            eprintln!("error: {e:#}");
            if config_error {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
