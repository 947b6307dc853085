//! Command-line driver for the experiment runners.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nsaclab::harness::{run, ExperimentKind, RunConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "nsaclab",
    about = "Numerical laboratory for a diffuse-interface two-phase flow model and its sharp-interface limit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweep experiments.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the optimal transition profile and report its constants.
    Profile(CommonArgs),
    /// Time-integrate the coupled diffuse-interface system.
    Simulate(CommonArgs),
    /// Track a sharp front under convected mean curvature flow.
    Mcf(CommonArgs),
    /// Epsilon-refinement study of the diffuse-to-sharp interface error.
    Converge(CommonArgs),
    /// Smallest-eigenvalue sweep of the linearized operator.
    Spectrum(CommonArgs),
    /// Assemble expansion fields (kinematic defect, fiber corrector, heights).
    Expansion(CommonArgs),
}

fn load_config(args: &CommonArgs, kind: ExperimentKind) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_path(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::from_toml(&format!(
            "[run]\nkind = \"{}\"\n",
            format!("{kind:?}").to_lowercase()
        ))?,
    };
    if config.run.kind != kind {
        bail!(
            "config kind {:?} does not match the subcommand; adjust [run].kind",
            config.run.kind
        );
    }
    if let Some(threads) = args.threads {
        config.run.threads = threads;
    }
    config.validate().map_err(|e| anyhow::anyhow!(e))?;
    Ok(config)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (args, kind) = match &cli.command {
        Command::Profile(a) => (a, ExperimentKind::Profile),
        Command::Simulate(a) => (a, ExperimentKind::Simulate),
        Command::Mcf(a) => (a, ExperimentKind::Mcf),
        Command::Converge(a) => (a, ExperimentKind::Converge),
        Command::Spectrum(a) => (a, ExperimentKind::Spectrum),
        Command::Expansion(a) => (a, ExperimentKind::Expansion),
    };
    let config = load_config(args, kind)?;
    let manifest = run(&config, &args.out).map_err(|e| anyhow::anyhow!(e))?;
    println!(
        "{} finished in {:.2} s; {} artifact(s) in {}",
        manifest.kind,
        manifest.wall_time_s,
        manifest.outputs.len(),
        args.out.display()
    );
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    for o in &manifest.outputs {
        println!("  {o}");
    }
    Ok(())
}
