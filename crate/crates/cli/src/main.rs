// Copyright 2026 The critquench Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use critquench_cli::{run, Command, Config, RunManifest};

#[derive(Parser)]
#[command(
    name = "critquench",
    version,
    about = "Optimal control of a quenched Ising chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Samples per pulse.
    #[arg(long, global = true)]
    n_steps: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Per-mode excitation spectrum of one pulse.
    Simulate,
    /// Optimized vs. baseline densities over a τ grid, and τ_c.
    Sweep,
    /// D(r) on an exponent grid.
    Landscape,
    /// Speed-limit estimates per chain size.
    Qsl,
    /// Noise, initial-state and spin-count robustness.
    Robustness,
    /// Gradient descent over every pulse sample.
    OptimizeFree,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Sweep => Command::Sweep,
            Cmd::Landscape => Command::Landscape,
            Cmd::Qsl => Command::Qsl,
            Cmd::Robustness => Command::Robustness,
            Cmd::OptimizeFree => Command::OptimizeFree,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    let path = cli.config.context("--config is required")?;
    let command = Command::from(cli.command);
    if path.extension().is_some_and(|e| e == "json") {
        let earlier = RunManifest::load(&path)?;
        if earlier.command != command.name() {
            bail!("{} is a `{}` manifest", path.display(), earlier.command);
        }
    }
    let mut cfg = Config::load(&path)?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.n_steps.is_some() {
        cfg.n_steps = cli.n_steps;
    }
    let manifest = run(command, &cfg, &cli.out)?;
    for f in &manifest.failures {
        eprintln!("failed: {f}");
    }
    eprintln!(
        "{command}: {} outputs in {} ({:.1} s)",
        manifest.outputs.len(),
        cli.out.display(),
        manifest.duration_seconds
    );
    Ok(manifest.success())
}
