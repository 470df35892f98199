use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use overlay_core::experiment::{calibrate, run_experiment, ExperimentConfig};
use overlay_core::profile::Profile;
use overlay_core::topology;

#[derive(Parser)]
#[command(name = "overlay", about = "Overlay construction and hybrid graph algorithm experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a topology in graph text format.
    Gen(CommonArgs),
    /// Run a pipeline for each seed.
    Run(CommonArgs),
    /// Run a pipeline with every oracle check enabled.
    Verify(CommonArgs),
    /// Measure the calibrated thresholds and write a profile file.
    Calibrate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// `key=value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// paper, desk or custom.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    pipeline: Option<String>,
    /// Output directory for `run`/`verify`, output file for `gen`/`calibrate`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    verify: bool,
    /// Dump the engine message trace of expander runs.
    #[arg(long)]
    trace: bool,
    /// all, none, or a comma list of spectral, exact_phi, diameter, min_cut.
    #[arg(long)]
    metrics: Option<String>,
    /// Extra `key=value` overrides applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl CommonArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut text = match &self.config {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => String::new(),
        };
        let mut push = |k: &str, v: String| {
            text.push('\n');
            text.push_str(k);
            text.push('=');
            text.push_str(&v);
        };
        if let Some(v) = &self.profile {
            push("profile", v.clone());
        }
        if let Some(v) = &self.topology {
            push("topology", v.clone());
        }
        if let Some(v) = self.n {
            push("n", v.to_string());
        }
        if let Some(v) = self.seed {
            push("seed", v.to_string());
        }
        if let Some(v) = self.seeds {
            push("seeds", v.to_string());
        }
        if let Some(v) = &self.pipeline {
            push("pipeline", v.clone());
        }
        if let Some(v) = &self.out {
            push("out", v.display().to_string());
        }
        if self.verify {
            push("verify", "true".into());
        }
        if self.trace {
            push("trace", "true".into());
        }
        if let Some(v) = &self.metrics {
            push("metrics", v.clone());
        }
        for kv in &self.set {
            text.push('\n');
            text.push_str(kv);
        }
        Ok(ExperimentConfig::from_kv(&text)?)
    }
}

fn write_or_print(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen(args) => {
            let cfg = args.config()?;
            let g = topology::generate(&cfg.topology, cfg.n, cfg.seed)?;
            write_or_print(cfg.out.as_ref(), &g.to_text())?;
            Ok(true)
        }
        Command::Run(args) => run_pipeline(args.config()?),
        Command::Verify(args) => {
            let mut cfg = args.config()?;
            cfg.verify = true;
            run_pipeline(cfg)
        }
        Command::Calibrate(args) => {
            let cfg = args.config()?;
            let first = args.seed.unwrap_or(1000);
            let seeds = args.seeds.unwrap_or(5);
            let (profile, report) = calibrate(&cfg.profile, first, seeds)?;
            eprint!("{report}");
            write_or_print(cfg.out.as_ref(), &Profile::to_text(&profile))?;
            Ok(true)
        }
    }
}

fn run_pipeline(cfg: ExperimentConfig) -> Result<bool> {
    let output = run_experiment(&cfg)?;
    match &cfg.out {
        Some(dir) => output
            .write_to(dir)
            .with_context(|| format!("writing {}", dir.display()))?,
        None => print!("{}", output.file("summary.txt").unwrap_or_default()),
    }
    for f in &output.failures {
        eprintln!("invariant failed: {f}");
    }
    Ok(output.failures.is_empty())
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
