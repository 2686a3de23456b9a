mod config;
mod manifest;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Scenario};
use manifest::{file_entry, git_revision, Manifest};

#[derive(Parser)]
#[command(name = "rde-lab", version, about = "Experiments on skew-product random dynamical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the available scenarios and their required parameters.
    ListScenarios,
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, threads, seed } => run(&config, out, threads, seed),
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<18}{} [{}]", s.name(), s.describe(), s.required().join(", "));
            }
            Ok(())
        }
        Command::Validate { config } => ExperimentConfig::load(&config).map(|c| println!("ok: {} scenario", c.scenario)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(path: &Path, out: Option<PathBuf>, threads: Option<usize>, seed: Option<u64>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = out.or_else(|| cfg.output.clone()).context("no output directory: pass --out or set `output`")?;
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring the thread pool")?;
    }
    let start = Instant::now();
    let artifacts = scenarios::run(&cfg)?;
    let wall = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = artifacts.files;
    files.push(("summary.json".into(), serde_json::to_vec_pretty(&artifacts.summary)?));
    let mut entries = Vec::with_capacity(files.len());
    for (name, content) in &files {
        std::fs::write(out.join(name), content).with_context(|| format!("writing {name}"))?;
        entries.push(file_entry(name, content));
    }
    let manifest = Manifest {
        tool: "rde-lab",
        version: env!("CARGO_PKG_VERSION"),
        scenario: cfg.scenario.to_string(),
        seed: cfg.seed,
        config: serde_json::to_value(&cfg)?,
        git_revision: git_revision(path.parent().unwrap_or(Path::new("."))),
        wall_time_s: wall,
        threads: rayon::current_num_threads(),
        invalid_orbits: artifacts.invalid_orbits,
        files: entries,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    println!("{} finished in {wall:.2}s; outputs in {}", cfg.scenario, out.display());
    Ok(())
}
