use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use duelbandit::harness::{self, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "duelbandit", version, about = "Dueling-bandit simulation harness")]
struct Cli {
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base seed (overrides the config's `seeds.base`).
    #[arg(long, global = true)]
    seed_base: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Write a named instance (trivial, easy, medium, hard) as a CSV matrix.
    GenMatrix { name: String, arms: usize, path: PathBuf },
    /// List registered algorithms.
    ListAlgos {
        #[arg(long)]
        json: bool,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(base) = cli.seed_base {
                cfg.seeds.base = base;
            }
            if let Some(out) = cli.out {
                cfg.output_dir = Some(out);
            }
            let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
            if cli.threads == Some(0) {
                anyhow::bail!("--threads must be at least 1");
            }
            let result = harness::run_experiment(&cfg, cli.threads)?;
            harness::write_outputs(&result, &out)?;
            for a in harness::summary(&result).algorithms {
                println!(
                    "{:<16} final regret {} ± {} (corrupted {})",
                    a.algorithm,
                    harness::format_g12(a.final_mean),
                    harness::format_g12(a.final_std),
                    a.corruption_total
                );
            }
            println!("wrote {}", out.display());
        }
        Command::GenMatrix { name, arms, path } => {
            harness::gen_matrix(&name, arms, &path)?;
            println!("wrote {}", path.display());
        }
        Command::ListAlgos { json } => {
            if json {
                println!("{}", harness::list_algorithms_json());
            } else {
                print!("{}", harness::list_algorithms_text());
            }
        }
    }
    Ok(())
}
