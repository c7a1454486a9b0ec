use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mitotrack", version, about = "Mitosis-aware multi-hypothesis cell tracking")]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Track detections into a lineage.
    Track {
        detections: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides rng_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Convert per-frame network outputs (.nft) into detections.csv.
    Densify {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a dividing colony with ground truth.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a predicted lineage against ground truth.
    Evaluate {
        pred: PathBuf,
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Centroid distance below which a prediction matches, in px.
        #[arg(long, default_value_t = 5.0)]
        radius: f64,
    },
    /// Time the Hungarian solver on random association problems.
    BenchAssign {
        #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32, 64, 128])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MITOTRACK_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.cmd {
        Cmd::Track {
            detections,
            config,
            out,
            seed,
        } => {
            mitotrack_cli::cmd_track(&detections, config.as_deref(), &out, seed)?;
        }
        Cmd::Densify { manifest, out } => {
            let n = mitotrack_cli::cmd_densify(&manifest, &out)?;
            log::info!("{n} detections");
        }
        Cmd::Simulate { config, out, seed } => mitotrack_cli::cmd_simulate(config.as_deref(), &out, seed)?,
        Cmd::Evaluate { pred, gt, out, radius } => {
            let report = mitotrack_cli::cmd_evaluate(&pred, &gt, &out, radius)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Cmd::BenchAssign {
            sizes,
            trials,
            seed,
            out,
        } => {
            for r in mitotrack_cli::cmd_bench_assign(&sizes, trials, seed, &out)? {
                println!(
                    "N={:4}  standard {:.3e}s  splits-free {:.3e}s  splits-forbidden {:.3e}s",
                    r.sizes, r.standard, r.splits_free, r.splits_forbidden
                );
            }
        }
    }
    Ok(())
}
