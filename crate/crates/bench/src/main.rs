use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pce_bench::{run, Experiment, Manifest};

#[derive(Parser, Debug)]
#[command(name = "pce-bench", about = "Check extrapolation, ZNE and classical-shadow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment manifest (JSON); defaults apply to absent fields.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    /// Master seed, overriding the manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overriding the manifest.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Shot budget, overriding the manifest (shots per circuit for shadows).
    #[arg(long, global = true)]
    shots: Option<usize>,

    /// Heatmap over the full qubit and depth grid.
    #[arg(long, global = true)]
    full_grid: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check extrapolation against the ZNE scan on random Clifford circuits.
    Heatmap,
    /// Logical-error rates with m noiseless checks against the Markov model.
    MarkovCheck,
    /// Unmitigated, robust and check-protected shadow estimates.
    ShadowCompare,
    /// Check extrapolation of a single payload.
    Pce,
    /// Zero-noise extrapolation of a single payload.
    Zne,
    /// Writes seeded random Clifford circuits.
    GenCircuit,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Heatmap => Experiment::Heatmap,
            Command::MarkovCheck => Experiment::MarkovCheck,
            Command::ShadowCompare => Experiment::ShadowCompare,
            Command::Pce => Experiment::Pce,
            Command::Zne => Experiment::Zne,
            Command::GenCircuit => Experiment::GenCircuit,
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let experiment = cli.command.experiment();
    let mut manifest = match &cli.manifest {
        Some(path) => Manifest::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => Manifest::for_experiment(experiment),
    };
    if manifest.experiment != experiment {
        anyhow::bail!("manifest describes '{}', not '{experiment}'", manifest.experiment);
    }
    if let Some(seed) = cli.seed {
        manifest.seed = seed;
    }
    if let Some(dir) = cli.out_dir {
        manifest.out_dir = dir;
    }
    if let Some(shots) = cli.shots {
        match experiment {
            Experiment::ShadowCompare => manifest.shadow.shots_per_circuit = shots,
            _ => manifest.shots = shots,
        }
    }
    if cli.full_grid {
        manifest.use_full_grid();
    }
    let output = run(&manifest)?;
    output.write(&manifest.out_dir).with_context(|| format!("writing {}", manifest.out_dir.display()))?;
    for (name, _) in &output.files {
        println!("{}", manifest.out_dir.join(name).display());
    }
    Ok(())
}
