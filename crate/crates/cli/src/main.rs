use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dppm_cli::{run_experiment, CliError, ExperimentConfig};

/// Experiment runner for the differentially private power method.
///
/// Reads a flat key=value config (see the repository README for the grammar)
/// and writes deterministic CSV artifacts into the output directory.
#[derive(Parser, Debug)]
#[command(name = "dppm", version)]
struct Args {
    /// Path to the key=value experiment config.
    #[arg(long)]
    config: PathBuf,

    /// Output directory for CSV artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Override the config's seed (also overridable via DP_PPM_SEED).
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for parallel experiment cells (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(args: Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;

    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    if let Ok(env_seed) = std::env::var("DP_PPM_SEED") {
        let parsed = env_seed
            .parse()
            .map_err(|_| CliError::Config(format!("bad DP_PPM_SEED {env_seed:?}")))?;
        cfg.set_seed(parsed);
    }
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }

    let files = run_experiment(&cfg, &args.out)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
