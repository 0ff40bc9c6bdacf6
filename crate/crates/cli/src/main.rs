//! `deltalab --config run.toml` runs one experiment and writes its artifacts.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::Config;
use output::Failure;

#[derive(Debug, Parser)]
#[command(name = "deltalab", version, about = "Batch runner for random point-interaction experiments")]
struct Args {
    /// TOML experiment config.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long, value_name = "PATH")]
    output_dir: Option<PathBuf>,
}

fn execute(args: &Args) -> Result<(), Failure> {
    let mut cfg = Config::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = Some(seed);
    }
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = Some(dir.clone());
    }
    cfg.validate()?;
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(Failure::config(Some("workers".into()), "--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(Some("workers".into()), e.to_string()))?;
    }
    run::run(&cfg).map(|_| ())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let text = f.to_json();
            eprintln!("{text}");
            let dir = args.output_dir.clone().or_else(|| Config::load(&args.config).ok().and_then(|c| c.output_dir));
            if let Some(dir) = dir.filter(|d| d.is_dir()) {
                let _ = std::fs::write(dir.join("error.json"), text + "\n");
            }
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
