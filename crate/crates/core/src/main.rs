use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracfield::experiments::{run_file, RunOptions};

/// Fractional Cahn-Hilliard experiments driven by a key = value config.
#[derive(Parser, Debug)]
#[command(name = "fracfield", version)]
struct Cli {
    /// Path to the run configuration.
    config: PathBuf,
    /// Maximum number of worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory, overriding `output_dir` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn seed_from_env() -> Result<u64, String> {
    match std::env::var("FRACFIELD_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| format!("FRACFIELD_SEED must be an unsigned integer, got '{v}'")),
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = match seed_from_env() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run_file(&cli.config, &RunOptions { seed, output: cli.output }) {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", summary.output_dir.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
