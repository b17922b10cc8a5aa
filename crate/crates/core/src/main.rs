use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use witslab::cli::{dispatch, parse_config};

/// Cost-region laboratory for the vector-valued Witsenhausen counterexample.
#[derive(Debug, Parser)]
#[command(name = "witslab", version, about)]
struct Args {
    /// Path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,

    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Global seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,

    /// Cap the global worker-thread count
    #[arg(long)]
    threads: Option<usize>,

    /// Dump full trajectories as binary rows (t, x0, u1, x1, y1, u2), 64-bit
    /// little-endian floats
    #[arg(long)]
    dump_trajectories: bool,
}

fn run(args: Args) -> witslab::Result<()> {
    if let Some(k) = args.threads {
        // ignore the error if a pool already exists (tests, repeated calls)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = parse_config(&text)?;
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.dump_trajectories {
        config.dump_trajectories = true;
    }
    let summary = dispatch(&config)?;
    println!("{}", summary.message);
    println!("wrote {} files to {}", summary.files.len(), summary.out_dir.display());
    for f in &summary.files {
        println!("  {f}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // machine-readable error record on stderr
            let record = serde_json::json!({ "error": err.to_string() });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
