use std::path::PathBuf;
use std::process::ExitCode;

use bloch_purity_cli::{run, Overrides, RunConfig};
use clap::Parser;

/// Time-minimum purity control for two-level Lindblad systems.
#[derive(Debug, Parser)]
#[command(name = "bloch-purity", version)]
struct Args {
    /// Key-value run file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// One of model, apogee, simulate, constant, ritz, bangbang; overrides the file.
    #[arg(long)]
    command: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Ritz basis order M.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    initial_sign: Option<String>,
    /// printed or squared.
    #[arg(long)]
    cubic_variant: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BLOCH_LOG", "warn")).init();
    let args = Args::parse();
    let overrides = Overrides {
        command: args.command,
        out: args.out,
        seed: args.seed,
        order: args.order,
        restarts: args.restarts,
        dt: args.dt,
        horizon: args.horizon,
        initial_sign: args.initial_sign,
        cubic_variant: args.cubic_variant,
    };
    let result = RunConfig::from_file(&args.config, &overrides).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            for path in outcome.written {
                log::info!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
