use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nnlif_cli::{run_to_dir, CliError, Scenario};

/// Numerical experiments on the delayed NNLIF mean-field equation.
#[derive(Debug, Parser)]
#[command(name = "nnlif-lab", version)]
struct Args {
    /// simulate, steady, stefan-oracle, entropy, periodicity-scan,
    /// particle-compare or supersolution-check
    scenario: String,
    /// Scenario config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides `[output] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn thread_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NNLIF_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&k| k > 0).ok_or_else(|| {
        CliError::Validation(format!("NNLIF_THREADS = {raw:?} is not a positive count"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Io(format!("cannot start the thread pool: {e}")))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            // clap's own exit code 2 matches the validation code
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = thread_pool()
        .and_then(|()| Scenario::parse(&args.scenario))
        .and_then(|s| run_to_dir(s, &args.config, args.out.as_deref(), args.seed));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("nnlif-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
