mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit code for malformed or mismatched input files.
const EXIT_INPUT: u8 = 2;

fn threads(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("PZERO_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n = v
                .trim()
                .parse()
                .map_err(|_| anyhow::anyhow!("PZERO_THREADS must be a positive integer, got {v:?}"))?;
            Ok(Some(n))
        }
        _ => Ok(None),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = threads(cli.threads)? {
        anyhow::ensure!(n > 0, "thread count must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Detect(a) => commands::detect(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Sweep(a) => commands::sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let input = err
                .chain()
                .filter_map(|e| e.downcast_ref::<pzero::Error>())
                .any(pzero::Error::is_input_format);
            ExitCode::from(if input { EXIT_INPUT } else { 1 })
        }
    }
}
