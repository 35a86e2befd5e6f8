use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use fene::cli_io::{execute, load_config, Mode};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliMode {
    Simulate,
    BdOracle,
    ValidateInequalities,
    Diagnose,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Simulate => Mode::Simulate,
            CliMode::BdOracle => Mode::BdOracle,
            CliMode::ValidateInequalities => Mode::ValidateInequalities,
            CliMode::Diagnose => Mode::Diagnose,
        }
    }
}

/// FENE dumbbell micro-macro simulator and verification harness.
#[derive(Debug, Parser)]
#[command(name = "fene", version)]
struct Cli {
    mode: CliMode,
    #[arg(long)]
    config: PathBuf,
    /// CSV output path, overriding `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed, overriding `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("FENE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let result = load_config(&cli.config, cli.mode.into(), cli.seed, cli.out).and_then(|spec| execute(&spec));
    match result {
        Ok(out) => {
            println!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
