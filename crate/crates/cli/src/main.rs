use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rio_cli::commands::write_witness_csv;
use rio_cli::json::to_json;
use rio_cli::{CliError, Inequality, RunArgs, RunConfig};

#[derive(Parser)]
#[command(name = "rio", version, about = "Regime classification and embedding audits for weighted oscillation spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a (space, weight, r) triple.
    Classify(RunArgs),
    /// Audit one inequality over a seeded corpus; `--out` receives the per-function CSV.
    Verify {
        #[arg(long, value_enum)]
        inequality: Inequality,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Witness sequence for a divergent kernel, as CSV.
    Witness(RunArgs),
    /// Classification plus every applicable audit.
    Report(RunArgs),
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, body)?,
        None => io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Classify(a) => emit(a.out.as_deref(), &to_json(&rio_cli::classify(&RunConfig::try_from(&a)?)?)),
        Command::Verify { inequality, run } => {
            let out = rio_cli::verify(&RunConfig::try_from(&run)?, inequality)?;
            if let Some(p) = &run.out {
                let mut w = BufWriter::new(File::create(p)?);
                out.write_csv(&mut w)?;
                w.flush()?;
            }
            emit(None, &to_json(&out))
        }
        Command::Witness(a) => {
            let rep = rio_cli::witness(&RunConfig::try_from(&a)?)?;
            let mut buf = Vec::new();
            write_witness_csv(&rep, &mut buf)?;
            emit(a.out.as_deref(), &String::from_utf8_lossy(&buf))
        }
        Command::Report(a) => {
            let bundle = rio_cli::report(&RunConfig::try_from(&a)?)?;
            emit(a.out.as_deref(), &to_json(&bundle))?;
            if bundle.all_failed() {
                return Err(CliError::Failed("every applicable audit failed".into()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("RIO_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
