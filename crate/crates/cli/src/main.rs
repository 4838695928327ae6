mod args;
mod commands;
mod error;
mod manifest;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;
use manifest::RunManifest;

const THREADS_ENV: &str = "AOI_KIT_THREADS";

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

/// Parses `args` (without the binary name), runs the subcommand and writes
/// its manifest.
fn execute(args: Vec<String>) -> Result<(), CliError> {
    let cli = Cli::parse_from(std::iter::once("aoi-kit".to_owned()).chain(args.iter().cloned()));
    let (name, out, outcome) = match &cli.command {
        Command::Analytic(a) => ("analytic", a.output.out.clone(), commands::analytic(a)?),
        Command::Chain(a) => ("chain", a.output.out.clone(), commands::chain(a)?),
        Command::Simulate(a) => ("simulate", a.output.out.clone(), commands::simulate(a)?),
        Command::Figure3(a) => ("figure3", a.out.clone(), commands::figure3(a)?),
        Command::Compare(a) => ("compare", a.out.clone(), commands::compare(a)?),
        Command::Rerun(a) => return rerun(&a.manifest, a.out.as_deref()),
    };
    RunManifest::new(name, &args, outcome.params, outcome.outputs).write(&out)?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn rerun(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let manifest = RunManifest::read(path)?;
    if manifest.subcommand == "rerun" || manifest.args.first().map(String::as_str) == Some("rerun") {
        return Err(CliError::Config("a manifest cannot record another rerun".into()));
    }
    let mut args = manifest.args;
    if let Some(dir) = out {
        args.push("--out".into());
        args.push(dir.display().to_string());
    }
    execute(args)
}

fn main() -> ExitCode {
    let result = init_threads().and_then(|_| execute(std::env::args().skip(1).collect()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
