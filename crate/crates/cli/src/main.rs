mod commands;
mod error;
mod job;
mod svg;

use clap::Parser;
use commands::{Command, Output};
use error::CliError;
use job::JobFile;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Numerical experiments with sprays and connections.
#[derive(Debug, Parser)]
#[command(name = "spraylab", version)]
struct Args {
    command: Command,
    /// JSON job description.
    #[arg(long)]
    job: PathBuf,
    /// Seed for randomized commands; overrides the job's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the job's `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error| CliError::input(format!("cannot write {name} in {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}

fn run(args: &Args) -> Result<(), CliError> {
    let job = JobFile::load(&args.job)?;
    let outputs: Vec<Output> = commands::run(args.command, &job, args.seed.or(job.seed))?;
    let block = job.output.clone().unwrap_or_default();
    let dir = args.out.clone().or(block.dir).unwrap_or_else(|| PathBuf::from("."));
    let prefix = block.prefix.unwrap_or_default();
    let mut paths = Vec::with_capacity(outputs.len());
    for o in &outputs {
        let path = write_atomic(&dir, &format!("{prefix}{}", o.name), &o.contents)?;
        paths.push(path.display().to_string());
    }
    println!("{}", commands::summary(args.command, &paths));
    Ok(())
}

fn report(err: &CliError) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": err }));
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&CliError::input(e.to_string())),
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
