use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use toral::Error;

mod commands;
mod config;

use commands::Output;
use config::{ExperimentConfig, Flags};

/// Thread count for parallel loops; defaults to all cores.
const THREADS_ENV: &str = "TORAL_THREADS";

#[derive(Parser)]
#[command(name = "toral", version, about = "Experiments on lattice-discretized toral automorphisms")]
#[command(after_help = "Exit codes: 0 success, 2 invalid input, 3 capacity exceeded.\n\
                        Set TORAL_THREADS to fix the worker thread count; output does not depend on it.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Family, spectral data and breaking-time estimates of a matrix
    #[command(after_help = "Prints key = value lines followed by one JSON document (schema toral.classify/1).")]
    Classify(Flags),
    /// Diameter formula against brute force for n = 0..=n-max
    #[command(after_help = "CSV columns: n, formula, bruteforce, rel_err (schema toral.diameters/1).")]
    Diameters(Flags),
    /// Dynamical localization and orbit shadowing checks (needs --seed)
    #[command(after_help = "Writes a JSON report (schema toral.localize/1), one entry per lattice size.")]
    Localize(Flags),
    /// Egorov defect of the observable for j = 0..=n-max
    #[command(after_help = "CSV columns: j, N, defect (schema toral.egorov/1).")]
    Egorov(Flags),
    /// Coherent-state against classical entropies (needs --seed)
    #[command(after_help = "CSV columns: n, N, S_cs, S_ks, gap = |S_cs - S_ks|/n, rate = S_cs/n \
                            (schema toral.entropy/1).\nThe JSON manifest (schema toral.entropy-manifest/1) \
                            holds breaking times, the log N fit, string gaps and continuity bounds.")]
    Entropy(Flags),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CapacityExceeded { .. } | Error::AlignmentRequired { .. } | Error::Overflow(_) => 3,
        _ => 2,
    }
}

fn write_out(path: Option<&str>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::InvalidArgument(format!("{p}: {e}"))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::InvalidArgument(format!("stdout: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (name, flags, body): (&str, &Flags, fn(&ExperimentConfig) -> Result<Output, Error>) = match &cli.command {
        Command::Classify(f) => ("classify", f, commands::cmd_classify),
        Command::Diameters(f) => ("diameters", f, commands::cmd_diameters),
        Command::Localize(f) => ("localize", f, commands::cmd_localize),
        Command::Egorov(f) => ("egorov", f, commands::cmd_egorov),
        Command::Entropy(f) => ("entropy", f, commands::cmd_entropy),
    };
    let cfg = ExperimentConfig::resolve(name, flags)?;
    let out = body(&cfg)?;
    write_out(cfg.output.as_deref(), &out.body)?;
    if let Some(manifest) = out.manifest {
        let path = cfg.manifest.clone().or_else(|| cfg.output.as_ref().map(|o| format!("{o}.json")));
        if let Some(p) = path {
            write_out(Some(&p), &manifest)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("pool initialised once");
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let debug = format!("{e:?}");
            let kind = debug.split([' ', '(', '{']).next().unwrap_or("");
            eprintln!("error: {kind}: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
