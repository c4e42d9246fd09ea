//! `price-response`: batch driver for the price response analyses.
//!
//! Every subcommand writes its outputs under `--out` and prints a JSON run
//! manifest to stdout, which is also saved as `<out>/<command>.manifest.json`.
//! Exit status is 0 on success, 1 for data errors and 2 for usage errors.

mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::output::{write_json, Manifest};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args_os().map(|a| a.to_string_lossy().into_owned()).collect();
    let (argv, config_file) = match config::apply_config(argv) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit());

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    let result = pool.install(|| commands::run(&cli.command));
    let run = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.command.name());
            return ExitCode::from(1);
        }
    };

    let out_dir = match &cli.command {
        args::Command::Ingest(a) => &a.out.out,
        args::Command::Synth(a) => &a.out.out,
        args::Command::Signs(a) => &a.out.out,
        args::Command::Response(a) => &a.out.out,
        args::Command::ShiftScan(a) => &a.out.out,
        args::Command::Decompose(a) => &a.out.out,
        args::Command::SpreadGroups(a) => &a.out.out,
        args::Command::Diagnose(a) => &a.out.out,
    };
    let params = serde_json::to_value(&cli.command).unwrap_or(serde_json::Value::Null);
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        argv: config::strip_config(&argv),
        config_file,
        workers: cli.workers,
        params,
        seed: run.seed,
        inputs: run.inputs,
        outputs: run.outputs.files,
        warnings: run.warnings,
        summary: run.summary,
    };
    let path = out_dir.join(format!("{}.manifest.json", cli.command.name()));
    if let Err(e) = output::write_atomic(&path, |w| write_json(w, &manifest)) {
        eprintln!("error: cannot write manifest {}: {e}", path.display());
        return ExitCode::from(1);
    }
    match serde_json::to_string_pretty(&manifest) {
        Ok(text) => println!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    ExitCode::SUCCESS
}
