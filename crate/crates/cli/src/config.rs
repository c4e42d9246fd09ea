//! Flat `key = value` configuration files.
//!
//! Keys are long flag names (`tau-max` or `tau_max`). Before parsing, every
//! key the chosen subcommand accepts and the command line does not already
//! set is appended as `--key value`. Keys no subcommand knows are a usage
//! error; keys that belong to other subcommands are skipped, so one file can
//! serve a whole workflow.

use std::collections::BTreeSet;
use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;

const GLOBALS_WITH_VALUE: [&str; 2] = ["--config", "--workers"];

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", n + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", n + 1));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Index of the subcommand token and the `--config` value, if any.
fn locate(argv: &[String]) -> (Option<usize>, Option<String>) {
    let mut config = None;
    let mut k = 1;
    while k < argv.len() {
        let tok = &argv[k];
        if let Some(v) = tok.strip_prefix("--config=") {
            config = Some(v.to_string());
        } else if GLOBALS_WITH_VALUE.contains(&tok.as_str()) {
            if tok == "--config" {
                config = argv.get(k + 1).cloned();
            }
            k += 1;
        } else if !tok.starts_with('-') {
            let rest = &argv[k + 1..];
            // --config may also follow the subcommand
            let mut j = 0;
            while j < rest.len() {
                if let Some(v) = rest[j].strip_prefix("--config=") {
                    config = Some(v.to_string());
                } else if rest[j] == "--config" {
                    config = rest.get(j + 1).cloned();
                }
                j += 1;
            }
            return (Some(k), config);
        }
        k += 1;
    }
    (None, config)
}

fn long_names(cmd: &clap::Command) -> BTreeSet<String> {
    cmd.get_arguments().filter_map(|a| a.get_long()).map(str::to_string).collect()
}

/// Returns `argv` with the config file's defaults appended, and the config
/// path that was applied.
pub fn apply_config(argv: Vec<String>) -> Result<(Vec<String>, Option<String>), String> {
    let (sub_at, config) = locate(&argv);
    let (Some(sub_at), Some(path)) = (sub_at, config) else {
        return Ok((argv, None));
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("cannot read config `{path}`: {e}"))?;
    let entries = parse_config(&text)?;

    let root = Cli::command();
    let Some(sub) = root.find_subcommand(&argv[sub_at]) else {
        return Ok((argv, Some(path)));
    };
    let mut accepted = long_names(sub);
    accepted.remove("config");
    let mut known: BTreeSet<String> = root.get_subcommands().flat_map(long_names).collect();
    known.extend(long_names(&root));

    let present: BTreeSet<String> = argv
        .iter()
        .filter_map(|t| t.strip_prefix("--"))
        .map(|t| t.split('=').next().unwrap_or(t).to_string())
        .collect();

    let mut out = argv;
    for (key, value) in entries {
        if key == "config" || !known.contains(&key) {
            return Err(format!("unknown config key `{key}`"));
        }
        if accepted.contains(&key) && !present.contains(&key) {
            out.push(format!("--{key}"));
            out.push(value);
        }
    }
    Ok((out, Some(path)))
}

/// `argv` without `--config <path>`, for the run manifest.
pub fn strip_config(argv: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len());
    let mut skip = false;
    for tok in argv {
        if skip {
            skip = false;
            continue;
        }
        if tok == "--config" {
            skip = true;
            continue;
        }
        if tok.starts_with("--config=") {
            continue;
        }
        out.push(tok.clone());
    }
    out
}
