//! `--config` files: one `key=value` per line, `#` starts a comment.
//!
//! Entries become flags inserted right after the subcommand name. A key that
//! also appears on the command line is dropped, so flags override the file
//! and the file overrides built-in defaults.

use std::fs;

use clap::{ArgAction, CommandFactory};

use crate::cli::{Cli, SUBCOMMANDS};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(CliError::Validation(format!("config line {}: empty key", i + 1)));
        }
        out.push(Entry { key, value: value.trim().to_string(), line: i + 1 });
    }
    Ok(out)
}

/// Value of `--config` in `argv`, if present.
fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn on_command_line(argv: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
}

/// `argv` with the entries of its `--config` file spliced in.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("cannot read config {path}: {e}")))?;
    let entries = parse(&text)?;
    let Some(pos) = argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let root = Cli::command();
    let sub = root.find_subcommand(&argv[pos]).expect("known subcommand");
    let mut injected = Vec::new();
    for e in entries {
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(e.key.as_str()))
            .ok_or_else(|| CliError::Validation(format!("config line {}: unknown key '{}'", e.line, e.key)))?;
        if matches!(e.key.as_str(), "config" | "out") {
            return Err(CliError::Validation(format!("config line {}: '{}' cannot be set from a config file", e.line, e.key)));
        }
        if on_command_line(&argv, &e.key) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match e.value.as_str() {
                "true" => injected.push(format!("--{}", e.key)),
                "false" => {}
                v => {
                    return Err(CliError::Validation(format!(
                        "config line {}: '{}' expects true or false, got '{v}'",
                        e.line, e.key
                    )))
                }
            }
        } else {
            injected.push(format!("--{}={}", e.key, e.value));
        }
    }
    let mut out = argv;
    out.splice(pos + 1..pos + 1, injected);
    Ok(out)
}
