//! Batch front end for the `hbl-core` numerics.
//!
//! Every invocation writes its data files and a `manifest_<stem>.json` into
//! the output directory, the manifest also on failure. Exit codes: 0 success,
//! 2 invalid input, 3 solver disagreement, 4 unexpected blowup, 5 tuning
//! failure, 1 anything else (i/o, numerical breakdown).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::Value;

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod numfmt;
pub mod perturb;

use cli::Cli;
use manifest::{Clock, Outputs, RunManifest};

pub type Scheme = BTreeMap<String, Value>;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let clock = Clock::start();
    let argv: Vec<String> = argv.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let expanded = match config::expand(argv.clone()) {
        Ok(a) => a,
        Err(e) => return fail_early(&argv, &e.to_string(), clock),
    };
    let cli = match Cli::try_parse_from(&expanded) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                return code;
            }
            return fail_early(&argv, &e.kind().to_string(), clock);
        }
    };
    execute(&cli, argv, clock)
}

fn execute(cli: &Cli, argv: Vec<String>, clock: Clock) -> i32 {
    let stem = commands::stem(&cli.command);
    let mut out = Outputs::new(&cli.out);
    let mut scheme = Scheme::new();
    let result = commands::dispatch(cli, &mut out, &mut scheme);
    let (status, code, error, diagnostic) = match &result {
        Ok(()) => ("ok", 0, None, None),
        Err(e) => ("error", e.exit_code(), Some(e.to_string()), e.diagnostic().cloned()),
    };
    let manifest = RunManifest {
        schema: manifest::SCHEMA,
        schema_id: "hbl.manifest",
        tool: "hbl",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        command_line: argv,
        parameters: serde_json::to_value(cli).unwrap_or(Value::Null),
        scheme,
        outputs: out.files().to_vec(),
        status,
        exit_code: code,
        error: error.clone(),
        diagnostic,
        started_unix: clock.unix(),
        wall_clock_seconds: clock.elapsed(),
    };
    let written = manifest::write_manifest(&cli.out, &stem, &manifest);
    match (&result, written) {
        (Ok(()), Ok(path)) => {
            for f in out.files() {
                println!("{}", cli.out.join(&f.path).display());
            }
            println!("{}", path.display());
            0
        }
        (Ok(()), Err(e)) => {
            eprintln!("error: {e}");
            1
        }
        (Err(e), _) => {
            eprintln!("error: {e}");
            code
        }
    }
}

/// Records a failure that happened before the arguments could be resolved.
fn fail_early(argv: &[String], message: &str, clock: Clock) -> i32 {
    eprintln!("error: {message}");
    let command = argv.iter().find(|a| cli::SUBCOMMANDS.contains(&a.as_str())).cloned().unwrap_or_else(|| "hbl".into());
    let manifest = RunManifest {
        schema: manifest::SCHEMA,
        schema_id: "hbl.manifest",
        tool: "hbl",
        version: env!("CARGO_PKG_VERSION"),
        command: command.clone(),
        command_line: argv.to_vec(),
        parameters: Value::Null,
        scheme: Scheme::new(),
        outputs: Vec::new(),
        status: "error",
        exit_code: 2,
        error: Some(message.to_string()),
        diagnostic: None,
        started_unix: clock.unix(),
        wall_clock_seconds: clock.elapsed(),
    };
    let _ = manifest::write_manifest(&out_dir_of(argv), &command, &manifest);
    2
}

/// Output directory as `--out`, `HBL_OUT_DIR` or the default would resolve it.
fn out_dir_of(argv: &[String]) -> PathBuf {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            if let Some(v) = it.next() {
                return PathBuf::from(v);
            }
        } else if let Some(v) = a.strip_prefix("--out=") {
            return PathBuf::from(v);
        }
    }
    std::env::var_os("HBL_OUT_DIR").map_or_else(|| Path::new("hbl-out").to_path_buf(), PathBuf::from)
}
