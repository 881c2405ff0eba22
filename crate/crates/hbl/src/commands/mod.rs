use serde_json::{json, Value};

use hbl_core::spectral::Grid;

use crate::cli::{Cli, Command, Mode};
use crate::error::CliError;
use crate::manifest::Outputs;
use crate::Scheme;

pub mod evolve;
pub mod ggmt;
pub mod profile;
pub mod report;
pub mod scan;
pub mod spectrum;

/// File-name stem shared by a command's data files and its manifest.
/// Built from the raw flags so it exists even when validation fails.
pub fn stem(command: &Command) -> String {
    match command {
        Command::Profile(a) => format!("profile_d{}_p{}_c{}", a.d, a.p, a.c),
        Command::Spectrum(a) if a.limit => "spectrum_limit".into(),
        Command::Spectrum(a) => format!("spectrum_p{}_c{}", a.p, a.c),
        Command::Ggmt(a) => format!("ggmt_c{}", a.c),
        Command::Scan(a) => format!("scan_p{}_ell{}", a.p, a.ell),
        Command::Evolve(a) => {
            let mode = match a.mode {
                Mode::Linear => format!("linear_ell{}", a.ell),
                Mode::Similarity => "similarity".into(),
                Mode::Physical => "physical".into(),
            };
            format!("evolve_{mode}_p{}_c{}", a.p, a.c)
        }
        Command::Report(_) => "report".into(),
    }
}

pub fn dispatch(cli: &Cli, out: &mut Outputs, scheme: &mut Scheme) -> Result<(), CliError> {
    let stem = stem(&cli.command);
    match &cli.command {
        Command::Profile(a) => profile::run(a, &stem, out),
        Command::Spectrum(a) => spectrum::run(a, &stem, out, scheme),
        Command::Ggmt(a) => ggmt::run(a, &stem, out, scheme),
        Command::Scan(a) => scan::run(a, &stem, out, scheme),
        Command::Evolve(a) => evolve::run(a, &stem, out, scheme),
        Command::Report(a) => report::run(a, &cli.out, out),
    }
}

pub(crate) fn grid(r_max: f64, n: usize) -> Result<Grid, CliError> {
    Ok(Grid::new(r_max, n)?)
}

pub(crate) fn grid_json(g: &Grid) -> Value {
    json!({ "r_max": g.r_max(), "n": g.n(), "h": g.h() })
}

pub(crate) fn finite(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Validation(format!("--{name} must be finite")))
    }
}
