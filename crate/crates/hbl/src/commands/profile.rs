use hbl_core::ModelParams;

use super::finite;
use crate::cli::ProfileArgs;
use crate::error::CliError;
use crate::manifest::{CsvRow, Outputs};

pub fn run(args: &ProfileArgs, stem: &str, out: &mut Outputs) -> Result<(), CliError> {
    let params = ModelParams::new(args.d, args.p, args.c)?;
    let r_max = finite("r-max", args.r_max)?;
    if r_max <= 0.0 || args.n < 2 {
        return Err(CliError::Validation("profile needs --r-max > 0 and --n >= 2".into()));
    }
    let rows: Vec<CsvRow> = (0..args.n)
        .map(|i| {
            let r = r_max * i as f64 / (args.n - 1) as f64;
            CsvRow::numbers(vec![r, params.phi(r), params.potential_v(r), params.g(r)])
        })
        .collect();
    out.csv(&format!("{stem}.csv"), "hbl.profile.csv", &rows)
}
