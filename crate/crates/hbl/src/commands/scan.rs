use rayon::prelude::*;
use serde_json::json;

use hbl_core::spectral::{
    eigen_lowest, scan_crossing_on, unstable_count_on, RadialOperatorSpec, SpectralError, CROSSING_WIDTH,
};
use hbl_core::ModelParams;

use super::{finite, grid, grid_json};
use crate::cli::ScanArgs;
use crate::error::CliError;
use crate::manifest::{CsvRow, Outputs};
use crate::Scheme;

pub fn run(args: &ScanArgs, stem: &str, out: &mut Outputs, scheme: &mut Scheme) -> Result<(), CliError> {
    let g = grid(args.r_max, args.n)?;
    let (c_lo, c_hi) = (finite("c-lo", args.c_lo)?, finite("c-hi", args.c_hi)?);
    if c_lo >= c_hi || args.points < 2 {
        return Err(CliError::Validation("scan needs --c-lo < --c-hi and --points >= 2".into()));
    }
    ModelParams::three_d(args.p, c_lo)?;
    ModelParams::three_d(args.p, c_hi)?;
    RadialOperatorSpec::ell_limit(args.ell)?;
    scheme.insert("grid".into(), grid_json(&g));
    scheme.insert("crossing_width".into(), json!(CROSSING_WIDTH));

    let cs: Vec<f64> = (0..args.points)
        .map(|i| c_lo + (c_hi - c_lo) * i as f64 / (args.points - 1) as f64)
        .collect();
    let curve: Vec<(usize, f64, f64)> = cs
        .par_iter()
        .map(|&c| -> Result<_, CliError> {
            let m = ModelParams::three_d(args.p, c)?;
            let count = unstable_count_on(&m, args.ell, &g)?;
            let sp = eigen_lowest(&RadialOperatorSpec::ell(m, args.ell)?, &g, 2)?;
            Ok((count.count, sp.eigenvalues[0], sp.eigenvalues[1]))
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<CsvRow> = cs
        .iter()
        .zip(&curve)
        .map(|(&c, &(n, l0, l1))| CsvRow::numbers(vec![c, n as f64, l0, l1]))
        .collect();
    out.csv(&format!("{stem}.csv"), "hbl.scan.csv", &rows)?;

    let mut counts: Vec<usize> = curve.iter().map(|x| x.0).collect();
    counts.sort_unstable();
    counts.dedup();

    let crossing = match scan_crossing_on(args.p, args.ell, c_lo, c_hi, 0, &g) {
        Ok(r) => json!({
            "status": "CROSSING",
            "c_star": r.c_star,
            "bracket": [r.bracket.0, r.bracket.1],
            "count_lo": r.count_lo,
            "count_hi": r.count_hi,
        }),
        Err(SpectralError::NoCrossing { count }) => json!({
            "status": "NO_CROSSING",
            "c_star": null,
            "bracket": null,
            "count_lo": count,
            "count_hi": count,
        }),
        Err(e) => return Err(e.into()),
    };
    let mut body = json!({
        "p": args.p,
        "ell": args.ell,
        "c_lo": c_lo,
        "c_hi": c_hi,
        "points": args.points,
        "grid": grid_json(&g),
        "crossing_width": CROSSING_WIDTH,
        "counts_seen": counts,
    });
    body.as_object_mut().expect("object").extend(crossing.as_object().expect("object").clone());
    out.json(&format!("{stem}.json"), "hbl.scan", body)
}
