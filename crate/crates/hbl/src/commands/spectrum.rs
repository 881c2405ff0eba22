use rayon::prelude::*;
use serde_json::{json, Value};

use hbl_core::spectral::{
    eigen_lowest, shoot_lowest, unstable_count_spec, Grid, RadialOperatorSpec, Spectrum, MARGINAL,
};
use hbl_core::ModelParams;

use super::{grid, grid_json};
use crate::cli::SpectrumArgs;
use crate::error::CliError;
use crate::manifest::{CsvRow, Outputs};
use crate::Scheme;

struct Solved {
    spec: RadialOperatorSpec,
    matrix: Spectrum,
    shooting: Spectrum,
    negative: usize,
    marginal: usize,
}

fn solve(spec: RadialOperatorSpec, g: &Grid, k: usize) -> Result<Solved, CliError> {
    let matrix = eigen_lowest(&spec, g, k)?;
    let shooting = shoot_lowest(&spec, g, k)?;
    let count = unstable_count_spec(&spec, g)?;
    Ok(Solved { spec, matrix, shooting, negative: count.count, marginal: count.marginal })
}

fn spectrum_json(s: &Spectrum) -> Value {
    json!({
        "method": s.method.label(),
        "lambda_b": s.eigenvalues,
        "lambda_l": s.lambda_l(),
        "errors": s.errors,
    })
}

pub fn run(args: &SpectrumArgs, stem: &str, out: &mut Outputs, scheme: &mut Scheme) -> Result<(), CliError> {
    let g = grid(args.r_max, args.n)?;
    if args.k == 0 {
        return Err(CliError::Validation("--k must be at least 1".into()));
    }
    let mut ells = args.ell.clone();
    ells.sort_unstable();
    ells.dedup();
    let params = if args.limit { None } else { Some(ModelParams::three_d(args.p, args.c)?) };
    let mut specs = Vec::new();
    for &ell in &ells {
        specs.push(match params {
            Some(m) => RadialOperatorSpec::ell(m, ell)?,
            None => RadialOperatorSpec::ell_limit(ell)?,
        });
    }
    if args.susy {
        specs.push(match params {
            Some(m) => RadialOperatorSpec::susy(m)?,
            None => RadialOperatorSpec::susy_limit(),
        });
    }
    scheme.insert("grids".into(), json!([grid_json(&g), grid_json(&g.refined()), grid_json(&g.refined().refined())]));
    scheme.insert("marginal".into(), json!(MARGINAL));
    scheme.insert("shooting_rtol".into(), json!(hbl_core::spectral::ShootingTolerance::default().rtol));
    scheme.insert("shooting_atol".into(), json!(hbl_core::spectral::ShootingTolerance::default().atol));

    let solved: Vec<Solved> =
        specs.into_par_iter().map(|s| solve(s, &g, args.k)).collect::<Result<Vec<_>, _>>()?;

    let mut operators = Vec::new();
    let mut rows = Vec::new();
    for s in &solved {
        let label = s.spec.kind().label();
        let ell = s.spec.angular_index();
        let gap = s
            .matrix
            .eigenvalues
            .iter()
            .zip(&s.shooting.eigenvalues)
            .fold(0.0f64, |a, (m, t)| a.max((m - t).abs()));
        operators.push(json!({
            "operator": label,
            "ell": ell,
            "multiplicity": s.spec.multiplicity(),
            "matrix": spectrum_json(&s.matrix),
            "shooting": spectrum_json(&s.shooting),
            "max_solver_gap": gap,
            "negative_count": s.negative,
            "marginal_count": s.marginal,
        }));
        for i in 0..args.k {
            rows.push(CsvRow::labelled(
                vec![label.to_string(), ell.map_or_else(String::new, |l| l.to_string()), i.to_string()],
                vec![
                    s.matrix.eigenvalues[i],
                    s.matrix.errors[i],
                    s.shooting.eigenvalues[i],
                    s.shooting.errors[i],
                    -s.matrix.eigenvalues[i],
                ],
            ));
        }
    }
    out.json(
        &format!("{stem}.json"),
        "hbl.spectrum",
        json!({
            "limit": args.limit,
            "d": 3,
            "p": params.map(|m| m.p()),
            "c": params.map(|m| m.c()),
            "k": args.k,
            "convention": "B",
            "grid": grid_json(&g),
            "operators": operators,
        }),
    )?;
    out.csv(&format!("{stem}.csv"), "hbl.spectrum.csv", &rows)
}
