use rayon::prelude::*;
use serde_json::{json, Value};

use hbl_core::ggmt::{appendix_g, best_point, linspace_step, GgmtConvention, GridPoint, QUAD_ABS_TOL, QUAD_REL_TOL};
use hbl_core::spectral::unstable_count;
use hbl_core::ModelParams;

use super::finite;
use crate::cli::{ConventionArg, GgmtArgs};
use crate::error::CliError;
use crate::manifest::{CsvRow, Outputs};
use crate::Scheme;

fn conventions(arg: ConventionArg) -> &'static [GgmtConvention] {
    match arg {
        ConventionArg::Both => &GgmtConvention::BOTH,
        ConventionArg::Theorem => &[GgmtConvention::Theorem4AlphaPlus1],
        ConventionArg::Appendix => &[GgmtConvention::Appendix4DeltaPlus1],
    }
}

fn axis(name: &str, lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, CliError> {
    let (lo, hi, step) = (finite(name, lo)?, finite(name, hi)?, finite(name, step)?);
    if !(step > 0.0 && hi >= lo) || (hi - lo) / step > 10_000.0 {
        return Err(CliError::Validation(format!("{name} grid needs min <= max and a positive step")));
    }
    Ok(linspace_step(lo, hi, step))
}

pub fn run(args: &GgmtArgs, stem: &str, out: &mut Outputs, scheme: &mut Scheme) -> Result<(), CliError> {
    scheme.insert("quad_rel_tol".into(), json!(QUAD_REL_TOL));
    scheme.insert("quad_abs_tol".into(), json!(QUAD_ABS_TOL));
    let mut rows = Vec::new();
    for &conv in conventions(args.convention) {
        let r = appendix_g(args.c, args.delta, args.kappa, Some(conv))?;
        rows.push(json!({
            "convention": conv.label(),
            "delta": args.delta,
            "kappa": args.kappa,
            "g": r.g,
            "integral": r.integral,
            "prefactor": r.prefactor,
            "support": r.support.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
            "quad_error": r.quad_error,
        }));
    }

    let count = if args.no_count {
        Value::Null
    } else {
        let m = ModelParams::three_d(3, args.c)?;
        let n = unstable_count(&m, 1)?;
        json!({ "ell": 1, "negative_count": n.count, "lowest": n.lowest })
    };

    let mut optimum = Vec::new();
    if args.optimize {
        let deltas = axis("delta", args.delta_min, args.delta_max, args.delta_step)?;
        let kappas = axis("kappa", args.kappa_min, args.kappa_max, args.kappa_step)?;
        let pairs: Vec<(f64, f64)> = deltas.iter().flat_map(|&d| kappas.iter().map(move |&k| (d, k))).collect();
        let mut table = Vec::new();
        for &conv in conventions(args.convention) {
            let points: Vec<GridPoint> = pairs
                .par_iter()
                .map(|&(delta, kappa)| {
                    appendix_g(args.c, delta, kappa, Some(conv)).map(|r| GridPoint { delta, kappa, g: r.g })
                })
                .collect::<Result<_, _>>()?;
            let best = best_point(&points).ok_or_else(|| CliError::Validation("empty optimisation grid".into()))?;
            optimum.push(json!({
                "convention": conv.label(),
                "delta": best.delta,
                "kappa": best.kappa,
                "g": best.g,
            }));
            table.extend(points.into_iter().map(|p| {
                CsvRow::labelled(vec![conv.label().to_string()], vec![p.delta, p.kappa, p.g])
            }));
        }
        out.csv(&format!("{stem}_table.csv"), "hbl.ggmt_table.csv", &table)?;
    }

    out.json(
        &format!("{stem}.json"),
        "hbl.ggmt",
        json!({
            "p": 3,
            "ell": 1,
            "c": args.c,
            "rows": rows,
            "measured": count,
            "optimum": if args.optimize { Value::from(optimum) } else { Value::Null },
        }),
    )
}
