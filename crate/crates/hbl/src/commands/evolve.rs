use serde_json::json;

use hbl_core::evolution::{
    checkpoint_times, evolve_physical, initial_data_op, linear_fit, rescaled_error, tune_blowup_time, EvolutionError,
    HistoryRow, PhysicalConfig, PhysicalScheme, SimilarityConfig, SimilarityState, SimilarityStepper, TuneConfig,
    blowup_threshold,
};
use hbl_core::spectral::{discrete_eigenfunction, Grid, RadialOperatorSpec};
use hbl_core::ModelParams;

use super::{finite, grid, grid_json};
use crate::cli::{EvolveArgs, Mode, SchemeArg};
use crate::error::CliError;
use crate::manifest::{CsvRow, Outputs};
use crate::perturb::Perturbation;
use crate::Scheme;

pub fn run(args: &EvolveArgs, stem: &str, out: &mut Outputs, scheme: &mut Scheme) -> Result<(), CliError> {
    let params = ModelParams::three_d(args.p, args.c)?;
    let perturb: Perturbation = args.perturb.parse().map_err(CliError::Validation)?;
    finite("tau-end", args.tau_end)?;
    if args.tau_end <= 0.0 {
        return Err(CliError::Validation("--tau-end must be positive".into()));
    }
    match args.mode {
        Mode::Linear => linear(args, &params, perturb, stem, out, scheme),
        Mode::Similarity => similarity(args, &params, perturb, stem, out, scheme),
        Mode::Physical => physical(args, &params, perturb, stem, out, scheme),
    }
}

fn closed_form(perturb: Perturbation) -> Result<impl Fn(f64) -> f64 + Copy, CliError> {
    if perturb.eval(0.0).is_none() {
        return Err(CliError::Validation(
            "eig:<k> perturbations live on the similarity grid; use them with --mode linear".into(),
        ));
    }
    Ok(move |r: f64| perturb.eval(r).unwrap_or(0.0))
}

fn history_rows(history: &[HistoryRow]) -> Vec<CsvRow> {
    history.iter().map(|h| CsvRow::numbers(vec![h.tau, h.sup_norm, h.sigma_norm, h.unstable_coef])).collect()
}

fn similarity_scheme(scheme: &mut Scheme, params: &ModelParams, g: &Grid, args: &EvolveArgs) {
    scheme.insert("grid".into(), grid_json(g));
    scheme.insert("dtau".into(), json!(args.dtau));
    scheme.insert("integrator".into(), json!("IMEX_EULER_CONJUGATED"));
    scheme.insert("blowup_threshold".into(), json!(blowup_threshold(params, g)));
}

/// Slope of `ln ‖f‖_σ` over `τ ∈ [τ_end/8, τ_end/2]`.
fn growth_rate(history: &[HistoryRow], tau_end: f64) -> (f64, f64, (f64, f64)) {
    let window = (tau_end / 8.0, tau_end / 2.0);
    let pts: Vec<(f64, f64)> = history
        .iter()
        .filter(|h| h.tau >= window.0 - 1e-12 && h.tau <= window.1 + 1e-12 && h.sigma_norm > 0.0)
        .map(|h| (h.tau, h.sigma_norm.ln()))
        .collect();
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN, window);
    }
    let (slope, _, r2) = linear_fit(&pts);
    (slope, r2, window)
}

fn linear(
    args: &EvolveArgs,
    params: &ModelParams,
    perturb: Perturbation,
    stem: &str,
    out: &mut Outputs,
    scheme: &mut Scheme,
) -> Result<(), CliError> {
    let g = grid(args.r_max, args.n)?;
    let stepper = SimilarityStepper::new(params, SimilarityConfig::linear(g, args.dtau, args.ell))?;
    similarity_scheme(scheme, params, &g, args);
    let (mut state, expected) = match perturb {
        Perturbation::None => {
            return Err(CliError::Validation("linear evolution of zero data: choose a nonzero --perturb".into()))
        }
        Perturbation::Eig { k } => {
            let spec = RadialOperatorSpec::ell(*params, args.ell)?;
            let (lam, v) = discrete_eigenfunction(&spec, &g, k)?;
            (SimilarityState::from_conjugated(v, args.ell, &g)?, Some(-lam))
        }
        other => {
            let v0 = closed_form(other)?;
            let f: Vec<f64> = g.nodes().iter().map(|&r| v0(r)).collect();
            (SimilarityState::from_values(&f, args.ell, &g)?, None)
        }
    };
    stepper.evolve(&mut state, args.tau_end, args.record_every)?;
    let (rate, r2, window) = growth_rate(&state.history, args.tau_end);
    out.csv(&format!("{stem}_history.csv"), "hbl.history.csv", &history_rows(&state.history))?;
    out.json(
        &format!("{stem}.json"),
        "hbl.evolve",
        json!({
            "mode": "linear",
            "p": params.p(),
            "c": params.c(),
            "ell": args.ell,
            "perturb": perturb.to_string(),
            "tau_end": args.tau_end,
            "growth_rate": rate,
            "fit_window": [window.0, window.1],
            "fit_r2": r2,
            "expected_rate": expected,
            "relative_gap": expected.map(|e| ((rate - e) / e).abs()),
            "verdict": if rate > 0.0 { "GROWING" } else { "DECAYING" },
        }),
    )
}

fn similarity(
    args: &EvolveArgs,
    params: &ModelParams,
    perturb: Perturbation,
    stem: &str,
    out: &mut Outputs,
    scheme: &mut Scheme,
) -> Result<(), CliError> {
    if args.ell != 0 {
        return Err(CliError::Validation("nonlinear evolution is radial: --ell must be 0".into()));
    }
    let v0 = closed_form(perturb)?;
    let g = grid(args.r_max, args.n)?;
    let sim = SimilarityConfig::nonlinear(g, args.dtau);
    similarity_scheme(scheme, params, &g, args);
    let (history, final_values, tuning) = if args.tune_t {
        let cfg = TuneConfig {
            similarity: sim,
            tau_end: args.tau_end,
            half_width: args.half_width,
            record_every: args.record_every,
            ..TuneConfig::default()
        };
        scheme.insert("t_tol".into(), json!(cfg.t_tol));
        scheme.insert("max_iter".into(), json!(cfg.max_iter));
        let r = tune_blowup_time(v0, params, &cfg)?;
        let tuning = json!({
            "tuned": true,
            "blowup_time": r.big_t,
            "bracket": [r.bracket.0, r.bracket.1],
            "iterations": r.iterations,
            "final_coef": r.coef,
        });
        (r.trajectory, r.final_values, tuning)
    } else {
        let stepper = SimilarityStepper::new(params, sim)?;
        let f0 = initial_data_op(v0, args.blowup_time, params, &g)?;
        let mut state = SimilarityState::from_values(&f0, 0, &g)?;
        if let Err(e) = stepper.evolve(&mut state, args.tau_end, args.record_every) {
            if matches!(e, EvolutionError::BlowupDetected { .. }) {
                out.csv(&format!("{stem}_history.csv"), "hbl.history.csv", &history_rows(&state.history))?;
            }
            return Err(e.into());
        }
        let coef = state.history.last().map_or(0.0, |h| h.unstable_coef);
        let tuning = json!({
            "tuned": false,
            "blowup_time": args.blowup_time,
            "bracket": null,
            "iterations": 0,
            "final_coef": coef,
        });
        (state.history.clone(), state.values(&g), tuning)
    };
    let first = history.first().map_or(f64::NAN, |h| h.sigma_norm);
    let last = history.last().map_or(f64::NAN, |h| h.sigma_norm);
    let field: Vec<CsvRow> = g.nodes().iter().zip(&final_values).map(|(&r, &f)| CsvRow::numbers(vec![r, f])).collect();
    out.csv(&format!("{stem}_history.csv"), "hbl.history.csv", &history_rows(&history))?;
    out.csv(&format!("{stem}_final.csv"), "hbl.field.csv", &field)?;
    let mut body = json!({
        "mode": "similarity",
        "p": params.p(),
        "c": params.c(),
        "perturb": perturb.to_string(),
        "tau_end": args.tau_end,
        "sigma_initial": first,
        "sigma_final": last,
        "decay_orders": (first / last).log10(),
        "sup_final": history.last().map_or(f64::NAN, |h| h.sup_norm),
        "verdict": if last < first { "DECAYING" } else { "NOT_DECAYING" },
    });
    body.as_object_mut().expect("object").extend(tuning.as_object().expect("object").clone());
    out.json(&format!("{stem}.json"), "hbl.evolve", body)
}

fn physical(
    args: &EvolveArgs,
    params: &ModelParams,
    perturb: Perturbation,
    stem: &str,
    out: &mut Outputs,
    scheme: &mut Scheme,
) -> Result<(), CliError> {
    let v0 = closed_form(perturb)?;
    let cfg = PhysicalConfig {
        h: finite("h", args.h)?,
        r_max: finite("phys-r-max", args.phys_r_max)?,
        scheme: match args.scheme {
            SchemeArg::Euler2 => PhysicalScheme::Centered2Euler,
            SchemeArg::Rk4 => PhysicalScheme::Centered4Rk4,
        },
        dt_factor: args.dt_factor,
        stop_sup: args.stop_sup,
        t_max: args.t_max,
        snapshot_every: args.snapshot_every,
    };
    if !(cfg.dt_factor > 0.0 && cfg.dt_factor <= 1.0) {
        return Err(CliError::Validation("--dt-factor must lie in (0, 1]".into()));
    }
    if !(cfg.stop_sup > 1.0 && cfg.stop_sup.is_finite()) || !(cfg.snapshot_every >= 0.0) {
        return Err(CliError::Validation("--stop-sup must exceed 1 and --snapshot-every must be >= 0".into()));
    }
    scheme.insert("h".into(), json!(cfg.h));
    scheme.insert("r_max".into(), json!(cfg.r_max));
    scheme.insert("scheme".into(), json!(format!("{:?}", cfg.scheme)));
    scheme.insert("dt_rule".into(), json!("min(dt_factor*h^2/4, 0.1*sup^-(p-1))"));
    scheme.insert("dt_factor".into(), json!(cfg.dt_factor));
    scheme.insert("stop_sup".into(), json!(cfg.stop_sup));
    let u0 = |r: f64| params.phi(r) + v0(r);
    let run = match evolve_physical(u0, params, &cfg) {
        Ok(run) => run,
        Err(EvolutionError::NoBlowup { t_max }) => {
            return out.json(
                &format!("{stem}.json"),
                "hbl.evolve",
                json!({
                    "mode": "physical",
                    "p": params.p(),
                    "c": params.c(),
                    "perturb": perturb.to_string(),
                    "status": "NO_BLOWUP",
                    "t_max": t_max,
                    "t_est": null,
                    "verdict": "NO_BLOWUP",
                }),
            );
        }
        Err(e) => return Err(e.into()),
    };
    let mut checkpoints = Vec::new();
    let mut errors = Vec::new();
    if cfg.snapshot_every > 0.0 {
        let taus: Vec<f64> = (1..=args.checkpoints).map(|k| k as f64 * args.checkpoint_step).collect();
        for (tau, t) in taus.iter().zip(checkpoint_times(run.t_est, &taus)) {
            match rescaled_error(&run, run.t_est, t, params) {
                Ok(e) => {
                    errors.push(e.error);
                    checkpoints.push(json!({ "tau": tau, "t": e.t, "error": e.error }));
                }
                Err(EvolutionError::OutOfHistory { .. }) => {
                    checkpoints.push(json!({ "tau": tau, "t": t, "error": null }));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    let monotone = (errors.len() >= 5).then(|| errors[errors.len() - 5..].windows(2).all(|w| w[1] < w[0]));
    let sup_rows: Vec<CsvRow> = run.sup_history.iter().map(|&(t, s)| CsvRow::numbers(vec![t, s])).collect();
    out.csv(&format!("{stem}_sup.csv"), "hbl.sup_history.csv", &sup_rows)?;
    let (t_end, sup_end) = run.sup_history.last().copied().unwrap_or((f64::NAN, f64::NAN));
    out.json(
        &format!("{stem}.json"),
        "hbl.evolve",
        json!({
            "mode": "physical",
            "p": params.p(),
            "c": params.c(),
            "perturb": perturb.to_string(),
            "status": "BLOWUP",
            "t_est": run.t_est,
            "fit_r2": run.fit_r2,
            "fit_slope": run.fit_slope,
            "t_final": t_end,
            "sup_final": sup_end,
            "checkpoints": checkpoints,
            "monotone_last5": monotone,
            "verdict": match monotone {
                Some(true) => "CONVERGING",
                Some(false) => "NOT_CONVERGING",
                None => "BLOWUP",
            },
        }),
    )
}
