//! Aggregates the JSON results of a directory into `report.md`.
//!
//! Files are read in sorted name order and numbers are printed with fixed
//! precision, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::cli::ReportArgs;
use crate::error::CliError;
use crate::manifest::{Outputs, JSON_SCHEMAS, SCHEMA};

/// Argument lists of the default pipeline, without program name and `--out`.
pub const PIPELINE: &[&[&str]] = &[
    &["spectrum", "--limit", "--ell", "0,1,2,3", "--k", "4"],
    &["spectrum", "--p", "3", "--c", "0.3", "--ell", "0,1,2", "--k", "3", "--susy"],
    &["ggmt", "--c", "0.08", "--optimize"],
    &["ggmt", "--c", "0.09", "--optimize"],
    &["ggmt", "--c", "0.3"],
    &["scan", "--p", "3", "--ell", "0", "--points", "8"],
    &["scan", "--p", "3", "--ell", "1"],
    &["scan", "--p", "3", "--ell", "2", "--c-hi", "0.3", "--points", "8"],
    &["evolve", "--mode", "linear", "--ell", "0", "--perturb", "eig:0"],
    &["evolve", "--mode", "similarity", "--perturb", "gauss:0.01", "--tune-T"],
    &["evolve", "--mode", "physical", "--perturb", "none"],
];

pub fn run_pipeline(dir: &Path) -> Result<(), CliError> {
    for stage in PIPELINE {
        let mut argv = vec!["hbl".to_string()];
        argv.extend(stage.iter().map(|s| s.to_string()));
        argv.push("--out".into());
        argv.push(dir.display().to_string());
        let code = crate::run(&argv);
        if code != 0 {
            return Err(CliError::Numerical(format!("pipeline stage '{}' exited with code {code}", stage.join(" "))));
        }
    }
    Ok(())
}

/// Data files of `dir` in name order, each checked against the schemas.
pub fn load(dir: &Path) -> Result<Vec<(String, Value)>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", dir.display())))?;
    let mut names: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("manifest_")))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(CliError::Validation(format!("no result files in {}", dir.display())));
    }
    let mut out = Vec::with_capacity(names.len());
    for path in names {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("schema mismatch in {name}: not JSON ({e})")))?;
        let schema = value.get("schema").and_then(Value::as_str);
        let id = value.get("schema_id").and_then(Value::as_str);
        if schema != Some(SCHEMA) || !id.is_some_and(|id| JSON_SCHEMAS.contains(&id)) {
            return Err(CliError::Validation(format!(
                "schema mismatch in {name}: expected schema {SCHEMA} with a known schema_id, found {} / {}",
                schema.unwrap_or("none"),
                id.unwrap_or("none")
            )));
        }
        out.push((name, value));
    }
    Ok(out)
}

/// Fixed-point text; negative zero prints as zero.
fn fixed(x: Option<f64>, decimals: usize) -> String {
    match x {
        Some(v) if v.is_finite() => {
            let s = format!("{v:.decimals$}");
            if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
                s.trim_start_matches('-').to_string()
            } else {
                s
            }
        }
        _ => "n/a".into(),
    }
}

fn num(v: &Value, key: &str) -> Option<f64> {
    v.get(key).and_then(Value::as_f64)
}

fn text<'a>(v: &'a Value, key: &str) -> &'a str {
    v.get(key).and_then(Value::as_str).unwrap_or("n/a")
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

fn of_kind<'a>(files: &'a [(String, Value)], id: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
    files.iter().map(|(_, v)| v).filter(move |v| v.get("schema_id").and_then(Value::as_str) == Some(id))
}

pub fn render(files: &[(String, Value)]) -> String {
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "# Reproduction report\n");
    let _ = writeln!(w, "Sources:\n");
    for (name, _) in files {
        let _ = writeln!(w, "- `{name}`");
    }

    let spectra: Vec<&Value> = of_kind(files, "hbl.spectrum").collect();
    let _ = writeln!(w, "\n## Limiting spectra (c = 0)\n");
    let mut anchors = Vec::new();
    let mut any = false;
    for sp in spectra.iter().filter(|v| v.get("limit").and_then(Value::as_bool) == Some(true)) {
        any = true;
        let _ = writeln!(w, "| operator | ℓ | n | λ_B | error | n + ℓ/2 − 1 |");
        let _ = writeln!(w, "|---|---|---|---|---|---|");
        for op in sp.get("operators").and_then(Value::as_array).into_iter().flatten() {
            let m = &op["matrix"];
            let ell = op.get("ell").and_then(Value::as_u64);
            for (n, (l, e)) in floats(&m["lambda_b"]).into_iter().zip(floats(&m["errors"])).enumerate() {
                let ladder = ell.map(|ell| n as f64 + ell as f64 / 2.0 - 1.0);
                let _ = writeln!(
                    w,
                    "| {} | {} | {n} | {} | {e:.1e} | {} |",
                    text(op, "operator"),
                    ell.map_or("-".into(), |l| l.to_string()),
                    fixed(Some(l), 9),
                    fixed(ladder, 1),
                );
                if ell.is_some() && l <= 1e-6 {
                    anchors.push(format!("{} (ℓ={}, n={n})", fixed(Some(l), 6), ell.unwrap_or(0)));
                }
            }
        }
        let _ = writeln!(w);
    }
    if any {
        let _ = writeln!(w, "Unstable part (λ_B ≤ 0): {}", anchors.join(", "));
    } else {
        let _ = writeln!(w, "No limiting spectra in this directory.");
    }

    let _ = writeln!(w, "\n## Spectra at c > 0\n");
    let mut any = false;
    for sp in spectra.iter().filter(|v| v.get("limit").and_then(Value::as_bool) == Some(false)) {
        if !any {
            let _ = writeln!(w, "| p | c | operator | ℓ | lowest λ_B (matrix) | lowest λ_B (shooting) | negative | marginal |");
            let _ = writeln!(w, "|---|---|---|---|---|---|---|---|");
            any = true;
        }
        for op in sp.get("operators").and_then(Value::as_array).into_iter().flatten() {
            let m = floats(&op["matrix"]["lambda_b"]);
            let t = floats(&op["shooting"]["lambda_b"]);
            let _ = writeln!(
                w,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                sp["p"],
                fixed(num(sp, "c"), 4),
                text(op, "operator"),
                op.get("ell").and_then(Value::as_u64).map_or("-".into(), |l| l.to_string()),
                fixed(m.first().copied(), 9),
                fixed(t.first().copied(), 9),
                op["negative_count"],
                op["marginal_count"],
            );
        }
    }
    if !any {
        let _ = writeln!(w, "None.");
    }

    let _ = writeln!(w, "\n## Bound on negative ℓ = 1 eigenvalues\n");
    let mut any = false;
    for gg in of_kind(files, "hbl.ggmt") {
        if !any {
            let _ = writeln!(w, "| c | δ | κ | convention | G | measured count | count ≤ G |");
            let _ = writeln!(w, "|---|---|---|---|---|---|---|");
            any = true;
        }
        let count = gg["measured"].get("negative_count").and_then(Value::as_u64);
        for row in gg.get("rows").and_then(Value::as_array).into_iter().flatten() {
            let g = num(row, "g");
            let ok = match (count, g) {
                (Some(n), Some(g)) => if n as f64 <= g { "yes" } else { "NO" },
                _ => "n/a",
            };
            let _ = writeln!(
                w,
                "| {} | {} | {} | {} | {} | {} | {ok} |",
                fixed(num(gg, "c"), 4),
                fixed(num(row, "delta"), 3),
                fixed(num(row, "kappa"), 3),
                text(row, "convention"),
                fixed(g, 4),
                count.map_or("n/a".into(), |n| n.to_string()),
            );
        }
        for opt in gg.get("optimum").and_then(Value::as_array).into_iter().flatten() {
            let _ = writeln!(
                w,
                "| {} | {} | {} | {} (grid minimum) | {} | | |",
                fixed(num(gg, "c"), 4),
                fixed(num(opt, "delta"), 3),
                fixed(num(opt, "kappa"), 3),
                text(opt, "convention"),
                fixed(num(opt, "g"), 4),
            );
        }
    }
    if !any {
        let _ = writeln!(w, "None.");
    }

    let _ = writeln!(w, "\n## Crossing scans\n");
    let mut any = false;
    for sc in of_kind(files, "hbl.scan") {
        if !any {
            let _ = writeln!(w, "| p | ℓ | c range | status | c* | bracket | counts seen |");
            let _ = writeln!(w, "|---|---|---|---|---|---|---|");
            any = true;
        }
        let bracket = floats(&sc["bracket"]);
        let counts: Vec<String> = sc["counts_seen"].as_array().into_iter().flatten().map(|c| c.to_string()).collect();
        let _ = writeln!(
            w,
            "| {} | {} | [{}, {}] | {} | {} | {} | {} |",
            sc["p"],
            sc["ell"],
            fixed(num(sc, "c_lo"), 4),
            fixed(num(sc, "c_hi"), 4),
            text(sc, "status"),
            fixed(num(sc, "c_star"), 5),
            if bracket.len() == 2 {
                format!("({}, {})", fixed(Some(bracket[0]), 5), fixed(Some(bracket[1]), 5))
            } else {
                "-".into()
            },
            counts.join(" "),
        );
    }
    if !any {
        let _ = writeln!(w, "None.");
    }

    let _ = writeln!(w, "\n## Evolution verdicts\n");
    let mut any = false;
    for ev in of_kind(files, "hbl.evolve") {
        if !any {
            let _ = writeln!(w, "| mode | p | c | perturbation | result | verdict |");
            let _ = writeln!(w, "|---|---|---|---|---|---|");
            any = true;
        }
        let result = match text(ev, "mode") {
            "linear" => format!(
                "ℓ = {}, rate {} (expected {})",
                ev["ell"],
                fixed(num(ev, "growth_rate"), 4),
                fixed(num(ev, "expected_rate"), 4)
            ),
            "similarity" => format!(
                "T = {}, ‖f‖_σ down {} decades over τ ≤ {}",
                fixed(num(ev, "blowup_time"), 8),
                fixed(num(ev, "decay_orders"), 2),
                fixed(num(ev, "tau_end"), 1)
            ),
            _ => format!("T_est = {}", fixed(num(ev, "t_est"), 6)),
        };
        let _ = writeln!(
            w,
            "| {} | {} | {} | {} | {result} | {} |",
            text(ev, "mode"),
            ev["p"],
            fixed(num(ev, "c"), 4),
            text(ev, "perturb"),
            text(ev, "verdict"),
        );
    }
    if !any {
        let _ = writeln!(w, "None.");
    }
    s
}

pub fn run(args: &ReportArgs, default_dir: &Path, out: &mut Outputs) -> Result<(), CliError> {
    let dir = args.dir.clone().unwrap_or_else(|| default_dir.to_path_buf());
    if args.pipeline {
        run_pipeline(&dir)?;
    }
    let files = load(&dir)?;
    let body = render(&files);
    let path = dir.join("report.md");
    fs::write(&path, body).map_err(|e| CliError::io(path.display().to_string(), e))?;
    out.record(&path, "md", "hbl.report.md");
    Ok(())
}
