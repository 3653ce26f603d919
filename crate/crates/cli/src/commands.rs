use crate::Command;
use mixsing::classify;
use mixsing::estimate::{self, FitConfig};
use mixsing::mixing::{Family, MeasureJson, MixingMeasure, ParamBox};
use mixsing::polysys::{self, SolverConfig};
use mixsing::rates;
use mixsing::reduce;
use mixsing::transport::{distance, TransportSpec};
use mixsing::witness::{self, WitnessKind, WitnessPath};
use mixsing::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::BadParams(format!("cannot read {}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::BadParams(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| Error::BadParams(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::BadParams(e.to_string()))
}

pub fn load_measure(path: &Path) -> Result<MixingMeasure> {
    let j: MeasureJson = serde_json::from_str(&read(path)?).map_err(|e| Error::BadParams(format!("{}: {e}", path.display())))?;
    MixingMeasure::from_json(&j)
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| Error::BadParams(format!("not a number: {x}")))).collect()
}

fn uints(s: &str) -> Result<Vec<u32>> {
    s.split(',').map(|x| x.trim().parse::<u32>().map_err(|_| Error::BadParams(format!("not a non-negative integer: {x}")))).collect()
}

fn family(s: &str) -> Result<Family> {
    match s {
        "skew_normal" | "skew" => Ok(Family::SkewNormal),
        "gaussian" => Ok(Family::Gaussian),
        "gamma" => Ok(Family::Gamma),
        _ => Err(Error::BadParams(format!("unknown family {s}"))),
    }
}

fn solver(starts: usize, solve_tol: f64, unsolve_tol: f64) -> Result<SolverConfig> {
    if starts == 0 || !(solve_tol > 0.0) || !(unsolve_tol > 0.0) {
        return Err(Error::BadParams("thresholds and start counts must be positive".into()));
    }
    Ok(SolverConfig { starts, solve_tol, unsolve_tol, ..SolverConfig::default() })
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FitFile {
    #[serde(rename = "box")]
    param_box: Option<ParamBox>,
    starts: Option<usize>,
    max_iter: Option<usize>,
    tol: Option<f64>,
}

pub fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Classify { measure, setting, k, c0, starts, out } => {
            let g = load_measure(&measure)?;
            let cfg = solver(starts, 1e-12, 1e-4)?;
            let report = match setting.as_str() {
                "e" => match g.family() {
                    Family::SkewNormal => classify::classify_skew_emixture(&g, &cfg)?,
                    _ => classify::classify_emixture(&g)?,
                },
                "o" => {
                    let k = k.ok_or_else(|| Error::BadParams("--k is required for the o setting".into()))?;
                    classify::classify_omixture(&g, k, c0, &cfg)?
                }
                _ => return Err(Error::BadParams(format!("setting must be e or o, got {setting}"))),
            };
            write_out(out.as_deref(), &to_json(&report)?)?;
            if report.boundary_warning() {
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
                return Ok(2);
            }
            Ok(0)
        }
        Command::Polysys { system, l, r, v, m, a, b, ladder, starts, solve_tol, unsolve_tol, out } => {
            let cfg = solver(starts, solve_tol, unsolve_tol)?;
            let ab = || -> Result<(Vec<f64>, Vec<f64>)> {
                let a = a.as_deref().ok_or_else(|| Error::BadParams("--a is required for sbar".into()))?;
                let b = b.as_deref().ok_or_else(|| Error::BadParams("--b is required for sbar".into()))?;
                Ok((floats(a)?, floats(b)?))
            };
            let value = if ladder {
                let lad = match system.as_str() {
                    "skew" => polysys::rho(v, m, l, &cfg)?,
                    "gaussian" => polysys::rbar(l, &cfg)?,
                    "sbar" => {
                        let (a, b) = ab()?;
                        polysys::sbar(&a, &b, &cfg)?
                    }
                    _ => return Err(Error::BadParams(format!("no ladder for system {system}"))),
                };
                serde_json::json!({ "system": system, "l": l, "v": v, "m": m, "ladder": lad })
            } else {
                let r = r.ok_or_else(|| Error::BadParams("--r is required without --ladder".into()))?;
                let sys = match system.as_str() {
                    "skew" => polysys::build_skew_system(v, m, l, r)?,
                    "skew-free" => polysys::skew_free_subsystem(l, r)?,
                    "gaussian" => polysys::build_gaussian_system(l, r),
                    "sbar" => {
                        let (a, b) = ab()?;
                        polysys::build_sbar_system(&a, &b, r)?
                    }
                    _ => return Err(Error::BadParams(format!("unknown system {system}"))),
                };
                let verdict = polysys::check_solvable(&sys, &cfg);
                serde_json::json!({
                    "system": system, "l": l, "r": r, "v": v, "m": m,
                    "verdict": verdict.status, "residual": verdict.residual, "starts": verdict.starts,
                    "solve_tol": verdict.solve_tol, "unsolve_tol": verdict.unsolve_tol,
                    "witness": verdict.witness,
                })
            };
            write_out(out.as_deref(), &to_json(&value)?)?;
            Ok(0)
        }
        Command::Witness { kind, measure, s, t_max, steps, csv, out } => {
            let g = load_measure(&measure)?;
            let kind: WitnessKind = kind.parse()?;
            let path = WitnessPath::new(kind, &g)?;
            let ts = witness::dyadic_grid(t_max, steps);
            let r = path.order.unwrap_or(1) as f64;
            let exps = match s {
                Some(s) => floats(&s)?,
                None => vec![r, r + 1.0],
            };
            let coefficients = witness::coefficient_check(&path, &ts)?;
            let ratios = exps.iter().map(|&e| witness::verify_density_ratio(&path, e, &ts, None)).collect::<Result<Vec<_>>>()?;
            if let Some(p) = csv {
                let mut w = csv::Writer::from_path(&p).map_err(|e| Error::BadParams(e.to_string()))?;
                w.write_record(["t", "s", "W_s", "sup_ratio"]).map_err(|e| Error::BadParams(e.to_string()))?;
                for rep in &ratios {
                    for row in &rep.rows {
                        w.write_record([row.t.to_string(), rep.s.to_string(), row.w_s.to_string(), row.sup_ratio.to_string()])
                            .map_err(|e| Error::BadParams(e.to_string()))?;
                    }
                }
                w.flush().map_err(|e| Error::BadParams(e.to_string()))?;
            }
            let value = serde_json::json!({
                "kind": kind, "order": path.order, "rule": path.rule,
                "coefficients": coefficients, "ratios": ratios,
            });
            write_out(out.as_deref(), &to_json(&value)?)?;
            Ok(0)
        }
        Command::RateStudy { preset, seed, reps, n_grid, force_slope, csv, out } => {
            let mut spec = rates::preset(&preset, seed)?;
            if let Some(r) = reps {
                spec.reps = r;
            }
            if let Some(g) = n_grid {
                spec.n_grid = uints(&g)?.into_iter().map(|n| n as usize).collect();
            }
            spec.force_slope = force_slope;
            let study = rates::run_rate_study(&spec)?;
            if let Some(p) = csv {
                write_long_csv(&study, &p)?;
            }
            let summary = serde_json::json!({
                "name": study.name, "seed": study.seed, "n_grid": study.n_grid, "reps": study.reps,
                "dropped": study.dropped, "medians": study.medians, "slopes": study.slopes,
            });
            write_out(out.as_deref(), &to_json(&summary)?)?;
            Ok(0)
        }
        Command::Distance { a, b, order, kappa, block } => {
            let ga = load_measure(&a)?;
            let gb = load_measure(&b)?;
            let spec = match (order, kappa, block) {
                (Some(r), None, None) => TransportSpec::Order(r),
                (None, Some(k), None) => TransportSpec::Index(uints(&k)?),
                (None, None, Some(rows)) => TransportSpec::Block(rows.split(';').map(uints).collect::<Result<_>>()?),
                (None, None, None) => TransportSpec::Order(1.0),
                _ => return Err(Error::BadParams("give at most one of --order, --kappa, --block".into())),
            };
            let (value, plan) = distance(&spec, &ga, &gb)?;
            write_out(None, &to_json(&serde_json::json!({ "spec": spec, "value": value, "plan": plan.q }))?)?;
            Ok(0)
        }
        Command::Reduce { order, json } => {
            let rows = reduce::table_rows(order)?;
            if json {
                write_out(None, &to_json(&rows)?)?;
            } else {
                let mut text = String::new();
                for row in rows {
                    let rhs: Vec<String> = row.terms.iter().map(|(k, c)| format!("[{c}] d{}", reduce::fmt_multi(*k))).collect();
                    text.push_str(&format!("d{} = {}\n", reduce::fmt_multi(row.alpha), rhs.join(" + ")));
                }
                write_out(None, text.trim_end())?;
            }
            Ok(0)
        }
        Command::Sample { measure, n, seed, out } => {
            let g = load_measure(&measure)?;
            let s = estimate::sample(&g, n, seed)?;
            let text: Vec<String> = s.x.iter().map(|x| format!("{x:e}")).collect();
            write_out(out.as_deref(), &text.join("\n"))?;
            Ok(0)
        }
        Command::Fit { data, family: fam, k, config, seed, out } => {
            let fam = family(&fam)?;
            let x: Vec<f64> = read(&data)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.trim().parse::<f64>().map_err(|_| Error::BadParams(format!("bad observation {l}"))))
                .collect::<Result<_>>()?;
            let file: FitFile = match config {
                Some(p) => serde_json::from_str(&read(&p)?).map_err(|e| Error::BadParams(e.to_string()))?,
                None => FitFile::default(),
            };
            let b = match file.param_box {
                Some(b) => ParamBox::new(b.family, b.lo, b.hi, b.mass_floor)?,
                None => ParamBox::default_for(fam),
            };
            let mut cfg = FitConfig { seed, ..FitConfig::default() };
            if let Some(s) = file.starts {
                cfg.starts = s;
            }
            if let Some(m) = file.max_iter {
                cfg.max_iter = m;
            }
            if let Some(t) = file.tol {
                cfg.tol = t;
            }
            let fit = estimate::fit_mle(&x, fam, k, &b, &cfg)?;
            write_out(out.as_deref(), &to_json(&fit)?)?;
            Ok(0)
        }
    }
}

pub fn write_long_csv(study: &rates::RateStudy, path: &Path) -> Result<()> {
    let err = |e: csv::Error| Error::BadParams(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["n", "rep", "distance_name", "value"]).map_err(err)?;
    for (n, rep, name, v) in study.long_rows() {
        w.write_record([n.to_string(), rep.to_string(), name, format!("{v:e}")]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::BadParams(e.to_string()))
}
