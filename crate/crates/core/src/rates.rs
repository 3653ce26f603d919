//! Empirical convergence rates of the MLE: fit across an n-grid, measure
//! transport errors, regress log median error on log n.

use crate::classify::{self, Index, Setting, SingularityReport};
use crate::error::{Error, Result};
use crate::estimate::{fit_mle, sample, FitConfig};
use crate::mixing::{Family, MixingMeasure, ParamBox};
use crate::polysys::SolverConfig;
use crate::transport::{distance, per_coordinate_error, TransportSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Predicted exponents smaller than this in magnitude are not fitted.
pub const MIN_EXPONENT: f64 = 1.0 / 6.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Wasserstein(f64),
    Index(Vec<u32>),
    /// coupling-weighted error in one coordinate under the W_1 plan
    Coordinate(usize),
}

impl Metric {
    pub fn name(&self, family: Family) -> String {
        match self {
            Metric::Wasserstein(r) => format!("W{r}"),
            Metric::Index(k) => format!("W~{}", k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
            Metric::Coordinate(c) => format!("coord_{}", family.coord_names()[*c]),
        }
    }

    /// Exponent of n predicted by the report.
    pub fn predicted(&self, report: &SingularityReport) -> Option<f64> {
        let first: Option<&Index> = report.index_set.entries.first();
        match self {
            Metric::Wasserstein(_) => report.predicted_w_exponent(),
            Metric::Index(_) => {
                let k = first?.iter().map(|x| x.map(|v| v as f64)).collect::<Option<Vec<f64>>>()?;
                Some(-1.0 / (2.0 * k.iter().cloned().fold(0.0, f64::max)))
            }
            Metric::Coordinate(c) => first?.get(*c).copied().flatten().map(|k| -1.0 / (2.0 * k as f64)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StudySpec {
    pub name: String,
    pub g0: MixingMeasure,
    pub setting: Setting,
    pub k: usize,
    pub param_box: ParamBox,
    pub metrics: Vec<Metric>,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub fit: FitConfig,
    /// add G0 itself to the starting points of every fit
    pub truth_start: bool,
    /// report slopes even when the predicted exponent is too small to resolve
    pub force_slope: bool,
    /// report used for the predictions; classified from G0 when absent
    pub report: Option<SingularityReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub rep: usize,
    /// one value per metric; None when the fit failed
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub metric: String,
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
    pub predicted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub name: String,
    pub g0: MixingMeasure,
    pub setting: Setting,
    pub k: usize,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub metric_names: Vec<String>,
    pub cells: Vec<Cell>,
    pub dropped: usize,
    pub medians: Vec<Vec<f64>>,
    pub slopes: Vec<SlopeRow>,
}

impl RateStudy {
    /// (n, rep, metric, value) rows in cell order.
    pub fn long_rows(&self) -> Vec<(usize, usize, String, f64)> {
        let mut out = Vec::new();
        for c in &self.cells {
            if let Some(v) = &c.values {
                for (name, x) in self.metric_names.iter().zip(v) {
                    out.push((c.n, c.rep, name.clone(), *x));
                }
            }
        }
        out
    }

    pub fn slope(&self, metric: &str) -> Option<&SlopeRow> {
        self.slopes.iter().find(|s| s.metric == metric)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(base), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// OLS of log error on log n; returns (slope, standard error).
pub fn fit_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.iter().any(|&(n, e)| !(n > 0.0) || !(e > 0.0) || !e.is_finite()) {
        return Err(Error::DegenerateRegression("errors and sizes must be positive".into()));
    }
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < 2 {
        return Err(Error::DegenerateRegression("need at least two distinct sample sizes".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se = if m > 2.0 { (rss / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok((slope, se))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn measure_errors(g: &MixingMeasure, g0: &MixingMeasure, metrics: &[Metric]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(metrics.len());
    let mut w1_plan = None;
    for m in metrics {
        out.push(match m {
            Metric::Wasserstein(r) => distance(&TransportSpec::Order(*r), g, g0)?.0,
            Metric::Index(k) => distance(&TransportSpec::Index(k.clone()), g, g0)?.0,
            Metric::Coordinate(c) => {
                if w1_plan.is_none() {
                    w1_plan = Some(distance(&TransportSpec::Order(1.0), g, g0)?.1);
                }
                per_coordinate_error(w1_plan.as_ref().unwrap(), g, g0)[*c]
            }
        });
    }
    Ok(out)
}

fn default_report(spec: &StudySpec) -> Result<SingularityReport> {
    match spec.setting {
        Setting::Exact => classify::classify_emixture(&spec.g0),
        Setting::Over => classify::classify_omixture(&spec.g0, spec.k, spec.param_box.mass_floor, &SolverConfig::default()),
    }
}

pub fn run_rate_study(spec: &StudySpec) -> Result<RateStudy> {
    if spec.reps < 5 {
        return Err(Error::BadParams("at least five replicates per sample size".into()));
    }
    if spec.n_grid.len() < 4 || spec.n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadParams("n-grid must be strictly increasing with at least four points".into()));
    }
    if spec.n_grid.len() * spec.reps >= 1000 {
        return Err(Error::BadParams("at most 999 fits per study".into()));
    }
    if spec.metrics.is_empty() {
        return Err(Error::BadParams("no error metric requested".into()));
    }
    if spec.setting == Setting::Exact && spec.k != spec.g0.k() {
        return Err(Error::BadParams("exact-fitted studies use k = k0".into()));
    }
    let report = match &spec.report {
        Some(r) => r.clone(),
        None => default_report(spec)?,
    };
    let family = spec.g0.family();
    let tasks: Vec<(usize, usize)> = spec.n_grid.iter().flat_map(|&n| (0..spec.reps).map(move |r| (n, r))).collect();
    let cells: Vec<Cell> = tasks
        .par_iter()
        .map(|&(n, rep)| {
            let data_seed = derive_seed(spec.seed, &[n as u64, rep as u64, 0]);
            let mut cfg = spec.fit.clone();
            cfg.seed = derive_seed(spec.seed, &[n as u64, rep as u64, 1]);
            if spec.truth_start && spec.k == spec.g0.k() {
                cfg.extra_starts.push(spec.g0.clone());
            }
            let values = sample(&spec.g0, n, data_seed)
                .and_then(|s| fit_mle(&s.x, family, spec.k, &spec.param_box, &cfg))
                .and_then(|f| measure_errors(&f.measure, &spec.g0, &spec.metrics))
                .ok();
            Cell { n, rep, values }
        })
        .collect();
    let dropped = cells.iter().filter(|c| c.values.is_none()).count();

    let metric_names: Vec<String> = spec.metrics.iter().map(|m| m.name(family)).collect();
    let mut medians = vec![Vec::new(); spec.metrics.len()];
    for (mi, med) in medians.iter_mut().enumerate() {
        for &n in &spec.n_grid {
            let mut v: Vec<f64> = cells.iter().filter(|c| c.n == n).filter_map(|c| c.values.as_ref().map(|v| v[mi])).collect();
            med.push(if v.is_empty() { f64::NAN } else { median(&mut v) });
        }
    }
    let slopes = spec
        .metrics
        .iter()
        .enumerate()
        .map(|(mi, m)| {
            let predicted = m.predicted(&report);
            let mut row = SlopeRow { metric: metric_names[mi].clone(), slope: None, stderr: None, predicted, note: None };
            if let Some(p) = predicted {
                if p.abs() < MIN_EXPONENT && !spec.force_slope {
                    row.note = Some(format!("{}; use the witness checks instead", Error::SlopeRefused(p)));
                    return row;
                }
            }
            let pts: Vec<(f64, f64)> = spec.n_grid.iter().zip(&medians[mi]).map(|(&n, &e)| (n as f64, e)).collect();
            match fit_slope(&pts) {
                Ok((s, se)) => {
                    row.slope = Some(s);
                    row.stderr = Some(se);
                }
                Err(e) => row.note = Some(e.to_string()),
            }
            row
        })
        .collect();
    Ok(RateStudy {
        name: spec.name.clone(),
        g0: spec.g0.clone(),
        setting: spec.setting,
        k: spec.k,
        n_grid: spec.n_grid.clone(),
        reps: spec.reps,
        seed: spec.seed,
        metric_names,
        cells,
        dropped,
        medians,
        slopes,
    })
}

pub const PRESETS: &[&str] = &["s0-gauss", "o-gauss-loc", "s1-skew"];

pub fn preset(name: &str, seed: u64) -> Result<StudySpec> {
    let n_grid = vec![1000, 2000, 4000, 8000, 16000];
    match name {
        "s0-gauss" => {
            let g0 = MixingMeasure::from_coords(Family::Gaussian, &[vec![-2.0, 1.0], vec![2.0, 1.5]], &[0.4, 0.6])?;
            Ok(StudySpec {
                name: name.into(),
                g0,
                setting: Setting::Exact,
                k: 2,
                param_box: ParamBox::default_for(Family::Gaussian),
                metrics: vec![Metric::Wasserstein(1.0)],
                n_grid,
                reps: 20,
                seed,
                fit: FitConfig { starts: 4, ..FitConfig::default() },
                truth_start: false,
                force_slope: false,
                report: None,
            })
        }
        "o-gauss-loc" => {
            // variances pinned to 1 by a degenerate box: a location-only family.
            // With k0 = 2 the spare atom splits whichever atom shows excess
            // sample variance, so most replicates sit in the slow regime.
            let g0 = MixingMeasure::from_coords(Family::Gaussian, &[vec![-3.0, 1.0], vec![3.0, 1.0]], &[0.5, 0.5])?;
            let b = ParamBox::new(Family::Gaussian, vec![-10.0, 1.0], vec![10.0, 1.0], 0.02)?;
            Ok(StudySpec {
                name: name.into(),
                g0,
                setting: Setting::Over,
                k: 3,
                param_box: b,
                metrics: vec![Metric::Wasserstein(2.0)],
                n_grid,
                reps: 20,
                seed,
                fit: FitConfig { starts: 4, max_iter: 20000, ..FitConfig::default() },
                truth_start: false,
                force_slope: false,
                report: Some(classify::second_order_identifiable(1)),
            })
        }
        "s1-skew" => {
            let g0 = MixingMeasure::from_coords(Family::SkewNormal, &[vec![0.0, 1.0, 1.0], vec![0.0, 2.5, 2.0]], &[0.4, 0.6])?;
            Ok(StudySpec {
                name: name.into(),
                g0,
                setting: Setting::Exact,
                k: 2,
                param_box: ParamBox::default_for(Family::SkewNormal),
                metrics: vec![Metric::Coordinate(0), Metric::Coordinate(1), Metric::Coordinate(2)],
                n_grid,
                reps: 10,
                seed,
                fit: FitConfig { starts: 2, ..FitConfig::default() },
                truth_start: true,
                force_slope: false,
                report: None,
            })
        }
        _ => Err(Error::BadParams(format!("unknown preset {name}; known: {}", PRESETS.join(", ")))),
    }
}
