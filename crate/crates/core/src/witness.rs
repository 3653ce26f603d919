//! Explicit sequences G(t) → G0 along which the leading coefficients of
//! p_G − p_{G0} vanish, and numeric checks of that vanishing.

use crate::classify::{self, Setting};
use crate::error::{Error, Result};
use crate::kernels;
use crate::mixing::{delta_quantities, Family, MixingMeasure, ParamVec, ConvergentRep};
use crate::quad::{envelope_bounds, pairwise_sum, QuadGrid};
use crate::reduce;
use crate::transport::{distance, TransportSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const T_MAX: f64 = 0.2;
pub const T_STEPS: usize = 7;
pub const GRID_POINTS: usize = 4001;
/// Relative size below which a coefficient counts as vanishing outright.
pub const ZERO_REL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    S0Overfit,
    S1,
    S2,
    S33,
}

impl std::str::FromStr for WitnessKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s0" | "s0-overfit" | "s0_overfit" => Ok(WitnessKind::S0Overfit),
            "s1" => Ok(WitnessKind::S1),
            "s2" => Ok(WitnessKind::S2),
            "s33" => Ok(WitnessKind::S33),
            _ => Err(Error::BadParams(format!("unknown witness kind {s}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WitnessPath {
    pub kind: WitnessKind,
    pub base: MixingMeasure,
    /// Declared singularity order; None when every order vanishes.
    pub order: Option<u32>,
    pub rule: String,
    /// Atoms of the base that move.
    pub atoms: Vec<usize>,
    /// Per moved atom, the multiplier of t in its leading schedule.
    scale: Vec<f64>,
}

/// The dyadic grid t_max · 2^{-i}.
pub fn dyadic_grid(t_max: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|i| t_max * 0.5f64.powi(i as i32)).collect()
}

fn label_of(g: &MixingMeasure) -> Result<String> {
    Ok(classify::classify_emixture(g)?.label)
}

fn expect_label(g: &MixingMeasure, want: &str) -> Result<()> {
    if g.family() != Family::SkewNormal {
        return Err(Error::LabelMismatch { expected: want.into(), got: format!("{:?}", g.family()) });
    }
    let got = label_of(g)?;
    if got != want {
        return Err(Error::LabelMismatch { expected: want.into(), got });
    }
    Ok(())
}

impl WitnessPath {
    pub fn new(kind: WitnessKind, g0: &MixingMeasure) -> Result<WitnessPath> {
        match kind {
            WitnessKind::S0Overfit => Self::s0_overfit(g0),
            WitnessKind::S1 => Self::s1(g0),
            WitnessKind::S2 => Self::s2(g0),
            WitnessKind::S33 => Self::s33(g0),
        }
    }

    pub fn s0_overfit(g0: &MixingMeasure) -> Result<WitnessPath> {
        if g0.family() != Family::SkewNormal || g0.k() != 1 || !classify::is_s0(g0) {
            return Err(Error::NotApplicable("the overfit witness splits a single skew-normal atom in S0".into()));
        }
        Ok(WitnessPath {
            kind: WitnessKind::S0Overfit,
            base: g0.clone(),
            order: Some(3),
            rule: "split in halves: dθ = ±t, dv = -t^2, dm = t^2 (m^3+m)/(2v)".into(),
            atoms: vec![0],
            scale: vec![1.0],
        })
    }

    pub fn s1(g0: &MixingMeasure) -> Result<WitnessPath> {
        expect_label(g0, "S1")?;
        let h = classify::homology(g0)?;
        let class = h.classes.iter().find(|c| c.len() > 1).expect("S1 has a homologous class");
        let (i, j) = (class[0], class[1]);
        let ri = g0.atom(i).get(1) / g0.weight(i);
        let rj = g0.atom(j).get(1) / g0.weight(j);
        let n = 1.0 / ri.max(rj);
        Ok(WitnessPath {
            kind: WitnessKind::S1,
            base: g0.clone(),
            order: Some(1),
            rule: "homologous pair: dm proportional to (v_i/p_i, -v_j/p_j), everything else fixed".into(),
            atoms: vec![i, j],
            scale: vec![ri * n, -rj * n],
        })
    }

    pub fn s2(g0: &MixingMeasure) -> Result<WitnessPath> {
        expect_label(g0, "S2")?;
        let i = (0..g0.k())
            .find(|&i| g0.atom(i).get(2).abs() <= classify::ZERO_TOL)
            .expect("S2 has an atom with zero shape");
        Ok(WitnessPath {
            kind: WitnessKind::S2,
            base: g0.clone(),
            order: Some(2),
            rule: "zero-shape atom: dm = t, dθ = -2 t σ/√(2π), dv = dθ^2".into(),
            atoms: vec![i],
            scale: vec![1.0],
        })
    }

    pub fn s33(g0: &MixingMeasure) -> Result<WitnessPath> {
        expect_label(g0, "S33")?;
        let (i, j) = *classify::c2_pairs(g0).first().expect("S33 has a Type C(2) pair");
        Ok(WitnessPath {
            kind: WitnessKind::S33,
            base: g0.clone(),
            order: None,
            rule: "Type C(2) pair: dm_i/σ_i = -dm_j/σ_j = t, weights fixed".into(),
            atoms: vec![i, j],
            scale: vec![g0.atom(i).get(1).sqrt(), -g0.atom(j).get(1).sqrt()],
        })
    }

    /// Signed parameter increments of each moved atom at t.
    pub fn increments(&self, t: f64) -> Vec<[f64; 3]> {
        let b = &self.base;
        match self.kind {
            WitnessKind::S0Overfit => {
                let (v, m) = (b.atom(0).get(1), b.atom(0).get(2));
                let dm = t * t * (m * m * m + m) / (2.0 * v);
                vec![[t, -t * t, dm], [-t, -t * t, dm]]
            }
            WitnessKind::S1 | WitnessKind::S33 => self.scale.iter().map(|c| [0.0, 0.0, c * t]).collect(),
            WitnessKind::S2 => {
                let s = b.atom(self.atoms[0]).get(1).sqrt();
                let dth = -2.0 * t * s * crate::special::INV_SQRT_2PI;
                vec![[dth, dth * dth, t]]
            }
        }
    }

    pub fn at(&self, t: f64) -> Result<ConvergentRep> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::BadParams(format!("path parameter {t} must be finite and non-negative")));
        }
        let b = &self.base;
        let inc = self.increments(t);
        let mut groups: Vec<Vec<(f64, ParamVec)>> = (0..b.k()).map(|i| vec![(b.weight(i), *b.atom(i))]).collect();
        match self.kind {
            WitnessKind::S0Overfit => {
                let half = 0.5 * b.weight(0);
                groups[0] = inc
                    .iter()
                    .map(|d| Ok((half, b.atom(0).shifted(d)?)))
                    .collect::<Result<_>>()?;
            }
            _ => {
                for (&i, d) in self.atoms.iter().zip(&inc) {
                    groups[i] = vec![(b.weight(i), b.atom(i).shifted(d)?)];
                }
            }
        }
        ConvergentRep::new(b.clone(), groups, Vec::new())
    }
}

pub fn witness_s0_overfit(g0: &MixingMeasure, t: f64) -> Result<ConvergentRep> {
    WitnessPath::s0_overfit(g0)?.at(t)
}

pub fn witness_s1(g0: &MixingMeasure, t: f64) -> Result<ConvergentRep> {
    WitnessPath::s1(g0)?.at(t)
}

pub fn witness_s2(g0: &MixingMeasure, t: f64) -> Result<ConvergentRep> {
    WitnessPath::s2(g0)?.at(t)
}

pub fn witness_s33(g0: &MixingMeasure, t: f64) -> Result<ConvergentRep> {
    WitnessPath::s33(g0)?.at(t)
}

/// One named coefficient tracked along the path, divided by W_r^r.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientTrace {
    pub name: String,
    pub t: Vec<f64>,
    pub raw: Vec<f64>,
    pub ratio: Vec<f64>,
    /// |raw| is at rounding level relative to the sizes of its summands.
    pub vanishes: bool,
    /// ratio at t_max over ratio after four halvings.
    pub decay: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientCheck {
    pub kind: WitnessKind,
    pub order: Option<u32>,
    pub traces: Vec<CoefficientTrace>,
    pub passed: bool,
}

fn w_power(rep: &ConvergentRep, s: f64) -> Result<f64> {
    let g = rep.to_measure()?;
    Ok(distance(&TransportSpec::Order(s), &g, rep.base())?.1.value)
}

/// Value together with the sum of absolute summands, for a rounding-aware zero test.
type Scaled = (f64, f64);

fn sum_scaled(parts: &[f64]) -> Scaled {
    (parts.iter().sum(), parts.iter().map(|x| x.abs()).sum())
}

fn coefficients(path: &WitnessPath, rep: &ConvergentRep, t: f64) -> Result<Vec<(String, Scaled)>> {
    let g0 = &path.base;
    let d = delta_quantities(rep);
    let sq2pi = (2.0 * std::f64::consts::PI).sqrt();
    let mut out = Vec::new();
    match path.kind {
        WitnessKind::S0Overfit => {
            let form = reduce::build_minimal_form(g0, 3, Setting::Over)?;
            for (e, xi) in form.entries.iter().zip(form.evaluate(rep)?) {
                let mut scale = d.p[e.atom].abs();
                for (j, (p, _)) in rep.groups()[e.atom].iter().enumerate() {
                    let de = &d.eta[e.atom][j];
                    for term in &e.terms {
                        let mono: f64 = (0..3).map(|c| de[c].powi(term.alpha[c] as i32)).product();
                        scale += (p * term.value * mono).abs();
                    }
                }
                out.push((format!("xi{}", reduce::fmt_multi(e.kappa)), (xi, scale)));
            }
        }
        WitnessKind::S1 => {
            let h = classify::homology(g0)?;
            for c in h.classes.iter().filter(|c| c.len() > 1) {
                let mut g1 = Vec::new();
                let mut g2 = Vec::new();
                for &i in c {
                    let (p, s, m) = (g0.weight(i), g0.atom(i).get(1).sqrt(), g0.atom(i).get(2));
                    let e = &d.eta[i][0];
                    let (dth, dv, dm, dp) = (e[0], e[1], e[2], d.p[i]);
                    out.push((format!("beta1[{i}]"), sum_scaled(&[2.0 * dp / s, -p * dv / s.powi(3)])));
                    out.push((format!("beta2[{i}]"), sum_scaled(&[2.0 * p * dth / s.powi(3)])));
                    out.push((format!("beta3[{i}]"), sum_scaled(&[p * dv / s.powi(5)])));
                    let pi = std::f64::consts::PI;
                    g1.push(-p * m * dth / (pi * s * s));
                    g2.push(-p * m * dv / (2.0 * pi * s.powi(4)));
                    g2.push(p * dm / (pi * s * s));
                }
                out.push((format!("gamma1{c:?}"), sum_scaled(&g1)));
                out.push((format!("gamma2{c:?}"), sum_scaled(&g2)));
            }
        }
        WitnessKind::S2 => {
            let i = path.atoms[0];
            let (p, s) = (g0.weight(i), g0.atom(i).get(1).sqrt());
            let e = &d.eta[i][0];
            let (dth, dv, dm, dp) = (e[0], e[1], e[2], d.p[i]);
            out.push((
                "zeta1".into(),
                sum_scaled(&[
                    -p * dv / (2.0 * s.powi(3)),
                    -p * dth * dth / (2.0 * s.powi(3)),
                    3.0 * p * dv * dv / (8.0 * s.powi(5)),
                    -2.0 * p * dth * dm / (sq2pi * s * s),
                    dp / s,
                ]),
            ));
            out.push((
                "zeta2".into(),
                sum_scaled(&[
                    dth / s.powi(3),
                    2.0 * dm / (sq2pi * s * s),
                    -3.0 * dth * dv / (2.0 * s.powi(5)),
                    -2.0 * dv * dm / (sq2pi * s.powi(4)),
                ]),
            ));
            out.push((
                "zeta3".into(),
                sum_scaled(&[dv / (2.0 * s.powi(5)), dth * dth / (2.0 * s.powi(5)), 2.0 * dth * dm / (sq2pi * s.powi(4))]),
            ));
            out.push(("zeta4".into(), sum_scaled(&[dth * dv / (2.0 * s.powi(7)), dv * dm / (sq2pi * s.powi(6))])));
            out.push(("dv^2".into(), (dv * dv, dv * dv)));
        }
        WitnessKind::S33 => {
            for v in 1..=4u32 {
                let us: Vec<u32> = if v % 2 == 0 { (1..=v).step_by(2).collect() } else { (0..=v).step_by(2).collect() };
                for u in us {
                    let parts: Vec<f64> = path
                        .atoms
                        .iter()
                        .map(|&i| {
                            let (p, s, m) = (g0.weight(i), g0.atom(i).get(1).sqrt(), g0.atom(i).get(2));
                            p * m.powi(u as i32) * d.eta[i][0][2].powi(v as i32) / s.powi((u + v + 1) as i32)
                        })
                        .collect();
                    // divide by t^v so each sum is on a fixed scale
                    let (a, b) = sum_scaled(&parts);
                    out.push((format!("parity[u={u},v={v}]"), (a / t.powi(v as i32), b / t.powi(v as i32))));
                }
            }
        }
    }
    Ok(out)
}

/// Tracks the construction's coefficients over the dyadic grid.
pub fn coefficient_check(path: &WitnessPath, ts: &[f64]) -> Result<CoefficientCheck> {
    if ts.len() < 5 {
        return Err(Error::BadParams("need at least five grid points".into()));
    }
    let r = path.order.unwrap_or(1) as f64;
    let mut names: Vec<String> = Vec::new();
    let mut raw: Vec<Vec<f64>> = Vec::new();
    let mut ratio: Vec<Vec<f64>> = Vec::new();
    let mut zero: Vec<bool> = Vec::new();
    for &t in ts {
        if t <= 0.0 {
            return Err(Error::NotApplicable("t = 0 gives 0/0".into()));
        }
        let rep = path.at(t)?;
        let w = w_power(&rep, r)?;
        let cs = coefficients(path, &rep, t)?;
        if names.is_empty() {
            names = cs.iter().map(|c| c.0.clone()).collect();
            raw = vec![Vec::new(); cs.len()];
            ratio = vec![Vec::new(); cs.len()];
            zero = vec![true; cs.len()];
        }
        for (k, (_, (value, scale))) in cs.into_iter().enumerate() {
            raw[k].push(value);
            // S33 sums are already normalized by t^v
            let denom = if path.kind == WitnessKind::S33 { 1.0 } else { w };
            ratio[k].push(value.abs() / denom);
            zero[k] &= value.abs() <= ZERO_REL * scale.max(f64::MIN_POSITIVE) || value == 0.0;
        }
    }
    let traces: Vec<CoefficientTrace> = names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let decay = ratio[k][0] / ratio[k][4];
            let vanishes = zero[k];
            CoefficientTrace {
                name,
                t: ts.to_vec(),
                raw: raw[k].clone(),
                ratio: ratio[k].clone(),
                vanishes,
                decay,
                passed: vanishes || decay >= 10.0,
            }
        })
        .collect();
    let passed = traces.iter().all(|t| t.passed);
    Ok(CoefficientCheck { kind: path.kind, order: path.order, traces, passed })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioRow {
    pub t: f64,
    pub w_s: f64,
    pub sup_diff: f64,
    pub sup_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioReport {
    pub s: f64,
    pub rows: Vec<RatioRow>,
    /// sup_ratio at t_max over sup_ratio after four halvings
    pub decay: f64,
    pub median: f64,
    /// min and max of sup_ratio divided by the median
    pub band: (f64, f64),
    pub min_over_max: f64,
}

/// Uniform grid over the ±8σ envelope of every atom met along the path.
pub fn default_x_grid(path: &WitnessPath, ts: &[f64]) -> Result<Vec<f64>> {
    let mut measures = vec![path.base.clone()];
    for &t in ts {
        measures.push(path.at(t)?.to_measure()?);
    }
    let refs: Vec<&MixingMeasure> = measures.iter().collect();
    let (lo, hi) = envelope_bounds(&refs);
    Ok((0..GRID_POINTS).map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64).collect())
}

fn check_coverage(g0: &MixingMeasure, x: &[f64]) -> Result<()> {
    let (lo, hi) = (x[0], x[x.len() - 1]);
    if !(hi > lo) {
        return Err(Error::GridTooCoarse(1.0));
    }
    let mass = QuadGrid::new(lo, hi).integrate(|y| kernels::mixture_density(g0, y));
    if (1.0 - mass).abs() > 1e-10 {
        return Err(Error::GridTooCoarse((1.0 - mass).abs()));
    }
    Ok(())
}

/// sup_x |p_{G(t)} − p_{G0}| grouped by base atom so the cancellation happens
/// inside each group before the groups are summed.
fn sup_diff(rep: &ConvergentRep, x: &[f64]) -> f64 {
    x.par_iter()
        .map(|&y| {
            let parts: Vec<f64> = rep
                .groups()
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let moved: Vec<f64> = g.iter().map(|(p, e)| p * kernels::density(e, y)).collect();
                    let w0 = rep.base_weight(i);
                    let fixed = if w0 > 0.0 { w0 * kernels::density(rep.limit(i), y) } else { 0.0 };
                    pairwise_sum(&moved) - fixed
                })
                .collect();
            pairwise_sum(&parts).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// sup-norm density gap over W_s^s along the path.
pub fn verify_density_ratio(path: &WitnessPath, s: f64, ts: &[f64], x_grid: Option<&[f64]>) -> Result<RatioReport> {
    if ts.iter().any(|&t| t <= 0.0) {
        return Err(Error::NotApplicable("t = 0 gives 0/0".into()));
    }
    if ts.len() < 5 {
        return Err(Error::BadParams("need at least five grid points".into()));
    }
    let owned;
    let x = match x_grid {
        Some(x) => x,
        None => {
            owned = default_x_grid(path, ts)?;
            &owned[..]
        }
    };
    check_coverage(&path.base, x)?;
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let rep = path.at(t)?;
        let w = w_power(&rep, s)?;
        let sd = sup_diff(&rep, x);
        rows.push(RatioRow { t, w_s: w.powf(1.0 / s), sup_diff: sd, sup_ratio: sd / w });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.sup_ratio).collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    Ok(RatioReport {
        s,
        decay: ratios[0] / ratios[4],
        median,
        band: (min / median, max / median),
        min_over_max: min / max,
        rows,
    })
}
