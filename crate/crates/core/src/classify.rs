//! Singularity structure of a mixing measure: skew-normal e-mixture
//! partition S0/S1/S2/S31/S32/S33, Gamma generic/pathological cases, and
//! o-mixture bounds through the limiting polynomial systems.

use crate::error::{Error, Result};
use crate::kernels;
use crate::mixing::{Family, MixingMeasure};
use crate::polysys::{self, SolverConfig};
use crate::quad::{pairwise_sum, QuadGrid};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub const ZERO_TOL: f64 = 1e-10;
pub const BOUNDARY_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    #[serde(rename = "e")]
    Exact,
    #[serde(rename = "o")]
    Over,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Exact(u32),
    Bound(u32),
    /// claimed without proof; never treated as exact
    Conjectural(u32),
    Unknown,
    Infinite,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct LevelJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conjectural: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inf: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unknown: Option<bool>,
}

impl Serialize for Level {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut j = LevelJson::default();
        match *self {
            Level::Exact(v) => j.exact = Some(v),
            Level::Bound(v) => j.bound = Some(v),
            Level::Conjectural(v) => j.conjectural = Some(v),
            Level::Unknown => j.unknown = Some(true),
            Level::Infinite => j.inf = Some(true),
        }
        j.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = LevelJson::deserialize(d)?;
        Ok(match j {
            LevelJson { exact: Some(v), .. } => Level::Exact(v),
            LevelJson { bound: Some(v), .. } => Level::Bound(v),
            LevelJson { conjectural: Some(v), .. } => Level::Conjectural(v),
            LevelJson { inf: Some(true), .. } => Level::Infinite,
            _ => Level::Unknown,
        })
    }
}

/// One index vector; `None` components are infinite (null in JSON).
pub type Index = Vec<Option<u32>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSet {
    pub entries: Vec<Index>,
    /// false: the single entry is a component-wise upper bound
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoEntry {
    pub atom: usize,
    pub v: f64,
    pub m: f64,
    pub value: u32,
    pub exact: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aux {
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
    /// outer None: not applicable; inner None: infinite
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sbar: Option<Option<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kstar: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub rho: Vec<RhoEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rbar: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub label: String,
    pub level: Level,
    pub index_set: IndexSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Index>>,
    pub aux: Aux,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

impl SingularityReport {
    pub fn boundary_warning(&self) -> bool {
        self.warnings.iter().any(|w| w.starts_with("boundary"))
    }

    /// Exponent of n in the predicted W_{level+1} rate, when the level is finite.
    pub fn predicted_w_exponent(&self) -> Option<f64> {
        match self.level {
            Level::Exact(l) | Level::Bound(l) => Some(-1.0 / (2.0 * (l as f64 + 1.0))),
            _ => None,
        }
    }
}

fn fin(v: &[u32]) -> Index {
    v.iter().map(|&x| Some(x)).collect()
}

fn inf(d: usize) -> Index {
    vec![None; d]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypePolynomials {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub p1_zero: bool,
    pub p2_zero: bool,
    pub p3_zero: bool,
    pub p4_zero: bool,
    /// smallest normalized nonzero factor; small values mean the measure sits near a boundary
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomologyStructure {
    pub classes: Vec<Vec<usize>>,
    pub conformant: Vec<bool>,
    /// local Type C(1) / C(2) singularity in a nonconformant class
    pub c1: Vec<bool>,
    pub c2: Vec<bool>,
}

fn skew_parts(g: &MixingMeasure) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let th = g.atoms().iter().map(|a| a.get(0)).collect();
    let v = g.atoms().iter().map(|a| a.get(1)).collect();
    let m = g.atoms().iter().map(|a| a.get(2)).collect();
    (g.weights().to_vec(), th, v, m)
}

/// Normalized squared homology distance between atoms i and j.
fn homology_gap(th: &[f64], v: &[f64], m: &[f64], i: usize, j: usize) -> (f64, bool) {
    let dt = th[i] - th[j];
    let st = th[i].abs().max(th[j].abs()).max(1.0);
    let (x, y) = (v[i] * (1.0 + m[j] * m[j]), v[j] * (1.0 + m[i] * m[i]));
    let sv = x.abs().max(y.abs()).max(1.0);
    let zero = dt.abs() <= ZERO_TOL * st && (x - y).abs() <= ZERO_TOL * sv;
    ((dt / st).powi(2) + ((x - y) / sv).powi(2), zero)
}

fn subset_sum(p: &[f64], m: &[f64], s: &[usize]) -> (f64, f64) {
    let mut total = 0.0;
    let mut scale = 0.0;
    for &j in s {
        let t = p[j] * s.iter().filter(|&&l| l != j).map(|&l| m[l]).product::<f64>();
        total += t;
        scale += t.abs();
    }
    (total, scale)
}

fn subsets(class: &[usize]) -> Vec<Vec<usize>> {
    let n = class.len();
    (0u32..(1 << n))
        .filter(|mask| mask.count_ones() >= 2)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| class[i]).collect())
        .collect()
}

fn c2_gap(p: &[f64], v: &[f64], m: &[f64], i: usize, j: usize) -> (f64, bool) {
    let (si, sj) = (v[i].sqrt(), v[j].sqrt());
    let a = m[i] * sj + m[j] * si;
    let sa = (m[i] * sj).abs().max((m[j] * si).abs()).max(f64::MIN_POSITIVE);
    let b = p[i] * sj - p[j] * si;
    let sb = (p[i] * sj).abs().max((p[j] * si).abs());
    let zero = a.abs() <= ZERO_TOL * sa && b.abs() <= ZERO_TOL * sb;
    ((a / sa).powi(2) + (b / sb).powi(2), zero)
}

/// Homologous pairs with a local Type C(2) singularity.
pub(crate) fn c2_pairs(g: &MixingMeasure) -> Vec<(usize, usize)> {
    let (p, th, v, m) = skew_parts(g);
    let mut out = Vec::new();
    for i in 0..g.k() {
        for j in i + 1..g.k() {
            if homology_gap(&th, &v, &m, i, j).1 && c2_gap(&p, &v, &m, i, j).1 {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn homology(g: &MixingMeasure) -> Result<HomologyStructure> {
    if g.family() != Family::SkewNormal {
        return Err(Error::NotApplicable("homology is defined for skew-normal measures".into()));
    }
    let (p, th, v, m) = skew_parts(g);
    let k = g.k();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        if p[i] != i {
            let r = find(p, p[i]);
            p[i] = r;
        }
        p[i]
    }
    for i in 0..k {
        for j in i + 1..k {
            if homology_gap(&th, &v, &m, i, j).1 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..k {
        let r = find(&mut parent, i);
        match classes.iter_mut().find(|c| c[0] == r) {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    let conformant: Vec<bool> = classes
        .iter()
        .map(|c| !c.iter().any(|&i| c.iter().any(|&j| m[i] * m[j] < 0.0)))
        .collect();
    let c1 = classes
        .iter()
        .zip(&conformant)
        .map(|(c, &conf)| {
            !conf
                && subsets(c).iter().any(|s| {
                    let (t, sc) = subset_sum(&p, &m, s);
                    t.abs() <= ZERO_TOL * sc
                })
        })
        .collect();
    let c2 = classes
        .iter()
        .zip(&conformant)
        .map(|(c, &conf)| !conf && c.iter().any(|&i| c.iter().any(|&j| i != j && c2_gap(&p, &v, &m, i, j).1)))
        .collect();
    Ok(HomologyStructure { classes, conformant, c1, c2 })
}

pub fn type_polynomials(g: &MixingMeasure) -> Result<TypePolynomials> {
    if g.family() != Family::SkewNormal {
        return Err(Error::NotApplicable("type polynomials are defined for skew-normal measures".into()));
    }
    let (p, th, v, m) = skew_parts(g);
    let k = g.k();
    let h = homology(g)?;
    let mut margin = f64::INFINITY;
    let mut note = |x: f64, zero: bool| {
        if !zero {
            margin = margin.min(x);
        }
    };

    let p1: f64 = m.iter().product();
    let mut p1_zero = false;
    for &mi in &m {
        let z = mi.abs() <= ZERO_TOL;
        p1_zero |= z;
        note(mi.abs(), z);
    }

    let mut p2 = 1.0;
    let mut p2_zero = false;
    for i in 0..k {
        for j in i + 1..k {
            let dt = th[i] - th[j];
            let dv = v[i] * (1.0 + m[j] * m[j]) - v[j] * (1.0 + m[i] * m[i]);
            p2 *= dt * dt + dv * dv;
            let (gap, zero) = homology_gap(&th, &v, &m, i, j);
            p2_zero |= zero;
            note(gap, zero);
        }
    }

    let mut p3 = 1.0;
    let mut p3_zero = false;
    for (c, &conf) in h.classes.iter().zip(&h.conformant) {
        if conf {
            continue;
        }
        for s in subsets(c) {
            let (t, sc) = subset_sum(&p, &m, &s);
            p3 *= t;
            let zero = t.abs() <= ZERO_TOL * sc;
            p3_zero |= zero;
            note(t.abs() / sc, zero);
        }
    }

    let mut p4 = 1.0;
    let mut p4_zero = false;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let dt = th[i] - th[j];
            let dv = v[i] * (1.0 + m[j] * m[j]) - v[j] * (1.0 + m[i] * m[i]);
            let (si, sj) = (v[i].sqrt(), v[j].sqrt());
            p4 *= dt * dt + dv * dv + (m[i] * sj + m[j] * si).powi(2) + (p[i] * sj - p[j] * si).powi(2);
            let (hg, hz) = homology_gap(&th, &v, &m, i, j);
            let (cg, cz) = c2_gap(&p, &v, &m, i, j);
            p4_zero |= hz && cz;
            if hz {
                note(cg, cz);
            } else {
                let _ = hg;
            }
        }
    }
    Ok(TypePolynomials { p1, p2, p3, p4, p1_zero, p2_zero, p3_zero, p4_zero, margin })
}

pub fn is_s0(g: &MixingMeasure) -> bool {
    type_polynomials(g).map(|t| !t.p1_zero && !t.p2_zero).unwrap_or(false)
}

fn boundary_warnings(t: &TypePolynomials) -> Vec<String> {
    if t.margin < BOUNDARY_MARGIN {
        vec![format!("boundary proximity: smallest nonzero type-polynomial factor {:.3e}", t.margin)]
    } else {
        Vec::new()
    }
}

pub fn classify_emixture(g: &MixingMeasure) -> Result<SingularityReport> {
    match g.family() {
        Family::SkewNormal => classify_skew_emixture(g, &SolverConfig::default()),
        Family::Gaussian => Ok(first_order_identifiable(g, "gaussian-e")),
        Family::Gamma => classify_gamma(g, Setting::Exact),
    }
}

fn first_order_identifiable(g: &MixingMeasure, label: &str) -> SingularityReport {
    let d = g.family().dim();
    SingularityReport {
        label: label.into(),
        level: Level::Exact(0),
        index_set: IndexSet { entries: vec![vec![Some(1); d]], exact: true },
        matrix: Some(vec![vec![Some(1); d]; g.k()]),
        aux: Aux::default(),
        warnings: Vec::new(),
    }
}

pub fn classify_skew_emixture(g: &MixingMeasure, cfg: &SolverConfig) -> Result<SingularityReport> {
    let t = type_polynomials(g)?;
    let h = homology(g)?;
    let (p, _, _, m) = skew_parts(g);
    let k = g.k();
    let warnings = boundary_warnings(&t);
    let in_multi = |i: usize| h.classes.iter().any(|c| c.len() > 1 && c.contains(&i));
    let nonconformant = h.conformant.iter().any(|c| !c);

    let report = |label: &str, level, entries: Vec<Index>, exact, matrix, aux| SingularityReport {
        label: label.into(),
        level,
        index_set: IndexSet { entries, exact },
        matrix,
        aux,
        warnings: warnings.clone(),
    };

    if !t.p1_zero && !t.p2_zero {
        return Ok(report("S0", Level::Exact(0), vec![fin(&[1, 1, 1])], true, Some(vec![fin(&[1, 1, 1]); k]), Aux::default()));
    }
    if !t.p1_zero && t.p2_zero && !nonconformant {
        let matrix = (0..k).map(|i| if in_multi(i) { fin(&[1, 1, 2]) } else { fin(&[1, 1, 1]) }).collect();
        return Ok(report("S1", Level::Exact(1), vec![fin(&[1, 1, 2])], true, Some(matrix), Aux::default()));
    }
    if t.p1_zero && (!t.p2_zero || !nonconformant) {
        let matrix = (0..k)
            .map(|i| {
                if m[i].abs() <= ZERO_TOL {
                    fin(&[3, 2, 3])
                } else if in_multi(i) {
                    fin(&[1, 1, 2])
                } else {
                    fin(&[1, 1, 1])
                }
            })
            .collect();
        return Ok(report("S2", Level::Exact(2), vec![fin(&[3, 2, 3])], true, Some(matrix), Aux::default()));
    }

    // S3: some nonconformant homologous class.
    let index_for = |level: u32| if t.p1_zero { fin(&[3, 2, level.max(2) + 1]) } else { fin(&[1, 1, level + 1]) };
    if t.p4_zero {
        return Ok(report("S33", Level::Infinite, vec![inf(3)], true, None, Aux { sbar: Some(None), ..Aux::default() }));
    }
    let nc: Vec<usize> = (0..h.classes.len()).filter(|&c| !h.conformant[c]).collect();
    if t.p3_zero {
        let c1_len = nc.iter().filter(|&&c| h.c1[c]).map(|&c| h.classes[c].len()).max().unwrap_or(0);
        let aux = Aux { sbar: Some(None), kstar: Some(c1_len), ..Aux::default() };
        if c1_len == 2 && !t.p1_zero {
            return Ok(report("S32", Level::Exact(3), vec![fin(&[1, 1, 4])], true, None, aux));
        }
        if nc.len() == 1 && h.classes[nc[0]].len() == k && !t.p1_zero {
            let l = k as u32 + 1;
            let mut r = report("S32", Level::Conjectural(l), vec![fin(&[1, 1, l + 1])], false, None, aux);
            r.warnings.push("conjectural: level k0+1 is claimed but not proved for this configuration".into());
            return Ok(r);
        }
        return Ok(report("S32", Level::Unknown, vec![inf(3)], false, None, aux));
    }

    // S31: no Type C singularity; s̄ over the nonconformant classes.
    let kstar = nc.iter().map(|&c| h.classes[c].len()).max().unwrap_or(0);
    let mut sbar_all = 1u32;
    let mut sbar_exact = true;
    for &c in &nc {
        let a: Vec<f64> = h.classes[c].iter().map(|&i| p[i]).collect();
        let b: Vec<f64> = h.classes[c].iter().map(|&i| m[i]).collect();
        let (value, exact) = match polysys::sbar_closed_form(&a, &b) {
            Some(v) => (v, true),
            None => {
                let lad = polysys::sbar(&a, &b, cfg)?;
                (lad.value.unwrap_or(a.len() as u32 - 1).min(a.len() as u32 - 1), lad.exact)
            }
        };
        sbar_all = sbar_all.max(value);
        sbar_exact &= exact;
    }
    let aux = Aux { sbar: Some(Some(sbar_all)), kstar: Some(kstar), ..Aux::default() };
    if !t.p1_zero && kstar <= 3 && sbar_exact {
        return Ok(report("S31", Level::Exact(sbar_all), vec![index_for(sbar_all)], true, None, aux));
    }
    let bound = if t.p1_zero { sbar_all.max(2) } else { sbar_all };
    Ok(report("S31", Level::Bound(bound), vec![index_for(bound)], false, None, aux))
}

fn gamma_pathological(g: &MixingMeasure) -> Vec<bool> {
    let k = g.k();
    let mut flag = vec![false; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let da = (g.atom(i).get(0) - g.atom(j).get(0)).abs();
            let db = (g.atom(i).get(1) - g.atom(j).get(1)).abs();
            if (da - 1.0).abs() <= ZERO_TOL && db <= ZERO_TOL {
                flag[i] = true;
            }
        }
    }
    flag
}

pub fn classify_gamma(g: &MixingMeasure, setting: Setting) -> Result<SingularityReport> {
    if g.family() != Family::Gamma {
        return Err(Error::NotApplicable("Gamma classification needs a Gamma measure".into()));
    }
    if g.atoms().iter().any(|a| a.get(0) < 1.0) {
        return Err(Error::BadParams("Gamma classification assumes shapes a >= 1".into()));
    }
    let path = gamma_pathological(g);
    let pathological = path.iter().any(|&x| x);
    let k = g.k();
    let (label, level, entry, matrix) = match (pathological, setting) {
        (false, Setting::Exact) => ("gamma-generic", Level::Exact(0), fin(&[1, 1]), Some(vec![fin(&[1, 1]); k])),
        (false, Setting::Over) => ("gamma-generic", Level::Exact(1), fin(&[2, 2]), None),
        (true, Setting::Exact) => (
            "gamma-pathological",
            Level::Infinite,
            inf(2),
            Some(path.iter().map(|&p| if p { inf(2) } else { fin(&[1, 1]) }).collect()),
        ),
        (true, Setting::Over) => ("gamma-pathological", Level::Infinite, inf(2), None),
    };
    Ok(SingularityReport {
        label: label.into(),
        level,
        index_set: IndexSet { entries: vec![entry], exact: true },
        matrix,
        aux: Aux::default(),
        warnings: Vec::new(),
    })
}

fn half_up(r: u32) -> u32 {
    r.div_ceil(2)
}

/// Over-fitted setting with k > k0 components and weights floored at c0.
pub fn classify_omixture(g: &MixingMeasure, k: usize, c0: f64, cfg: &SolverConfig) -> Result<SingularityReport> {
    if k <= g.k() {
        return Err(Error::BadParams(format!("need k > k0 = {}", g.k())));
    }
    if !(c0 > 0.0 && c0 * (k as f64) < 1.0) {
        return Err(Error::BadParams("weight floor c0 must lie in (0, 1/k)".into()));
    }
    let l = k - g.k();
    match g.family() {
        Family::Gamma => classify_gamma(g, Setting::Over),
        Family::Gaussian => {
            let lad = polysys::rbar(l, cfg)?;
            let rb = lad.value.ok_or_else(|| Error::NotApplicable("Gaussian ladder did not terminate".into()))?;
            let level = if lad.exact { Level::Exact(rb - 1) } else { Level::Bound(rb - 1) };
            Ok(SingularityReport {
                label: "gaussian-o".into(),
                level,
                index_set: IndexSet { entries: vec![fin(&[rb, half_up(rb)])], exact: lad.exact },
                matrix: None,
                aux: Aux { rbar: Some(rb), ..Aux::default() },
                warnings: Vec::new(),
            })
        }
        Family::SkewNormal => {
            let t = type_polynomials(g)?;
            if t.p1_zero || t.p2_zero {
                return Err(Error::NotS0("o-mixture bounds are only available for S0".into()));
            }
            let mut rho = Vec::new();
            for (i, a) in g.atoms().iter().enumerate() {
                let lad = polysys::rho(a.get(1), a.get(2), l, cfg)?;
                rho.push(RhoEntry { atom: i, v: a.get(1), m: a.get(2), value: lad.value.unwrap_or(polysys::LADDER_CAP), exact: lad.exact });
            }
            let r = rho.iter().map(|e| e.value).max().unwrap();
            Ok(SingularityReport {
                label: "skew-o".into(),
                level: Level::Bound(r - 1),
                index_set: IndexSet { entries: vec![fin(&[r, half_up(r), half_up(r)])], exact: false },
                matrix: None,
                aux: Aux { r: Some(r), rho, ..Aux::default() },
                warnings: boundary_warnings(&t),
            })
        }
    }
}

/// Over-fitted kernels whose derivatives up to order two are independent.
pub fn second_order_identifiable(dim: usize) -> SingularityReport {
    SingularityReport {
        label: "second-order-identifiable-o".into(),
        level: Level::Exact(1),
        index_set: IndexSet { entries: vec![vec![Some(2); dim]], exact: true },
        matrix: None,
        aux: Aux::default(),
        warnings: Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherRank {
    pub rank: usize,
    pub dim: usize,
    pub min_eigenvalue: f64,
    pub trace: f64,
}

/// Rank of ∫ s sᵀ p_G over the grid, where s collects ∂ log p_G with respect
/// to every weight and atom coordinate.
pub fn fisher_rank(g: &MixingMeasure, grid: &QuadGrid) -> Result<FisherRank> {
    let d = g.family().dim();
    let dim = g.k() * (d + 1);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(grid.x.len());
    for (&x, &w) in grid.x.iter().zip(&grid.w) {
        let pg = kernels::mixture_density(g, x);
        if !(pg > 0.0) {
            if w * pg.abs() > 0.0 || pg.is_nan() {
                return Err(Error::QuadratureFailure(format!("density not positive at x = {x}")));
            }
            continue;
        }
        let mut s = Vec::with_capacity(dim);
        for (a, &p) in g.atoms().iter().zip(g.weights()) {
            let jet = kernels::density_jet(a, x, 1);
            s.push(jet.value() / pg);
            for c in 0..d {
                let mut al = [0; 3];
                al[c] = 1;
                s.push(p * jet.derivative(al) / pg);
            }
        }
        let sw = (w * pg).sqrt();
        rows.push(s.into_iter().map(|v| v * sw).collect());
    }
    let mut info = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let terms: Vec<f64> = rows.iter().map(|r| r[a] * r[b]).collect();
            let v = pairwise_sum(&terms);
            info[(a, b)] = v;
            info[(b, a)] = v;
        }
    }
    if info.iter().any(|v| !v.is_finite()) {
        return Err(Error::QuadratureFailure("non-finite information entry".into()));
    }
    let trace = info.trace();
    let eig = SymmetricEigen::new(info).eigenvalues;
    let min_eigenvalue = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let rank = eig.iter().filter(|&&e| e > 1e-8 * trace).count();
    Ok(FisherRank { rank, dim, min_eigenvalue, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::{make_measure, ParamVec};

    fn skew(atoms: &[(f64, f64, f64)], w: &[f64]) -> MixingMeasure {
        make_measure(atoms.iter().map(|&(t, v, m)| ParamVec::skew(t, v, m).unwrap()).collect(), w.to_vec()).unwrap()
    }

    #[test]
    fn type_polynomial_zeros() {
        let g = skew(&[(0.0, 1.0, 0.0), (1.0, 2.0, -1.0)], &[0.5, 0.5]);
        assert!(type_polynomials(&g).unwrap().p1_zero);
        // θ equal and v/(1+m²) equal
        let g = skew(&[(0.0, 2.0, 1.0), (0.0, 5.0, 2.0)], &[0.5, 0.5]);
        assert!(type_polynomials(&g).unwrap().p2_zero);
        // p/σ equal and m/σ opposite on a homologous pair
        let g = skew(&[(0.0, 2.0, 1.0), (0.0, 2.0, -1.0)], &[0.5, 0.5]);
        let t = type_polynomials(&g).unwrap();
        assert!(t.p4_zero && t.p3_zero);
    }

    #[test]
    fn s0_example() {
        let g = skew(&[(0.0, 1.0, 1.0), (1.0, 2.0, -1.0)], &[0.5, 0.5]);
        let r = classify_emixture(&g).unwrap();
        assert_eq!(r.label, "S0");
        assert_eq!(r.level, Level::Exact(0));
        assert_eq!(r.index_set.entries, vec![fin(&[1, 1, 1])]);
    }

    #[test]
    fn level_json_round_trip() {
        for l in [Level::Exact(0), Level::Bound(3), Level::Conjectural(4), Level::Infinite, Level::Unknown] {
            let s = serde_json::to_string(&l).unwrap();
            assert_eq!(serde_json::from_str::<Level>(&s).unwrap(), l);
        }
        assert_eq!(serde_json::to_string(&Level::Exact(0)).unwrap(), r#"{"exact":0}"#);
    }

    #[test]
    fn gamma_cases() {
        let gm = |a: &[(f64, f64)]| make_measure(a.iter().map(|&(x, y)| ParamVec::gamma(x, y).unwrap()).collect(), vec![0.5, 0.5]).unwrap();
        assert_eq!(classify_gamma(&gm(&[(2.0, 1.0), (4.0, 3.0)]), Setting::Exact).unwrap().level, Level::Exact(0));
        assert_eq!(classify_gamma(&gm(&[(2.0, 1.0), (3.0, 1.0)]), Setting::Exact).unwrap().level, Level::Infinite);
        assert_eq!(classify_gamma(&gm(&[(2.0, 1.0), (3.0, 1.5)]), Setting::Exact).unwrap().label, "gamma-generic");
    }
}
