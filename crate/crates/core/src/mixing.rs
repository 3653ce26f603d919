//! Mixing measures, parameter boxes and the grouped representation of a
//! sequence converging to a fixed measure.

use crate::error::{Error, Result};
use crate::transport::TransportSpec;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

pub const ATOM_TOL: f64 = 1e-12;
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
pub const RENORMALIZE_WINDOW: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    SkewNormal,
    Gaussian,
    Gamma,
}

impl Family {
    pub fn dim(self) -> usize {
        match self {
            Family::SkewNormal => 3,
            Family::Gaussian | Family::Gamma => 2,
        }
    }

    pub fn coord_names(self) -> &'static [&'static str] {
        match self {
            Family::SkewNormal => &["theta", "v", "m"],
            Family::Gaussian => &["theta", "v"],
            Family::Gamma => &["a", "b"],
        }
    }

    /// Coordinates that must be strictly positive.
    pub fn positive_coords(self) -> &'static [usize] {
        match self {
            Family::SkewNormal | Family::Gaussian => &[1],
            Family::Gamma => &[0, 1],
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::SkewNormal => "skew_normal",
            Family::Gaussian => "gaussian",
            Family::Gamma => "gamma",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamVec {
    family: Family,
    coords: [f64; 3],
}

impl ParamVec {
    pub fn new(family: Family, coords: &[f64]) -> Result<ParamVec> {
        if coords.len() != family.dim() {
            return Err(Error::IndexMismatch { expected: family.dim(), got: coords.len() });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParam(format!("non-finite coordinate in {coords:?}")));
        }
        for &k in family.positive_coords() {
            if coords[k] <= 0.0 {
                return Err(Error::InvalidParam(format!(
                    "{} must be positive for {family}, got {}",
                    family.coord_names()[k],
                    coords[k]
                )));
            }
        }
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Ok(ParamVec { family, coords: c })
    }

    pub fn skew(theta: f64, v: f64, m: f64) -> Result<ParamVec> {
        ParamVec::new(Family::SkewNormal, &[theta, v, m])
    }

    pub fn gaussian(theta: f64, v: f64) -> Result<ParamVec> {
        ParamVec::new(Family::Gaussian, &[theta, v])
    }

    pub fn gamma(a: f64, b: f64) -> Result<ParamVec> {
        ParamVec::new(Family::Gamma, &[a, b])
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.family.dim()]
    }

    pub fn get(&self, k: usize) -> f64 {
        self.coords()[k]
    }

    /// Coordinate-wise shift; fails if the result leaves the family domain.
    pub fn shifted(&self, delta: &[f64]) -> Result<ParamVec> {
        if delta.len() != self.family.dim() {
            return Err(Error::IndexMismatch { expected: self.family.dim(), got: delta.len() });
        }
        let c: Vec<f64> = self.coords().iter().zip(delta).map(|(a, d)| a + d).collect();
        ParamVec::new(self.family, &c)
    }

    pub fn diff(&self, other: &ParamVec) -> Vec<f64> {
        self.coords().iter().zip(other.coords()).map(|(a, b)| a - b).collect()
    }

    pub fn approx_eq(&self, other: &ParamVec, tol: f64) -> bool {
        self.family == other.family
            && self.coords().iter().zip(other.coords()).all(|(a, b)| (a - b).abs() <= tol)
    }

    fn lex_cmp(&self, other: &ParamVec) -> Ordering {
        for (a, b) in self.coords().iter().zip(other.coords()) {
            match a.partial_cmp(b) {
                Some(Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        Ordering::Equal
    }
}

/// G = Σ p_i δ_{η_i}; atoms kept in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingMeasure {
    family: Family,
    atoms: Vec<ParamVec>,
    weights: Vec<f64>,
}

pub fn make_measure(atoms: Vec<ParamVec>, weights: Vec<f64>) -> Result<MixingMeasure> {
    MixingMeasure::new(atoms, weights)
}

impl MixingMeasure {
    pub fn new(atoms: Vec<ParamVec>, weights: Vec<f64>) -> Result<MixingMeasure> {
        if atoms.is_empty() {
            return Err(Error::BadWeights("empty measure".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::BadWeights(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let family = atoms[0].family();
        if atoms.iter().any(|a| a.family() != family) {
            return Err(Error::MixedFamilies);
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::BadWeights(format!("weight {w} is not strictly positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_WINDOW {
            return Err(Error::BadWeights(format!("weights sum to {total}, not 1")));
        }
        let weights: Vec<f64> = if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            weights.iter().map(|w| w / total).collect()
        } else {
            weights
        };
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if atoms[i].approx_eq(&atoms[j], ATOM_TOL) {
                    return Err(Error::DuplicateAtoms(i, j));
                }
            }
        }
        let mut order: Vec<usize> = (0..atoms.len()).collect();
        order.sort_by(|&a, &b| atoms[a].lex_cmp(&atoms[b]));
        Ok(MixingMeasure {
            family,
            atoms: order.iter().map(|&i| atoms[i]).collect(),
            weights: order.iter().map(|&i| weights[i]).collect(),
        })
    }

    pub fn from_coords(family: Family, atoms: &[Vec<f64>], weights: &[f64]) -> Result<MixingMeasure> {
        let atoms = atoms.iter().map(|c| ParamVec::new(family, c)).collect::<Result<Vec<_>>>()?;
        MixingMeasure::new(atoms, weights.to_vec())
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn k(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[ParamVec] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atom(&self, i: usize) -> &ParamVec {
        &self.atoms[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn to_json(&self) -> MeasureJson {
        MeasureJson {
            family: self.family,
            atoms: self.atoms.iter().map(|a| a.coords().to_vec()).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn from_json(j: &MeasureJson) -> Result<MixingMeasure> {
        MixingMeasure::from_coords(j.family, &j.atoms, &j.weights)
    }
}

/// Serialized form `{"family": ..., "atoms": [[..], ..], "weights": [..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureJson {
    pub family: Family,
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Serialize for MixingMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MixingMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MeasureJson::deserialize(d)?;
        MixingMeasure::from_json(&j).map_err(serde::de::Error::custom)
    }
}

/// Compact parameter region with a floor on component masses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub family: Family,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub mass_floor: f64,
}

impl ParamBox {
    pub fn new(family: Family, lo: Vec<f64>, hi: Vec<f64>, mass_floor: f64) -> Result<ParamBox> {
        let d = family.dim();
        if lo.len() != d || hi.len() != d {
            return Err(Error::IndexMismatch { expected: d, got: lo.len().min(hi.len()) });
        }
        for k in 0..d {
            if !(lo[k] <= hi[k]) {
                return Err(Error::InvalidParam(format!("empty interval for coordinate {k}")));
            }
        }
        for &k in family.positive_coords() {
            if lo[k] <= 0.0 {
                return Err(Error::InvalidParam(format!(
                    "lower bound of {} must be positive",
                    family.coord_names()[k]
                )));
            }
        }
        if !(0.0..1.0).contains(&mass_floor) {
            return Err(Error::InvalidParam(format!("mass floor {mass_floor} outside [0,1)")));
        }
        Ok(ParamBox { family, lo, hi, mass_floor })
    }

    pub fn default_for(family: Family) -> ParamBox {
        let (lo, hi) = match family {
            Family::SkewNormal => (vec![-10.0, 0.05, -10.0], vec![10.0, 25.0, 10.0]),
            Family::Gaussian => (vec![-10.0, 0.05], vec![10.0, 25.0]),
            Family::Gamma => (vec![0.5, 0.05], vec![50.0, 50.0]),
        };
        ParamBox { family, lo, hi, mass_floor: 0.02 }
    }

    /// Checks the floor is compatible with fitting `k` components.
    pub fn check_components(&self, k: usize) -> Result<()> {
        if self.mass_floor * k as f64 >= 1.0 {
            return Err(Error::InvalidParam(format!(
                "mass floor {} too large for {k} components",
                self.mass_floor
            )));
        }
        Ok(())
    }

    pub fn contains(&self, eta: &ParamVec) -> bool {
        eta.coords()
            .iter()
            .enumerate()
            .all(|(k, &c)| c >= self.lo[k] - 1e-12 && c <= self.hi[k] + 1e-12)
    }
}

/// Groups of atoms converging to the atoms of a base measure G0, plus
/// `extra` groups converging to points outside its support.
#[derive(Clone, Debug)]
pub struct ConvergentRep {
    base: MixingMeasure,
    limits: Vec<ParamVec>,
    groups: Vec<Vec<(f64, ParamVec)>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Deltas {
    /// Δη_ij per group i and member j.
    pub eta: Vec<Vec<Vec<f64>>>,
    /// Δp_{i·} per group.
    pub p: Vec<f64>,
    /// Group sizes s_i.
    pub sizes: Vec<usize>,
}

impl ConvergentRep {
    pub fn new(
        base: MixingMeasure,
        groups: Vec<Vec<(f64, ParamVec)>>,
        extra_limits: Vec<ParamVec>,
    ) -> Result<ConvergentRep> {
        let k0 = base.k();
        if groups.len() != k0 + extra_limits.len() {
            return Err(Error::BadParams(format!(
                "{} groups for {} base atoms and {} extra limits",
                groups.len(),
                k0,
                extra_limits.len()
            )));
        }
        if groups.iter().any(|g| g.is_empty()) {
            return Err(Error::BadParams("every group needs at least one atom".into()));
        }
        let fam = base.family();
        for (p, eta) in groups.iter().flatten() {
            if eta.family() != fam {
                return Err(Error::MixedFamilies);
            }
            if !(*p > 0.0) {
                return Err(Error::BadWeights(format!("group mass {p} is not positive")));
            }
        }
        if extra_limits.iter().any(|e| e.family() != fam) {
            return Err(Error::MixedFamilies);
        }
        let total: f64 = groups.iter().flatten().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > RENORMALIZE_WINDOW {
            return Err(Error::BadWeights(format!("group masses sum to {total}")));
        }
        let mut limits = base.atoms().to_vec();
        limits.extend(extra_limits);
        Ok(ConvergentRep { base, limits, groups })
    }

    pub fn base(&self) -> &MixingMeasure {
        &self.base
    }

    pub fn groups(&self) -> &[Vec<(f64, ParamVec)>] {
        &self.groups
    }

    pub fn limit(&self, i: usize) -> &ParamVec {
        &self.limits[i]
    }

    pub fn extra_count(&self) -> usize {
        self.groups.len() - self.base.k()
    }

    pub fn atom_count(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }

    /// Base mass p_i^0, zero for redundant groups.
    pub fn base_weight(&self, i: usize) -> f64 {
        if i < self.base.k() {
            self.base.weight(i)
        } else {
            0.0
        }
    }

    /// Flattens the groups into a measure; fails on coincident atoms.
    pub fn to_measure(&self) -> Result<MixingMeasure> {
        let (w, a): (Vec<f64>, Vec<ParamVec>) = self.groups.iter().flatten().cloned().unzip();
        MixingMeasure::new(a, w)
    }
}

pub fn delta_quantities(rep: &ConvergentRep) -> Deltas {
    let mut eta = Vec::new();
    let mut p = Vec::new();
    let mut sizes = Vec::new();
    for (i, g) in rep.groups.iter().enumerate() {
        let lim = rep.limit(i);
        eta.push(g.iter().map(|(_, e)| e.diff(lim)).collect());
        p.push(g.iter().map(|(w, _)| w).sum::<f64>() - rep.base_weight(i));
        sizes.push(g.len());
    }
    Deltas { eta, p, sizes }
}

/// Σ_ij p_ij cost(η_ij, η_i^0) + Σ_i |Δp_i·| on the power scale of `spec`.
pub fn semipoly_d(rep: &ConvergentRep, spec: &TransportSpec) -> Result<f64> {
    let d = rep.base.family().dim();
    spec.check_dim(d)?;
    let deltas = delta_quantities(rep);
    let mut total = 0.0;
    for (i, g) in rep.groups.iter().enumerate() {
        for (j, (p, _)) in g.iter().enumerate() {
            let diff = &deltas.eta[i][j];
            let c = match spec {
                TransportSpec::Block(k) => {
                    let row = k.get(i).ok_or(Error::IndexMismatch { expected: k.len(), got: i + 1 })?;
                    crate::transport::power_cost_kappa(row, diff)
                }
                _ => spec.power_cost(diff),
            };
            total += p * c;
        }
        total += deltas.p[i].abs();
    }
    Ok(total)
}
