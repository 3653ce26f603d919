//! Limiting polynomial systems and a multi-start numeric solvability oracle.
//!
//! Every system here is a sum over groups j = 1..J of per-group monomials in
//! (a_j, b_j, c_j), optionally multiplied by a positive group weight w_j (the
//! square d_j² of the mass variables). Weights are parametrized as
//! w = δ + (1 − Jδ)·softmax(u), so a collapsing group cannot fake a solution,
//! and the free unknowns are rescaled along the homogeneity orbit
//! (a, b, c) ↦ (ta, t²b, t²c) onto Σ_j w_j (a_j⁴ + b_j² + c_j²) = 1.

use crate::error::{Error, Result};
use crate::reduce::{self, in_basis, order, weighted_degree, Multi};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub exps: [u32; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equation {
    /// Basis index (skew), order α (Gaussian as [α,0,0]) or u (s̄ as [u,0,0]).
    pub label: [u32; 3],
    /// terms[j] are the monomials contributed by group j.
    pub terms: Vec<Vec<Term>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySystem {
    pub kind: String,
    pub groups: usize,
    /// which of (a, b, c) are unknowns
    pub active: [bool; 3],
    /// homogeneity weights of (a, b, c)
    pub homog: [u32; 3],
    pub weighted: bool,
    /// unknowns of which at least one must be nonzero
    pub nontrivial: [bool; 3],
    pub equations: Vec<Equation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub weights: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Solvable,
    Unsolvable,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvabilityVerdict {
    pub status: Status,
    pub residual: f64,
    pub starts: usize,
    pub witness: Option<Assignment>,
    pub solve_tol: f64,
    pub unsolve_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub solve_tol: f64,
    pub unsolve_tol: f64,
    pub starts: usize,
    pub delta: f64,
    pub max_iter: usize,
    /// starts per parallel batch; the search stops after the batch that first solves
    pub batch: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { solve_tol: 1e-12, unsolve_tol: 1e-4, starts: 500, delta: 0.05, max_iter: 400, batch: 25 }
    }
}

impl PolySystem {
    fn active_count(&self) -> usize {
        self.active.iter().filter(|&&x| x).count()
    }

    pub fn unknowns(&self) -> usize {
        self.groups * (self.active_count() + usize::from(self.weighted))
    }

    pub fn residuals(&self, s: &Assignment) -> Vec<f64> {
        let mut pw = vec![[[1.0f64; 8]; 3]; self.groups];
        for j in 0..self.groups {
            let x = [s.a[j], s.b[j], s.c[j]];
            for (k, &xv) in x.iter().enumerate() {
                for e in 1..8 {
                    pw[j][k][e] = pw[j][k][e - 1] * xv;
                }
            }
        }
        self.equations
            .iter()
            .map(|eq| {
                let mut total = 0.0;
                for (j, terms) in eq.terms.iter().enumerate() {
                    let mut g = 0.0;
                    for t in terms {
                        g += t.coef * pw[j][0][t.exps[0] as usize] * pw[j][1][t.exps[1] as usize] * pw[j][2][t.exps[2] as usize];
                    }
                    total += if self.weighted { s.weights[j] * g } else { g };
                }
                total
            })
            .collect()
    }

    /// Σ eq² at an assignment.
    pub fn residual_at(&self, s: &Assignment) -> f64 {
        self.residuals(s).iter().map(|r| r * r).sum()
    }

    fn unpack(&self, z: &[f64], delta: f64) -> Assignment {
        let jn = self.groups;
        let (weights, x) = if self.weighted {
            let u = &z[..jn];
            let mx = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = u.iter().map(|v| (v - mx).exp()).collect();
            let s: f64 = e.iter().sum();
            (e.iter().map(|v| delta + (1.0 - jn as f64 * delta) * v / s).collect::<Vec<_>>(), &z[jn..])
        } else {
            (vec![1.0; jn], z)
        };
        let mut vars = [vec![0.0; jn], vec![0.0; jn], vec![0.0; jn]];
        let mut it = x.iter();
        for k in 0..3 {
            if self.active[k] {
                for j in 0..jn {
                    vars[k][j] = *it.next().unwrap();
                }
            }
        }
        let h = *self.homog.iter().max().unwrap() as i32;
        let mut q = 0.0;
        for j in 0..jn {
            for k in 0..3 {
                if self.active[k] {
                    q += weights[j] * vars[k][j].powi(2 * h / self.homog[k] as i32);
                }
            }
        }
        let n = q.powf(1.0 / (2 * h) as f64);
        if n > 0.0 && n.is_finite() {
            for k in 0..3 {
                let f = n.powi(self.homog[k] as i32);
                for v in vars[k].iter_mut() {
                    *v /= f;
                }
            }
        }
        let [a, b, c] = vars;
        Assignment { weights, a, b, c }
    }

    /// Share of the normalized mass carried by the nontriviality unknowns.
    fn nontrivial_block(&self, s: &Assignment) -> f64 {
        let h = *self.homog.iter().max().unwrap() as i32;
        let vars = [&s.a, &s.b, &s.c];
        let mut q = 0.0;
        for j in 0..self.groups {
            for k in 0..3 {
                if self.nontrivial[k] && self.active[k] {
                    q += s.weights[j] * vars[k][j].powi(2 * h / self.homog[k] as i32);
                }
            }
        }
        q
    }

    fn seed(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.kind.hash(&mut h);
        self.groups.hash(&mut h);
        for eq in &self.equations {
            eq.label.hash(&mut h);
            for ts in &eq.terms {
                for t in ts {
                    t.coef.to_bits().hash(&mut h);
                    t.exps.hash(&mut h);
                }
            }
        }
        h.finish()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Σ_j w_j Σ_{n1+2n2=α} a_j^{n1} b_j^{n2} / (n1! n2!) = 0, α = 1..r.
pub fn build_gaussian_system(l: usize, r: u32) -> PolySystem {
    let groups = l + 1;
    let equations = (1..=r)
        .map(|alpha| {
            let terms: Vec<Term> = (0..=alpha / 2)
                .map(|n2| {
                    let n1 = alpha - 2 * n2;
                    Term { coef: 1.0 / (factorial(n1) * factorial(n2)), exps: [n1, n2, 0] }
                })
                .collect();
            Equation { label: [alpha, 0, 0], terms: vec![terms; groups] }
        })
        .collect();
    PolySystem {
        kind: "gaussian".into(),
        groups,
        active: [true, true, false],
        homog: [1, 2, 2],
        weighted: true,
        nontrivial: [true, false, false],
        equations,
    }
}

/// Basis indices β ≠ 0 with weighted degree ≤ r, ordered by (degree, β3, β).
pub fn skew_equation_labels(r: u32) -> Vec<Multi> {
    let mut out: Vec<Multi> = reduce::basis_indices(r)
        .into_iter()
        .filter(|b| order(*b) > 0 && weighted_degree(*b) <= r)
        .collect();
    out.sort_by_key(|b| (weighted_degree(*b), b[2], *b));
    out
}

/// For each β ∈ F with weighted degree w ≤ r:
/// Σ_j w_j Σ_{α: deg α = w} coef_{α→β}(m0, v0) a^α1 b^α2 c^α3 / α! = 0.
pub fn build_skew_system(v0: f64, m0: f64, l: usize, r: u32) -> Result<PolySystem> {
    if m0 == 0.0 {
        return Err(Error::PoleAtZeroShape);
    }
    if r as usize > reduce::MAX_REDUCE_ORDER {
        return Err(Error::OrderTooHigh(r as usize, reduce::MAX_REDUCE_ORDER));
    }
    let groups = l + 1;
    let mut equations = Vec::new();
    for beta in skew_equation_labels(r) {
        let w = weighted_degree(beta);
        let mut terms = Vec::new();
        for a1 in 0..=w {
            for a2 in 0..=(w - a1) / 2 {
                let a3 = (w - a1 - 2 * a2) / 2;
                if a1 + 2 * a2 + 2 * a3 != w {
                    continue;
                }
                let alpha = [a1, a2, a3];
                let red = reduce::reduce_skew(alpha)?;
                if let Some(c) = red.terms.get(&beta) {
                    let coef = c.eval(m0, v0) / (factorial(a1) * factorial(a2) * factorial(a3));
                    terms.push(Term { coef, exps: alpha });
                }
            }
        }
        equations.push(Equation { label: beta, terms: vec![terms; groups] });
    }
    debug_assert!(equations.iter().all(|e| in_basis(e.label)));
    Ok(PolySystem {
        kind: format!("skew(v={v0},m={m0})"),
        groups,
        active: [true, true, true],
        homog: [1, 2, 2],
        weighted: true,
        nontrivial: [true, true, true],
        equations,
    })
}

/// The rows of the skew system free of (v, m): those with β3 = 0, unknowns (a, b).
pub fn skew_free_subsystem(l: usize, r: u32) -> Result<PolySystem> {
    let full = build_skew_system(1.0, 1.0, l, r)?;
    let equations: Vec<Equation> = full.equations.into_iter().filter(|e| e.label[2] == 0).collect();
    debug_assert!(equations.iter().all(|e| e.terms.iter().flatten().all(|t| t.exps[2] == 0)));
    Ok(PolySystem {
        kind: "skew-free".into(),
        groups: full.groups,
        active: [true, true, false],
        homog: [1, 2, 2],
        weighted: true,
        nontrivial: [true, true, false],
        equations,
    })
}

fn check_sbar_params(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::BadParams("need matching weight and shape lists of length >= 2".into()));
    }
    if a.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::BadParams("weights must be positive".into()));
    }
    if b.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return Err(Error::BadParams("shapes must be nonzero".into()));
    }
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            if b[i] == b[j] {
                return Err(Error::BadParams("shapes must be pairwise distinct".into()));
            }
        }
    }
    if !b.iter().any(|&x| x > 0.0) || !b.iter().any(|&x| x < 0.0) {
        return Err(Error::BadParams("shapes must take both signs".into()));
    }
    Ok(())
}

/// Σ_i a_i b_i^u c_i^{u+1} = 0 for u = 0..s, unknowns c.
pub fn build_sbar_system(a: &[f64], b: &[f64], s: u32) -> Result<PolySystem> {
    check_sbar_params(a, b)?;
    let equations = (0..=s)
        .map(|u| Equation {
            label: [u, 0, 0],
            terms: a.iter().zip(b).map(|(&ai, &bi)| vec![Term { coef: ai * bi.powi(u as i32), exps: [0, 0, u + 1] }]).collect(),
        })
        .collect();
    Ok(PolySystem {
        kind: "sbar".into(),
        groups: a.len(),
        active: [false, false, true],
        homog: [1, 1, 1],
        weighted: false,
        nontrivial: [false, false, true],
        equations,
    })
}

/// Levenberg–Marquardt with central-difference Jacobian; returns (z, Σ f²).
fn levenberg_marquardt(f: &dyn Fn(&[f64]) -> Vec<f64>, z0: Vec<f64>, max_iter: usize) -> (Vec<f64>, f64) {
    let n = z0.len();
    let mut z = z0;
    let mut r = DVector::from_vec(f(&z));
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        if !cost.is_finite() || cost < 1e-30 {
            break;
        }
        let m = r.len();
        let mut jac = DMatrix::zeros(m, n);
        for k in 0..n {
            let h = 1e-7 * z[k].abs().max(1.0);
            let mut zp = z.clone();
            zp[k] += h;
            let fp = f(&zp);
            zp[k] -= 2.0 * h;
            let fm = f(&zp);
            for i in 0..m {
                jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-9);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let zn: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rn = DVector::from_vec(f(&zn));
            let cn = rn.norm_squared();
            if cn.is_finite() && cn < cost {
                let rel = (cost - cn) / cost;
                z = zn;
                r = rn;
                cost = cn;
                lambda = (lambda / 3.0).max(1e-12);
                improved = rel > 1e-14 || step.norm() > 1e-14;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (z, cost)
}

struct StartOutcome {
    index: usize,
    cost: f64,
    assignment: Assignment,
}

fn run_start(sys: &PolySystem, cfg: &SolverConfig, seed: u64, index: usize) -> Option<StartOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut z = Vec::with_capacity(sys.unknowns());
    if sys.weighted {
        for _ in 0..sys.groups {
            z.push(rng.sample::<f64, _>(StandardNormal));
        }
    }
    let cauchy = Cauchy::new(0.0, 1.0).unwrap();
    let scale = [0.3, 1.0, 3.0][rng.random_range(0..3)];
    for _ in 0..sys.groups * sys.active_count() {
        z.push(scale * cauchy.sample(&mut rng));
    }
    let f = |z: &[f64]| sys.residuals(&sys.unpack(z, cfg.delta));
    let (z, cost) = levenberg_marquardt(&f, z, cfg.max_iter);
    let assignment = sys.unpack(&z, cfg.delta);
    if !cost.is_finite() || sys.nontrivial_block(&assignment) < 1e-3 {
        return None;
    }
    Some(StartOutcome { index, cost, assignment })
}

pub fn check_solvable(sys: &PolySystem, cfg: &SolverConfig) -> SolvabilityVerdict {
    let seed = sys.seed();
    let mut best: Option<StartOutcome> = None;
    let mut done = 0;
    while done < cfg.starts {
        let hi = (done + cfg.batch.max(1)).min(cfg.starts);
        let batch: Vec<Option<StartOutcome>> = (done..hi).into_par_iter().map(|i| run_start(sys, cfg, seed, i)).collect();
        for o in batch.into_iter().flatten() {
            let better = match &best {
                None => true,
                Some(b) => o.cost < b.cost || (o.cost == b.cost && o.index < b.index),
            };
            if better {
                best = Some(o);
            }
        }
        done = hi;
        if best.as_ref().is_some_and(|b| b.cost < cfg.solve_tol) {
            break;
        }
    }
    let (residual, witness) = match best {
        Some(b) => (b.cost, Some(b.assignment)),
        None => (f64::INFINITY, None),
    };
    let status = if residual < cfg.solve_tol {
        Status::Solvable
    } else if residual > cfg.unsolve_tol && done >= cfg.starts {
        Status::Unsolvable
    } else {
        Status::Inconclusive
    };
    SolvabilityVerdict { status, residual, starts: done, witness, solve_tol: cfg.solve_tol, unsolve_tol: cfg.unsolve_tol }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub r: u32,
    pub verdict: SolvabilityVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderResult {
    /// None means infinite
    pub value: Option<u32>,
    pub exact: bool,
    pub rungs: Vec<Rung>,
}

/// Thresholds r̄(l) of the Gaussian system that are known facts.
pub fn rbar_known(l: usize) -> Option<u32> {
    match l {
        1 => Some(4),
        2 => Some(6),
        _ => None,
    }
}

pub const LADDER_CAP: u32 = 6;

/// Walks r = lo..=hi and stops at the first Unsolvable rung.
fn ladder(lo: u32, hi: u32, mut build: impl FnMut(u32) -> Result<PolySystem>, cfg: &SolverConfig) -> Result<(Option<u32>, bool, Vec<Rung>)> {
    let mut rungs = Vec::new();
    let mut clean = true;
    for r in lo..=hi {
        let verdict = check_solvable(&build(r)?, cfg);
        let status = verdict.status;
        rungs.push(Rung { r, verdict });
        match status {
            Status::Unsolvable => return Ok((Some(r), clean, rungs)),
            Status::Inconclusive => clean = false,
            Status::Solvable => {}
        }
    }
    Ok((None, clean, rungs))
}

/// Smallest r at which the Gaussian system for l extra atoms is unsolvable.
pub fn rbar(l: usize, cfg: &SolverConfig) -> Result<LadderResult> {
    let (value, exact, rungs) = ladder(1, LADDER_CAP, |r| Ok(build_gaussian_system(l, r)), cfg)?;
    Ok(match value {
        Some(v) => LadderResult { value: Some(v), exact, rungs },
        None => LadderResult { value: rbar_known(l), exact: rbar_known(l).is_some(), rungs },
    })
}

/// ρ(v0, m0, l): searched over r < r̄(l); reaching r̄(l) without an Unsolvable rung gives ρ = r̄(l).
pub fn rho(v0: f64, m0: f64, l: usize, cfg: &SolverConfig) -> Result<LadderResult> {
    if m0 == 0.0 {
        return Err(Error::PoleAtZeroShape);
    }
    let cap = rbar_known(l).unwrap_or(LADDER_CAP);
    let (value, clean, rungs) = ladder(1, cap - 1, |r| build_skew_system(v0, m0, l, r), cfg)?;
    Ok(match value {
        Some(v) => LadderResult { value: Some(v), exact: clean, rungs },
        None => LadderResult { value: Some(cap), exact: clean && rbar_known(l).is_some(), rungs },
    })
}

/// Whether some subset I with |I| ≥ 2 has Σ_{i∈I} a_i Π_{j∈I∖i} b_j = 0.
pub fn has_vanishing_subset(a: &[f64], b: &[f64], tol: f64) -> bool {
    let n = a.len();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let (mut s, mut scale) = (0.0, 0.0);
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            let t = a[i] * (0..n).filter(|&j| j != i && mask >> j & 1 == 1).map(|j| b[j]).product::<f64>();
            s += t;
            scale += t.abs();
        }
        if s.abs() <= tol * scale {
            return true;
        }
    }
    false
}

/// Closed forms of s̄ for two or three atoms (no vanishing subset assumed).
pub fn sbar_closed_form(a: &[f64], b: &[f64]) -> Option<u32> {
    match a.len() {
        2 => Some(1),
        3 => {
            let s: f64 = (0..3).map(|i| a[i] * (0..3).filter(|&j| j != i).map(|j| b[j]).product::<f64>()).sum();
            Some(if s > 0.0 { 1 } else { 2 })
        }
        _ => None,
    }
}

/// s̄(a, b): minimal s ≥ 1 at which the s̄ system has only the trivial solution.
pub fn sbar(a: &[f64], b: &[f64], cfg: &SolverConfig) -> Result<LadderResult> {
    check_sbar_params(a, b)?;
    if has_vanishing_subset(a, b, 1e-10) {
        return Ok(LadderResult { value: None, exact: true, rungs: Vec::new() });
    }
    let cap = (a.len() - 1) as u32;
    let (value, clean, rungs) = ladder(1, cap.saturating_sub(1).max(1), |s| build_sbar_system(a, b, s), cfg)?;
    Ok(match value {
        Some(v) => LadderResult { value: Some(v), exact: clean, rungs },
        None => LadderResult { value: Some(cap.max(1)), exact: clean, rungs },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SolverConfig {
        SolverConfig { starts: 60, ..SolverConfig::default() }
    }

    #[test]
    fn gaussian_system_shape() {
        let s = build_gaussian_system(1, 2);
        assert_eq!(s.equations.len(), 2);
        let e = &s.equations[1].terms[0];
        assert!(e.contains(&Term { coef: 0.5, exps: [2, 0, 0] }));
        assert!(e.contains(&Term { coef: 1.0, exps: [0, 1, 0] }));
        assert_eq!(build_gaussian_system(1, 1).equations.len(), 1);
        assert_eq!(s.unknowns(), 3 * 2);
    }

    #[test]
    fn skew_system_counts() {
        for r in 1..=6 {
            let s = build_skew_system(1.0, 1.0, 1, r).unwrap();
            assert_eq!(s.equations.len() as u32, 2 * r - 1);
        }
        assert!(matches!(build_skew_system(1.0, 0.0, 1, 3), Err(Error::PoleAtZeroShape)));
    }

    #[test]
    fn sbar_display_case() {
        let s = build_sbar_system(&[0.5, 0.5], &[1.0, -2.0], 2).unwrap();
        assert_eq!(s.equations.len(), 3);
        assert_eq!(s.equations[2].terms[1], vec![Term { coef: 0.5 * 4.0, exps: [0, 0, 3] }]);
        assert!(build_sbar_system(&[0.5, 0.5], &[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn sbar_zero_always_solvable() {
        let s = build_sbar_system(&[0.3, 0.7], &[1.0, -2.0], 0).unwrap();
        assert_eq!(check_solvable(&s, &quick()).status, Status::Solvable);
    }

    #[test]
    fn lm_solves_a_linear_system() {
        let f = |z: &[f64]| vec![z[0] + z[1] - 3.0, z[0] - z[1] - 1.0];
        let (z, c) = levenberg_marquardt(&f, vec![0.0, 0.0], 100);
        assert!(c < 1e-20);
        assert!((z[0] - 2.0).abs() < 1e-10 && (z[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn vanishing_subset_detection() {
        assert!(has_vanishing_subset(&[0.5, 0.5], &[1.0, -1.0], 1e-10));
        assert!(!has_vanishing_subset(&[0.5, 0.5], &[1.0, -2.0], 1e-10));
    }
}
