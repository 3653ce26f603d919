//! Sampling from mixtures, box-constrained maximum likelihood, and
//! numeric Hellinger / total-variation distances.

use crate::error::{Error, Result};
use crate::kernels;
use crate::mixing::{Family, MixingMeasure, ParamBox, ParamVec, ATOM_TOL};
use crate::quad::{pairwise_sum, QuadGrid};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub seed: u64,
    pub generator: String,
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn draw(eta: &ParamVec, rng: &mut ChaCha8Rng) -> f64 {
    let c = eta.coords();
    match eta.family() {
        Family::SkewNormal => {
            let d = c[2] / (1.0 + c[2] * c[2]).sqrt();
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            c[0] + c[1].sqrt() * (d * z0.abs() + (1.0 - d * d).sqrt() * z1)
        }
        Family::Gaussian => {
            let z: f64 = rng.sample(StandardNormal);
            c[0] + c[1].sqrt() * z
        }
        Family::Gamma => Gamma::new(c[0], 1.0 / c[1]).expect("validated shape and rate").sample(rng),
    }
}

pub fn sample(g0: &MixingMeasure, n: usize, seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::BadParams("sample size must be at least 1".into()));
    }
    let mut rng = rng_for(seed, 0);
    let pick = WeightedIndex::new(g0.weights()).map_err(|e| Error::BadWeights(e.to_string()))?;
    let x = (0..n).map(|_| draw(g0.atom(pick.sample(&mut rng)), &mut rng)).collect();
    Ok(Sample { x, seed, generator: "chacha8".into() })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitConfig {
    pub starts: usize,
    pub max_iter: usize,
    /// stall tolerance on the mean log-likelihood
    pub tol: f64,
    pub seed: u64,
    /// extra starting measures tried alongside the data-driven ones
    #[serde(skip)]
    pub extra_starts: Vec<MixingMeasure>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { starts: 8, max_iter: 3000, tol: 1e-8, seed: 0, extra_starts: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub measure: MixingMeasure,
    pub loglik: f64,
    pub starts_used: usize,
    pub converged: bool,
    pub start_logliks: Vec<f64>,
}

pub fn loglik(g: &MixingMeasure, x: &[f64]) -> f64 {
    let terms: Vec<f64> = x.iter().map(|&y| kernels::mixture_density(g, y).max(f64::MIN_POSITIVE).ln()).collect();
    pairwise_sum(&terms)
}

struct Start {
    weights: Vec<f64>,
    atoms: Vec<Vec<f64>>,
}

fn clamp_into(b: &ParamBox, c: &mut [f64]) {
    for k in 0..c.len() {
        c[k] = c[k].clamp(b.lo[k], b.hi[k]);
    }
}

fn moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let skew = if var > 0.0 { x.iter().map(|y| (y - mean).powi(3)).sum::<f64>() / n / var.powf(1.5) } else { 0.0 };
    (mean, var, skew)
}

fn chunk_start(family: Family, b: &ParamBox, chunks: &[Vec<f64>], total: usize) -> Start {
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for ch in chunks {
        let (mean, var, skew) = if ch.is_empty() { (0.0, 1.0, 0.0) } else { moments(ch) };
        let var = var.max(1e-3);
        let mut c = match family {
            Family::SkewNormal => vec![mean, var, skew.signum() * 0.5],
            Family::Gaussian => vec![mean, var],
            Family::Gamma => {
                let m = mean.max(1e-3);
                vec![m * m / var, m / var]
            }
        };
        clamp_into(b, &mut c);
        atoms.push(c);
        weights.push((ch.len() as f64 / total as f64).max(b.mass_floor));
    }
    let s: f64 = weights.iter().sum();
    Start { weights: weights.iter().map(|w| w / s).collect(), atoms }
}

fn quantile_chunks(sorted: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = sorted.len();
    (0..k).map(|j| sorted[j * n / k..((j + 1) * n / k).max(j * n / k + 1).min(n)].to_vec()).collect()
}

/// Lloyd iterations from the quantile centers.
fn kmeans_chunks(sorted: &[f64], k: usize) -> Vec<Vec<f64>> {
    let mut centers: Vec<f64> = quantile_chunks(sorted, k).iter().map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let mut chunks = vec![Vec::new(); k];
    for _ in 0..20 {
        chunks = vec![Vec::new(); k];
        for &y in sorted {
            let j = (0..k).min_by(|&a, &b| (y - centers[a]).abs().total_cmp(&(y - centers[b]).abs())).unwrap();
            chunks[j].push(y);
        }
        for j in 0..k {
            if !chunks[j].is_empty() {
                centers[j] = chunks[j].iter().sum::<f64>() / chunks[j].len() as f64;
            }
        }
    }
    chunks
}

fn perturb(s: &Start, b: &ParamBox, rng: &mut ChaCha8Rng) -> Start {
    let atoms = s
        .atoms
        .iter()
        .map(|a| {
            let mut c = a.clone();
            let z: Vec<f64> = (0..c.len()).map(|_| rng.sample(StandardNormal)).collect();
            match b.family {
                Family::SkewNormal | Family::Gaussian => {
                    c[0] += 0.5 * c[1].sqrt() * z[0];
                    c[1] *= (0.5 * z[1]).exp();
                    if c.len() == 3 {
                        c[2] += z[2];
                    }
                }
                Family::Gamma => {
                    c[0] *= (0.3 * z[0]).exp();
                    c[1] *= (0.3 * z[1]).exp();
                }
            }
            clamp_into(b, &mut c);
            c
        })
        .collect();
    let mut w: Vec<f64> = s.weights.iter().map(|w| w * (0.3 * rng.sample::<f64, _>(StandardNormal)).exp()).collect();
    let t: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= t);
    Start { weights: w, atoms }
}

/// Projects weights onto {w ≥ c0, Σ w = 1}.
fn floor_weights(w: &mut [f64], c0: f64) {
    let k = w.len();
    let mut fixed = vec![false; k];
    loop {
        let free_mass: f64 = 1.0 - c0 * fixed.iter().filter(|&&f| f).count() as f64;
        let free_sum: f64 = (0..k).filter(|&j| !fixed[j]).map(|j| w[j]).sum();
        let mut changed = false;
        for j in 0..k {
            if fixed[j] {
                w[j] = c0;
            } else {
                w[j] = if free_sum > 0.0 { w[j] / free_sum * free_mass } else { free_mass / k as f64 };
                if w[j] < c0 {
                    fixed[j] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

struct Run {
    g: MixingMeasure,
    ll: f64,
    converged: bool,
}

/// Builds the fitted measure, merging atoms that landed on the same point.
fn measure_from(family: Family, atoms: &[Vec<f64>], w: &[f64]) -> Result<MixingMeasure> {
    let mut merged: Vec<(ParamVec, f64)> = Vec::new();
    for (c, &wj) in atoms.iter().zip(w) {
        let eta = ParamVec::new(family, c)?;
        match merged.iter_mut().find(|(e, _)| e.approx_eq(&eta, ATOM_TOL)) {
            Some(slot) => slot.1 += wj,
            None => merged.push((eta, wj)),
        }
    }
    let (a, w): (Vec<ParamVec>, Vec<f64>) = merged.into_iter().unzip();
    MixingMeasure::new(a, w)
}

fn em_gaussian(x: &[f64], b: &ParamBox, s: Start, cfg: &FitConfig) -> Result<Run> {
    let k = s.weights.len();
    let n = x.len() as f64;
    let mut w = s.weights;
    let mut th: Vec<f64> = s.atoms.iter().map(|a| a[0]).collect();
    let mut v: Vec<f64> = s.atoms.iter().map(|a| a[1]).collect();
    let mut prev = f64::NEG_INFINITY;
    let mut converged = false;
    let mut resp = vec![0.0; x.len() * k];
    for _ in 0..cfg.max_iter {
        let mut ll = 0.0;
        for (i, &y) in x.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            let mut tot = 0.0;
            for j in 0..k {
                let z = (y - th[j]) / v[j].sqrt();
                row[j] = w[j] * (-0.5 * z * z).exp() / v[j].sqrt();
                tot += row[j];
            }
            let tot = tot.max(f64::MIN_POSITIVE);
            ll += (tot * crate::special::INV_SQRT_2PI).ln();
            row.iter_mut().for_each(|r| *r /= tot);
        }
        let mean_ll = ll / n;
        if (mean_ll - prev).abs() <= cfg.tol * (1.0 + mean_ll.abs()) {
            converged = true;
            break;
        }
        prev = mean_ll;
        for j in 0..k {
            let nj: f64 = (0..x.len()).map(|i| resp[i * k + j]).sum();
            w[j] = nj / n;
            if nj > 0.0 {
                let m = (0..x.len()).map(|i| resp[i * k + j] * x[i]).sum::<f64>() / nj;
                th[j] = m.clamp(b.lo[0], b.hi[0]);
                let var = (0..x.len()).map(|i| resp[i * k + j] * (x[i] - th[j]).powi(2)).sum::<f64>() / nj;
                v[j] = var.clamp(b.lo[1], b.hi[1]);
            }
        }
        floor_weights(&mut w, b.mass_floor);
    }
    let atoms: Vec<Vec<f64>> = th.iter().zip(&v).map(|(&t, &s)| vec![t, s]).collect();
    let g = measure_from(Family::Gaussian, &atoms, &w)?;
    let ll = loglik(&g, x);
    Ok(Run { g, ll, converged })
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-9, 1.0 - 1e-9);
    (p / (1.0 - p)).ln()
}

/// Box and simplex reparametrization: η = lo + (hi − lo)σ(u), w = c0 + (1 − k c0) softmax(z).
struct Transform<'a> {
    b: &'a ParamBox,
    k: usize,
    d: usize,
}

impl Transform<'_> {
    fn decode(&self, z: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let (k, d, b) = (self.k, self.d, self.b);
        let zmax = z[..k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z[..k].iter().map(|v| (v - zmax).exp()).collect();
        let se: f64 = e.iter().sum();
        let soft: Vec<f64> = e.iter().map(|v| v / se).collect();
        let w = soft.iter().map(|s| b.mass_floor + (1.0 - k as f64 * b.mass_floor) * s).collect();
        let atoms = (0..k)
            .map(|j| (0..d).map(|c| b.lo[c] + (b.hi[c] - b.lo[c]) * sigmoid(z[k + j * d + c])).collect())
            .collect();
        (w, atoms, soft)
    }

    fn encode(&self, s: &Start) -> Vec<f64> {
        let (k, d, b) = (self.k, self.d, self.b);
        let mut z = vec![0.0; k * (d + 1)];
        let free = 1.0 - k as f64 * b.mass_floor;
        for j in 0..k {
            z[j] = ((s.weights[j] - b.mass_floor).max(1e-6) / free).ln();
            for c in 0..d {
                let span = b.hi[c] - b.lo[c];
                z[k + j * d + c] = if span > 0.0 { logit((s.atoms[j][c] - b.lo[c]) / span) } else { 0.0 };
            }
        }
        z
    }

    /// Negative mean log-likelihood and its gradient.
    fn objective(&self, x: &[f64], z: &[f64]) -> (f64, Vec<f64>) {
        let (k, d, b) = (self.k, self.d, self.b);
        let (w, atoms, soft) = self.decode(z);
        let Ok(etas) = atoms.iter().map(|c| ParamVec::new(b.family, c)).collect::<Result<Vec<_>>>() else {
            return (f64::INFINITY, vec![0.0; z.len()]);
        };
        let mut gw = vec![0.0; k];
        let mut geta = vec![0.0; k * d];
        let mut terms = Vec::with_capacity(x.len());
        let mut f = vec![0.0; k];
        let mut gl = vec![[0.0; 3]; k];
        for &y in x {
            let mut p = 0.0;
            for j in 0..k {
                let (fj, g) = kernels::log_density_grad(&etas[j], y);
                f[j] = fj;
                gl[j] = g;
                p += w[j] * fj;
            }
            let p = p.max(f64::MIN_POSITIVE);
            terms.push(p.ln());
            for j in 0..k {
                let r = f[j] / p;
                gw[j] += r;
                for c in 0..d {
                    geta[j * d + c] += w[j] * r * gl[j][c];
                }
            }
        }
        let n = x.len() as f64;
        let val = -pairwise_sum(&terms) / n;
        let mut grad = vec![0.0; z.len()];
        let free = 1.0 - k as f64 * b.mass_floor;
        let dot: f64 = (0..k).map(|j| gw[j] * soft[j]).sum();
        for l in 0..k {
            grad[l] = -free * soft[l] * (gw[l] - dot) / n;
        }
        for j in 0..k {
            for c in 0..d {
                let s = sigmoid(z[k + j * d + c]);
                grad[k + j * d + c] = -geta[j * d + c] * (b.hi[c] - b.lo[c]) * s * (1.0 - s) / n;
            }
        }
        (val, grad)
    }
}

/// BFGS with Armijo backtracking; stops when the objective stalls.
fn bfgs(f: impl Fn(&[f64]) -> (f64, Vec<f64>), mut x: Vec<f64>, max_iter: usize, tol: f64) -> (Vec<f64>, f64, bool) {
    let n = x.len();
    let (mut fx, mut g) = f(&x);
    let mut h = vec![vec![0.0; n]; n];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..max_iter {
        let mut dir: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i][j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            for (i, row) in h.iter_mut().enumerate() {
                row.iter_mut().for_each(|v| *v = 0.0);
                row[i] = 1.0;
            }
            dir = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        if slope.abs() < 1e-300 {
            return (x, fx, true);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fnew, gnew) = f(&xn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            return (x, fx, true);
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let stalled = (fx - fnew).abs() <= tol * (1.0 + fnew.abs());
        x = xn;
        fx = fnew;
        g = gnew;
        if stalled {
            return (x, fx, true);
        }
        if sy > 1e-12 {
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += (sy + yhy) * s[i] * s[j] / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
    }
    (x, fx, false)
}

fn ascend(x: &[f64], b: &ParamBox, s: Start, cfg: &FitConfig) -> Result<Run> {
    let k = s.weights.len();
    let tr = Transform { b, k, d: b.family.dim() };
    let z0 = tr.encode(&s);
    let (z, _, converged) = bfgs(|z| tr.objective(x, z), z0, cfg.max_iter, cfg.tol);
    let (w, atoms, _) = tr.decode(&z);
    let g = measure_from(b.family, &atoms, &w)?;
    let ll = loglik(&g, x);
    Ok(Run { g, ll, converged })
}

/// Direct ascent from an EM solution; EM crawls along flat directions
/// where overfitted atoms should merge.
fn polish(x: &[f64], b: &ParamBox, r: Run, cfg: &FitConfig) -> Result<Run> {
    let k = r.g.k();
    if k < 2 {
        return Ok(r);
    }
    let start = Start { weights: r.g.weights().to_vec(), atoms: r.g.atoms().iter().map(|a| a.coords().to_vec()).collect() };
    let p = ascend(x, b, start, cfg)?;
    Ok(if p.ll > r.ll { Run { converged: r.converged || p.converged, ..p } } else { r })
}

pub fn fit_mle(data: &[f64], family: Family, k: usize, b: &ParamBox, cfg: &FitConfig) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::BadParams("no observations".into()));
    }
    if k == 0 {
        return Err(Error::BadParams("k must be at least 1".into()));
    }
    if b.family != family {
        return Err(Error::MixedFamilies);
    }
    b.check_components(k)?;
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadParams("observations must be finite".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = chunk_start(family, b, &quantile_chunks(&sorted, k), data.len());
    let km = chunk_start(family, b, &kmeans_chunks(&sorted, k), data.len());
    let mut starts = vec![q, km];
    for i in 2..cfg.starts.max(1) {
        let mut rng = rng_for(cfg.seed, i as u64);
        let base = &starts[i % 2];
        let p = perturb(base, b, &mut rng);
        starts.push(p);
    }
    starts.truncate(cfg.starts.max(1));
    for g in &cfg.extra_starts {
        if g.family() != family || g.k() != k {
            return Err(Error::BadParams("extra start must match the family and k".into()));
        }
        let mut atoms: Vec<Vec<f64>> = g.atoms().iter().map(|a| a.coords().to_vec()).collect();
        atoms.iter_mut().for_each(|c| clamp_into(b, c));
        let mut w = g.weights().to_vec();
        floor_weights(&mut w, b.mass_floor);
        starts.push(Start { weights: w, atoms });
    }
    let runs: Vec<Result<Run>> = starts
        .into_par_iter()
        .map(|s| match family {
            Family::Gaussian => em_gaussian(data, b, s, cfg).and_then(|r| polish(data, b, r, cfg)),
            _ => ascend(data, b, s, cfg),
        })
        .collect();
    let runs: Vec<Run> = runs.into_iter().collect::<Result<_>>()?;
    if !runs.iter().any(|r| r.converged) {
        return Err(Error::NoConvergedStart);
    }
    let start_logliks: Vec<f64> = runs.iter().map(|r| r.ll).collect();
    let starts_used = runs.len();
    let best = runs.into_iter().reduce(|a, b| if b.ll > a.ll { b } else { a }).unwrap();
    Ok(FitResult { measure: best.g, loglik: best.ll, starts_used, converged: best.converged, start_logliks })
}

fn check_mass(grid: &QuadGrid, f: &dyn Fn(f64) -> f64) -> Result<()> {
    let mass = grid.integrate(f);
    if (1.0 - mass).abs() > 1e-10 {
        return Err(Error::GridTooCoarse((1.0 - mass).abs()));
    }
    Ok(())
}

/// h with h² = ½∫(√p − √q)².
pub fn hellinger(p: &dyn Fn(f64) -> f64, q: &dyn Fn(f64) -> f64, grid: &QuadGrid) -> Result<f64> {
    check_mass(grid, p)?;
    check_mass(grid, q)?;
    let h2 = 0.5 * grid.integrate(|x| (p(x).sqrt() - q(x).sqrt()).powi(2));
    Ok(h2.clamp(0.0, 1.0).sqrt())
}

/// V = ½∫|p − q|.
pub fn tv(p: &dyn Fn(f64) -> f64, q: &dyn Fn(f64) -> f64, grid: &QuadGrid) -> Result<f64> {
    check_mass(grid, p)?;
    check_mass(grid, q)?;
    Ok((0.5 * grid.integrate(|x| (p(x) - q(x)).abs())).clamp(0.0, 1.0))
}

pub fn hellinger_measures(g: &MixingMeasure, g2: &MixingMeasure) -> Result<f64> {
    let grid = QuadGrid::envelope(&[g, g2])?;
    hellinger(&|x| kernels::mixture_density(g, x), &|x| kernels::mixture_density(g2, x), &grid)
}

pub fn tv_measures(g: &MixingMeasure, g2: &MixingMeasure) -> Result<f64> {
    let grid = QuadGrid::envelope(&[g, g2])?;
    tv(&|x| kernels::mixture_density(g, x), &|x| kernels::mixture_density(g2, x), &grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(atoms: &[(f64, f64)], w: &[f64]) -> MixingMeasure {
        let a: Vec<Vec<f64>> = atoms.iter().map(|&(t, v)| vec![t, v]).collect();
        MixingMeasure::from_coords(Family::Gaussian, &a, w).unwrap()
    }

    #[test]
    fn sampling_is_reproducible() {
        let g = gauss(&[(0.0, 1.0)], &[1.0]);
        assert_eq!(sample(&g, 50, 7).unwrap(), sample(&g, 50, 7).unwrap());
        assert_ne!(sample(&g, 50, 7).unwrap().x, sample(&g, 50, 8).unwrap().x);
    }

    #[test]
    fn weight_floor_projection() {
        let mut w = vec![0.97, 0.02, 0.01];
        floor_weights(&mut w, 0.05);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x >= 0.05 - 1e-12));
        assert!((w[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn single_gaussian_closed_form() {
        let g = gauss(&[(1.0, 2.0)], &[1.0]);
        let s = sample(&g, 2000, 3).unwrap();
        let fit = fit_mle(&s.x, Family::Gaussian, 1, &ParamBox::default_for(Family::Gaussian), &FitConfig::default()).unwrap();
        let (mean, var, _) = moments(&s.x);
        assert!((fit.measure.atom(0).get(0) - mean).abs() < 1e-6);
        assert!((fit.measure.atom(0).get(1) - var).abs() < 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = ParamBox::default_for(Family::SkewNormal);
        let tr = Transform { b: &b, k: 2, d: 3 };
        let x = [-1.0, 0.2, 0.5, 1.7, 3.0];
        let z = [0.3, -0.2, 0.1, -0.4, 0.2, -0.1, 0.3, 0.5];
        let (_, g) = tr.objective(&x, &z);
        for i in 0..z.len() {
            let mut a = z;
            let mut c = z;
            a[i] += 1e-6;
            c[i] -= 1e-6;
            let fd = (tr.objective(&x, &a).0 - tr.objective(&x, &c).0) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-6, "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn normal_hellinger_closed_form() {
        let a = gauss(&[(0.0, 1.0)], &[1.0]);
        let b = gauss(&[(1.0, 1.0)], &[1.0]);
        let h = hellinger_measures(&a, &b).unwrap();
        assert!((h * h - (1.0 - (-1.0f64 / 8.0).exp())).abs() < 1e-10);
        assert!((h - 0.3430).abs() < 5e-4);
        assert_eq!(hellinger_measures(&a, &a).unwrap(), 0.0);
        assert_eq!(tv_measures(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let a = gauss(&[(0.0, 1.0)], &[1.0]);
        let f = |x| kernels::mixture_density(&a, x);
        assert!(matches!(tv(&f, &f, &QuadGrid::new(-2.0, 2.0)), Err(Error::GridTooCoarse(_))));
    }
}
