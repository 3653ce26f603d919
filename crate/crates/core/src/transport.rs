//! Exact optimal transport between small discrete mixing measures.
//!
//! Three cost families are supported: the ℓ_r cost behind W_r, the
//! anisotropic d_κ behind W̃_κ, and the per-atom rows of a block matrix K
//! behind Ŵ_K. Values are optimized on the power scale and rooted once.

use crate::error::{Error, Result};
use crate::mixing::{MixingMeasure, ParamVec};
use serde::{Deserialize, Serialize};

pub const MAX_ATOMS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportSpec {
    /// W_r with ℓ_r ground cost, r ≥ 1.
    Order(f64),
    /// W̃_κ with cost d_κ.
    Index(Vec<u32>),
    /// Ŵ_K against a base measure with one row of K per base atom.
    Block(Vec<Vec<u32>>),
}

/// Plan indexed `q[i][j]` by atom i of the first measure and atom j of the
/// second; rows sum to the first measure's weights, columns to the second's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub q: Vec<Vec<f64>>,
    pub value: f64,
}

pub fn power_cost_kappa(kappa: &[u32], diff: &[f64]) -> f64 {
    kappa.iter().zip(diff).map(|(&k, d)| d.abs().powi(k as i32)).sum()
}

fn inf_norm(kappa: &[u32]) -> u32 {
    kappa.iter().copied().max().unwrap_or(1)
}

impl TransportSpec {
    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self {
            TransportSpec::Order(r) => {
                if !(*r >= 1.0) {
                    return Err(Error::InvalidParam(format!("order {r} < 1")));
                }
            }
            TransportSpec::Index(k) => {
                if k.len() != d {
                    return Err(Error::IndexMismatch { expected: d, got: k.len() });
                }
                if k.contains(&0) {
                    return Err(Error::InvalidParam("index entries must be ≥ 1".into()));
                }
            }
            TransportSpec::Block(rows) => {
                for row in rows {
                    if row.len() != d {
                        return Err(Error::IndexMismatch { expected: d, got: row.len() });
                    }
                    if row.contains(&0) {
                        return Err(Error::InvalidParam("block entries must be ≥ 1".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Exponent applied to the optimal power-scale value: 1/r or 1/‖κ‖∞ or 1/‖K‖∞.
    pub fn root(&self) -> f64 {
        match self {
            TransportSpec::Order(r) => *r,
            TransportSpec::Index(k) => inf_norm(k) as f64,
            TransportSpec::Block(rows) => rows.iter().map(|r| inf_norm(r)).max().unwrap_or(1) as f64,
        }
    }

    /// Ground cost on the power scale (‖Δ‖_r^r or d_κ^{‖κ‖∞}); block specs
    /// need a row and go through `power_cost_kappa`.
    pub fn power_cost(&self, diff: &[f64]) -> f64 {
        match self {
            TransportSpec::Order(r) => diff.iter().map(|d| d.abs().powf(*r)).sum(),
            TransportSpec::Index(k) => power_cost_kappa(k, diff),
            TransportSpec::Block(_) => panic!("block costs depend on the target atom"),
        }
    }

    fn pair_cost(&self, eta: &ParamVec, target: &ParamVec, j: usize) -> f64 {
        let diff = eta.diff(target);
        match self {
            TransportSpec::Block(rows) => power_cost_kappa(&rows[j], &diff),
            _ => self.power_cost(&diff),
        }
    }
}

/// Metric-scale ground cost: ‖η − η'‖_r or d_κ(η, η').
pub fn cost(spec: &TransportSpec, eta: &ParamVec, eta2: &ParamVec) -> Result<f64> {
    let d = eta.family().dim();
    if eta2.family() != eta.family() {
        return Err(Error::MixedFamilies);
    }
    spec.check_dim(d)?;
    match spec {
        TransportSpec::Block(_) => Err(Error::BadParams("block specs have no single ground cost".into())),
        _ => Ok(spec.power_cost(&eta.diff(eta2)).powf(1.0 / spec.root())),
    }
}

pub fn cost_matrix(spec: &TransportSpec, g: &MixingMeasure, g2: &MixingMeasure) -> Result<Vec<Vec<f64>>> {
    if g.family() != g2.family() {
        return Err(Error::MixedFamilies);
    }
    spec.check_dim(g.family().dim())?;
    if let TransportSpec::Block(rows) = spec {
        if rows.len() != g2.k() {
            return Err(Error::IndexMismatch { expected: g2.k(), got: rows.len() });
        }
    }
    Ok(g.atoms()
        .iter()
        .map(|a| g2.atoms().iter().enumerate().map(|(j, b)| spec.pair_cost(a, b, j)).collect())
        .collect())
}

/// Optimal value (rooted) and an optimal plan.
pub fn distance(spec: &TransportSpec, g: &MixingMeasure, g2: &MixingMeasure) -> Result<(f64, TransportPlan)> {
    for k in [g.k(), g2.k()] {
        if k > MAX_ATOMS {
            return Err(Error::SupportTooLarge(k, MAX_ATOMS));
        }
    }
    let c = cost_matrix(spec, g, g2)?;
    let (q, power_value) = solve_transport(&c, g.weights(), g2.weights());
    let value = power_value.max(0.0).powf(1.0 / spec.root());
    Ok((value, TransportPlan { q, value: power_value }))
}

/// Coupling-weighted absolute error per coordinate.
pub fn per_coordinate_error(plan: &TransportPlan, g: &MixingMeasure, g0: &MixingMeasure) -> Vec<f64> {
    let d = g.family().dim();
    let mut out = vec![0.0; d];
    for (i, row) in plan.q.iter().enumerate() {
        for (j, &q) in row.iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            let diff = g.atom(i).diff(g0.atom(j));
            for c in 0..d {
                out[c] += q * diff[c].abs();
            }
        }
    }
    out
}

const EPS: f64 = 1e-13;

/// Minimizes Σ c_ij q_ij over couplings of `a` (rows) and `b` (columns).
///
/// Dense two-phase simplex with Bland's rule; small problems only.
pub fn solve_transport(c: &[Vec<f64>], a: &[f64], b: &[f64]) -> (Vec<Vec<f64>>, f64) {
    let k = a.len();
    let l = b.len();
    let nvar = k * l;
    // Row constraints for every i and column constraints for j < l−1
    // (the last column constraint is implied).
    let m = k + l - 1;
    let width = nvar + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    let mut rhs_scale = vec![0.0; m];
    for i in 0..k {
        for j in 0..l {
            t[i][i * l + j] = 1.0;
        }
        rhs_scale[i] = a[i];
    }
    for j in 0..l - 1 {
        for i in 0..k {
            t[k + j][i * l + j] = 1.0;
        }
        rhs_scale[k + j] = b[j];
    }
    for r in 0..m {
        t[r][nvar + r] = 1.0;
        t[r][width - 1] = rhs_scale[r];
    }
    let mut basis: Vec<usize> = (nvar..nvar + m).collect();

    // Phase 1: minimize the sum of artificials.
    let mut obj = vec![0.0; width];
    for r in 0..m {
        for col in 0..width {
            if col < nvar || col == width - 1 {
                obj[col] -= t[r][col];
            }
        }
    }
    t[m] = obj;
    run_simplex(&mut t, &mut basis, width - 1);

    // Drive any artificial still basic (at zero) out of the basis.
    for r in 0..m {
        if basis[r] >= nvar {
            if let Some(col) = (0..nvar).find(|&col| t[r][col].abs() > 1e-9) {
                pivot(&mut t, &mut basis, r, col);
            }
        }
    }

    // Phase 2 objective on the original variables.
    let mut obj = vec![0.0; width];
    for i in 0..k {
        for j in 0..l {
            obj[i * l + j] = c[i][j];
        }
    }
    for r in 0..m {
        let bv = basis[r];
        if bv < nvar && obj[bv] != 0.0 {
            let f = obj[bv];
            for col in 0..width {
                obj[col] -= f * t[r][col];
            }
        }
    }
    t[m] = obj;
    run_simplex(&mut t, &mut basis, nvar);

    let mut q = vec![vec![0.0; l]; k];
    for r in 0..m {
        let bv = basis[r];
        if bv < nvar {
            q[bv / l][bv % l] = t[r][width - 1].max(0.0);
        }
    }
    let value = (0..k).flat_map(|i| (0..l).map(move |j| (i, j))).map(|(i, j)| c[i][j] * q[i][j]).sum();
    (q, value)
}

fn run_simplex(t: &mut [Vec<f64>], basis: &mut [usize], ncols: usize) {
    let m = basis.len();
    let width = t[0].len();
    loop {
        // Bland: smallest index with a negative reduced cost.
        let Some(col) = (0..ncols).find(|&c| t[m][c] < -EPS) else { return };
        let mut best: Option<(usize, f64)> = None;
        for r in 0..m {
            if t[r][col] > EPS {
                let ratio = t[r][width - 1] / t[r][col];
                match best {
                    None => best = Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio - 1e-15 || (ratio <= bratio + 1e-15 && basis[r] < basis[br]) {
                            best = Some((r, ratio));
                        }
                    }
                }
            }
        }
        match best {
            Some((r, _)) => pivot(t, basis, r, col),
            None => return,
        }
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, col: usize) {
    let width = t[0].len();
    let p = t[r][col];
    for x in t[r].iter_mut() {
        *x /= p;
    }
    let prow = t[r].clone();
    for (rr, row) in t.iter_mut().enumerate() {
        if rr != r {
            let f = row[col];
            if f != 0.0 {
                for cc in 0..width {
                    row[cc] -= f * prow[cc];
                }
            }
        }
    }
    basis[r] = col;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::{make_measure, Family};

    fn m(family: Family, atoms: &[&[f64]], w: &[f64]) -> MixingMeasure {
        MixingMeasure::from_coords(family, &atoms.iter().map(|a| a.to_vec()).collect::<Vec<_>>(), w).unwrap()
    }

    #[test]
    fn cost_examples() {
        let a = ParamVec::skew(0.1, 1.01, 0.1).unwrap();
        let b = ParamVec::skew(0.0, 1.0, 0.0).unwrap();
        let d = cost(&TransportSpec::Index(vec![2, 1, 1]), &a, &b).unwrap();
        assert!((d - 0.12f64.sqrt()).abs() < 1e-12);
        let d1 = cost(&TransportSpec::Order(1.0), &a, &b).unwrap();
        assert!((d1 - 0.21).abs() < 1e-12);
    }

    #[test]
    fn single_atom_and_identity() {
        let g = m(Family::SkewNormal, &[&[0., 1., 0.]], &[1.0]);
        let h = m(Family::SkewNormal, &[&[1., 1., 0.]], &[1.0]);
        let (w, _) = distance(&TransportSpec::Order(1.0), &g, &h).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
        let g2 = m(Family::Gaussian, &[&[0., 1.], &[2., 3.]], &[0.4, 0.6]);
        let (w, plan) = distance(&TransportSpec::Order(2.0), &g2, &g2).unwrap();
        assert!(w.abs() < 1e-12);
        assert!((plan.q[0][0] - 0.4).abs() < 1e-12 && (plan.q[1][1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn per_coordinate_single_pair() {
        let g = m(Family::SkewNormal, &[&[0., 1., 0.3]], &[1.0]);
        let g0 = m(Family::SkewNormal, &[&[0., 1., 0.]], &[1.0]);
        let (_, plan) = distance(&TransportSpec::Order(1.0), &g, &g0).unwrap();
        let e = per_coordinate_error(&plan, &g, &g0);
        assert!(e[0] == 0.0 && e[1] == 0.0 && (e[2] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn marginals_hold_on_degenerate_problem() {
        // Equal weights everywhere create degenerate vertices.
        let g = m(Family::Gaussian, &[&[0., 1.], &[1., 1.], &[2., 1.], &[3., 1.]], &[0.25; 4]);
        let h = m(Family::Gaussian, &[&[0.5, 1.], &[1.5, 1.], &[2.5, 1.], &[3.5, 1.]], &[0.25; 4]);
        let (w, plan) = distance(&TransportSpec::Order(1.0), &g, &h).unwrap();
        assert!((w - 0.5).abs() < 1e-12);
        for i in 0..4 {
            assert!((plan.q[i].iter().sum::<f64>() - 0.25).abs() < 1e-12);
            assert!(((0..4).map(|r| plan.q[r][i]).sum::<f64>() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn index_equal_entries_is_wasserstein() {
        let g = m(Family::SkewNormal, &[&[0., 1., 0.5], &[1., 2., -1.]], &[0.3, 0.7]);
        let h = m(Family::SkewNormal, &[&[0.2, 1.5, 0.1], &[0.7, 2.5, -0.5], &[2., 1., 1.]], &[0.2, 0.5, 0.3]);
        for r in 1..4u32 {
            let (a, _) = distance(&TransportSpec::Order(r as f64), &g, &h).unwrap();
            let (b, _) = distance(&TransportSpec::Index(vec![r; 3]), &g, &h).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn block_requires_row_per_target_atom() {
        let g = make_measure(vec![ParamVec::gaussian(0., 1.).unwrap()], vec![1.0]).unwrap();
        let r = distance(&TransportSpec::Block(vec![vec![1, 1], vec![2, 2]]), &g, &g);
        assert!(matches!(r, Err(Error::IndexMismatch { .. })));
    }
}
