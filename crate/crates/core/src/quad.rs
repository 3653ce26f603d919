//! Composite Gauss–Legendre rules over the effective support of mixtures.

use crate::error::{Error, Result};
use crate::kernels;
use crate::mixing::{Family, MixingMeasure};
use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

pub const NODES_PER_UNIT: usize = 64;

#[derive(Clone, Debug)]
pub struct QuadGrid {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

fn reference_rule() -> &'static [(f64, f64)] {
    static R: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    R.get_or_init(|| {
        let rule = GaussLegendre::new(NonZeroUsize::new(NODES_PER_UNIT).unwrap());
        rule.as_node_weight_pairs().to_vec()
    })
}

impl QuadGrid {
    /// Unit-length panels (the last one shorter) with 64 nodes each.
    pub fn new(lo: f64, hi: f64) -> QuadGrid {
        assert!(hi > lo);
        let panels = (hi - lo).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;
        let rule = reference_rule();
        let mut x = Vec::with_capacity(panels * rule.len());
        let mut w = Vec::with_capacity(panels * rule.len());
        for p in 0..panels {
            let a = lo + p as f64 * h;
            for &(node, weight) in rule {
                x.push(a + 0.5 * h * (node + 1.0));
                w.push(0.5 * h * weight);
            }
        }
        QuadGrid { x, w }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.x.iter().zip(&self.w).map(|(&x, &w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }

    /// Grid over the ±8σ envelope of every atom of every measure given
    /// (a long right tail for Gamma), checked to hold all but 1e-10 of the mass.
    pub fn envelope(measures: &[&MixingMeasure]) -> Result<QuadGrid> {
        let (lo, hi) = envelope_bounds(measures);
        let grid = QuadGrid::new(lo, hi);
        for g in measures {
            let mass = grid.integrate(|x| kernels::mixture_density(g, x));
            if (1.0 - mass).abs() > 1e-10 {
                return Err(Error::GridTooCoarse((1.0 - mass).abs()));
            }
        }
        Ok(grid)
    }
}

pub fn envelope_bounds(measures: &[&MixingMeasure]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for g in measures {
        for a in g.atoms() {
            match g.family() {
                Family::SkewNormal | Family::Gaussian => {
                    let s = a.get(1).sqrt();
                    lo = lo.min(a.get(0) - 8.0 * s);
                    hi = hi.max(a.get(0) + 8.0 * s);
                }
                Family::Gamma => {
                    let (shape, rate) = (a.get(0), a.get(1));
                    lo = 0.0;
                    hi = hi.max((shape + 12.0 * shape.sqrt() + 30.0) / rate);
                }
            }
        }
    }
    (lo, hi)
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
