//! Scalar special functions shared by the kernels.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{PI, SQRT_2};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn ln_norm_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// log Φ(z), accurate far into the lower tail where Φ underflows.
pub fn ln_norm_cdf(z: f64) -> f64 {
    if z > -30.0 {
        let p = norm_cdf(z);
        if p > 1e-300 {
            return p.ln();
        }
    }
    // Mills-ratio asymptotic series for z → −∞.
    let z2 = z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..8 {
        term *= -((2 * k - 1) as f64) / z2;
        sum += term;
    }
    ln_norm_pdf(z) - (-z).ln() + sum.ln()
}

/// Probabilists' Hermite polynomials He_0..He_n at z.
pub fn hermite_he(n: usize, z: f64) -> Vec<f64> {
    let mut h = vec![1.0; n + 1];
    if n >= 1 {
        h[1] = z;
    }
    for k in 2..=n {
        h[k] = z * h[k - 1] - (k - 1) as f64 * h[k - 2];
    }
    h
}

pub fn lgamma(x: f64) -> f64 {
    ln_gamma(x)
}

const BERNOULLI_2K: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Polygamma ψ^(n)(x) for x > 0; n = 0 is the digamma function.
pub fn polygamma(n: usize, x: f64) -> f64 {
    assert!(x > 0.0, "polygamma needs a positive argument");
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let nf = factorial(n);
    let mut acc = 0.0;
    let mut y = x;
    while y < 12.0 {
        // ψ^(n)(y) = ψ^(n)(y+1) + (−1)^{n+1} n! / y^{n+1}
        acc += sign * nf / y.powi(n as i32 + 1);
        y += 1.0;
    }
    let asym = if n == 0 {
        let mut s = y.ln() - 0.5 / y;
        let y2 = y * y;
        let mut p = y2;
        for (k, b) in BERNOULLI_2K.iter().enumerate() {
            s -= b / ((2 * k + 2) as f64 * p);
            p *= y2;
        }
        s
    } else {
        let mut s = factorial(n - 1) / y.powi(n as i32) + nf / (2.0 * y.powi(n as i32 + 1));
        for (k, b) in BERNOULLI_2K.iter().enumerate() {
            let two_k = 2 * k + 2;
            s += b * factorial(two_k + n - 1) / (factorial(two_k) * y.powi((two_k + n) as i32));
        }
        sign * s
    };
    acc + asym
}

pub fn sqrt_2_over_pi() -> f64 {
    (2.0 / PI).sqrt()
}
