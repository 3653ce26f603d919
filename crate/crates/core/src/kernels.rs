//! Kernel densities, their partial derivatives, and the differential
//! identities they satisfy.
//!
//! Coordinates: skew-normal (θ, v, m), Gaussian (θ, v), Gamma (a, b), with
//! v = σ² and Gamma in shape–rate form.

use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_DEGREE};
use crate::mixing::{Family, MixingMeasure, ParamVec};
use crate::special::{hermite_he, lgamma, ln_norm_cdf, ln_norm_pdf, norm_cdf, norm_pdf, polygamma, INV_SQRT_2PI};

pub const MAX_ORDER: usize = MAX_DEGREE;

pub fn density(eta: &ParamVec, x: f64) -> f64 {
    let c = eta.coords();
    match eta.family() {
        Family::SkewNormal => {
            let s = c[1].sqrt();
            let z = (x - c[0]) / s;
            (std::f64::consts::LN_2 - s.ln() + ln_norm_pdf(z) + ln_norm_cdf(c[2] * z)).exp()
        }
        Family::Gaussian => {
            let s = c[1].sqrt();
            norm_pdf((x - c[0]) / s) / s
        }
        Family::Gamma => {
            if x <= 0.0 {
                return 0.0;
            }
            let (a, b) = (c[0], c[1]);
            (a * b.ln() + (a - 1.0) * x.ln() - b * x - lgamma(a)).exp()
        }
    }
}

pub fn mixture_density(g: &MixingMeasure, x: f64) -> f64 {
    g.atoms().iter().zip(g.weights()).map(|(a, w)| w * density(a, x)).sum()
}

/// Taylor jet of η ↦ f(x|η) around `eta`, truncated at `degree`.
pub fn density_jet(eta: &ParamVec, x: f64, degree: usize) -> Jet {
    assert!(degree <= MAX_DEGREE);
    let c = eta.coords();
    match eta.family() {
        Family::SkewNormal | Family::Gaussian => {
            let theta = Jet::variable(degree, 0, c[0]);
            let v = Jet::variable(degree, 1, c[1]);
            let s = v.powf(-0.5);
            let z = theta.scale(-1.0).add_const(x).mul(&s);
            let phi = z.mul(&z).scale(-0.5).exp().scale(INV_SQRT_2PI);
            let base = s.mul(&phi);
            if eta.family() == Family::Gaussian {
                return base;
            }
            let w = Jet::variable(degree, 2, c[2]).mul(&z);
            let w0 = w.value();
            let he = hermite_he(degree, w0);
            let pdf = norm_pdf(w0);
            let mut d = vec![norm_cdf(w0)];
            for k in 1..=degree {
                let sign = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
                d.push(sign * he[k - 1] * pdf);
            }
            base.mul(&w.compose(&d)).scale(2.0)
        }
        Family::Gamma => {
            if x <= 0.0 {
                return Jet::constant(degree, 0.0);
            }
            let a = Jet::variable(degree, 0, c[0]);
            let b = Jet::variable(degree, 1, c[1]);
            let mut lg = vec![lgamma(c[0])];
            for k in 0..degree {
                lg.push(polygamma(k, c[0]));
            }
            let logf = a
                .mul(&b.ln())
                .add(&a.add_const(-1.0).scale(x.ln()))
                .sub(&b.scale(x))
                .sub(&a.compose(&lg));
            logf.exp()
        }
    }
}

fn check_alpha(eta: &ParamVec, alpha: &[usize]) -> Result<[usize; 3]> {
    let d = eta.family().dim();
    if alpha.len() != d {
        return Err(Error::IndexMismatch { expected: d, got: alpha.len() });
    }
    let order: usize = alpha.iter().sum();
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh(order, MAX_ORDER));
    }
    let mut a = [0; 3];
    a[..d].copy_from_slice(alpha);
    Ok(a)
}

/// ∂^{|α|} f / ∂η^α at x.
pub fn partial(eta: &ParamVec, x: f64, alpha: &[usize]) -> Result<f64> {
    let a = check_alpha(eta, alpha)?;
    let order = a.iter().sum();
    if order == 0 {
        return Ok(density(eta, x));
    }
    Ok(density_jet(eta, x, order).derivative(a))
}

/// Residuals of the differential identities of each family.
///
/// skew: [f_θθ − 2 f_v + ((m³+m)/v) f_m, 2m f_m + (m²+1) f_mm + 2vm f_vm];
/// gaussian: [f_θθ − 2 f_v]; gamma: [f_b − (a/b) f(a,b) + (a/b) f(a+1,b)].
pub fn pde_residuals(eta: &ParamVec, x: f64) -> Vec<f64> {
    let c = eta.coords();
    match eta.family() {
        Family::SkewNormal => {
            let j = density_jet(eta, x, 2);
            let (v, m) = (c[1], c[2]);
            let d = |a| j.derivative(a);
            vec![
                d([2, 0, 0]) - 2.0 * d([0, 1, 0]) + (m * m * m + m) / v * d([0, 0, 1]),
                2.0 * m * d([0, 0, 1]) + (m * m + 1.0) * d([0, 0, 2]) + 2.0 * v * m * d([0, 1, 1]),
            ]
        }
        Family::Gaussian => {
            let j = density_jet(eta, x, 2);
            vec![j.derivative([2, 0, 0]) - 2.0 * j.derivative([0, 1, 0])]
        }
        Family::Gamma => {
            let j = density_jet(eta, x, 1);
            let (a, b) = (c[0], c[1]);
            let up = ParamVec::gamma(a + 1.0, b).expect("shape stays positive");
            vec![j.derivative([0, 1, 0]) - a / b * j.value() + a / b * density(&up, x)]
        }
    }
}

/// f(x|η) and ∇_η log f(x|η), hand-coded first order for likelihood ascent.
pub fn log_density_grad(eta: &ParamVec, x: f64) -> (f64, [f64; 3]) {
    let c = eta.coords();
    match eta.family() {
        Family::SkewNormal => {
            let (theta, v, m) = (c[0], c[1], c[2]);
            let s = v.sqrt();
            let z = (x - theta) / s;
            let lcdf = ln_norm_cdf(m * z);
            let logf = std::f64::consts::LN_2 - s.ln() + ln_norm_pdf(z) + lcdf;
            let mills = (ln_norm_pdf(m * z) - lcdf).exp();
            (
                logf.exp(),
                [
                    z / s - m / s * mills,
                    (z * z - 1.0 - mills * m * z) / (2.0 * v),
                    mills * z,
                ],
            )
        }
        Family::Gaussian => {
            let (theta, v) = (c[0], c[1]);
            let z = (x - theta) / v.sqrt();
            (density(eta, x), [z / v.sqrt(), (z * z - 1.0) / (2.0 * v), 0.0])
        }
        Family::Gamma => {
            let (a, b) = (c[0], c[1]);
            if x <= 0.0 {
                return (0.0, [0.0; 3]);
            }
            (density(eta, x), [b.ln() + x.ln() - polygamma(0, a), a / b - x, 0.0])
        }
    }
}
