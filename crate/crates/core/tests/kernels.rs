use mixsing::kernels::{density, partial, pde_residuals};
use mixsing::mixing::ParamVec;
use proptest::prelude::*;

// central difference of the closed-form density along coordinate k
fn fd(eta: &ParamVec, x: f64, k: usize, h: f64) -> f64 {
    let mut up = eta.coords().to_vec();
    let mut dn = up.clone();
    up[k] += h;
    dn[k] -= h;
    let f = |c: &[f64]| density(&ParamVec::new(eta.family(), c).unwrap(), x);
    (f(&up) - f(&dn)) / (2.0 * h)
}

fn fd2(eta: &ParamVec, x: f64, k: usize, l: usize, h: f64) -> f64 {
    let shifted = |dk: f64, dl: f64| {
        let mut c = eta.coords().to_vec();
        c[k] += dk;
        c[l] += dl;
        density(&ParamVec::new(eta.family(), &c).unwrap(), x)
    };
    (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn skew_first_derivatives_match_differences(theta in -2.0f64..2.0, v in 0.3f64..4.0, m in -3.0f64..3.0, z in -4.0f64..4.0) {
        let eta = ParamVec::skew(theta, v, m).unwrap();
        let x = theta + z * v.sqrt();
        for k in 0..3 {
            let mut alpha = [0usize; 3];
            alpha[k] = 1;
            let exact = partial(&eta, x, &alpha).unwrap();
            let approx = fd(&eta, x, k, 1e-5);
            prop_assert!((exact - approx).abs() <= 1e-6 * (1.0 + exact.abs()), "k={k}: {exact} vs {approx}");
        }
    }

    #[test]
    fn skew_second_derivatives_match_differences(theta in -2.0f64..2.0, v in 0.5f64..3.0, m in -2.0f64..2.0, z in -3.0f64..3.0) {
        let eta = ParamVec::skew(theta, v, m).unwrap();
        let x = theta + z * v.sqrt();
        for (k, l) in [(0, 1), (1, 2), (0, 2)] {
            let mut alpha = [0usize; 3];
            alpha[k] += 1;
            alpha[l] += 1;
            let exact = partial(&eta, x, &alpha).unwrap();
            let approx = fd2(&eta, x, k, l, 1e-4);
            prop_assert!((exact - approx).abs() <= 1e-5 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn skew_identities_vanish(theta in -3.0f64..3.0, v in 0.2f64..5.0, m in -4.0f64..4.0, z in -6.0f64..6.0) {
        let eta = ParamVec::skew(theta, v, m).unwrap();
        for r in pde_residuals(&eta, theta + z * v.sqrt()) {
            prop_assert!(r.abs() < 1e-8);
        }
    }

    #[test]
    fn gaussian_heat_identity(theta in -3.0f64..3.0, v in 0.2f64..5.0, z in -6.0f64..6.0) {
        let eta = ParamVec::gaussian(theta, v).unwrap();
        let x = theta + z * v.sqrt();
        // closed forms: f_θθ = f (z²−1)/v and f_v = f (z²−1)/(2v)
        let f = density(&eta, x);
        prop_assert!((partial(&eta, x, &[2, 0]).unwrap() - f * (z * z - 1.0) / v).abs() < 1e-10);
        prop_assert!((partial(&eta, x, &[0, 1]).unwrap() - f * (z * z - 1.0) / (2.0 * v)).abs() < 1e-10);
        prop_assert!(pde_residuals(&eta, x)[0].abs() < 1e-8);
    }

    #[test]
    fn gamma_rate_identity(a in 1.0f64..10.0, b in 0.2f64..5.0, x in 0.01f64..20.0) {
        let eta = ParamVec::gamma(a, b).unwrap();
        let f = density(&eta, x);
        prop_assert!((partial(&eta, x, &[0, 1]).unwrap() - (a / b - x) * f).abs() < 1e-10);
        prop_assert!(pde_residuals(&eta, x)[0].abs() < 1e-8);
    }
}

#[test]
fn gamma_is_zero_off_support() {
    let eta = ParamVec::gamma(2.0, 1.0).unwrap();
    assert_eq!(density(&eta, 0.0), 0.0);
    assert_eq!(density(&eta, -1.0), 0.0);
    assert_eq!(partial(&eta, -1.0, &[1, 1]).unwrap(), 0.0);
}

#[test]
fn skew_density_positive_in_far_tail() {
    // Φ(mz) ≈ 1e-309 here, below what a direct product would keep
    let eta = ParamVec::skew(0.0, 1.0, 75.2).unwrap();
    let f = density(&eta, -0.5);
    assert!(f > 0.0 && f.is_finite());
}
