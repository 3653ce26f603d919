use mixsing::estimate::{fit_mle, hellinger_measures, loglik, sample, tv_measures, FitConfig};
use mixsing::mixing::{Family, MixingMeasure, ParamBox};
use mixsing::transport::{distance, TransportSpec};
use proptest::prelude::*;

fn gauss(atoms: &[[f64; 2]], w: &[f64]) -> MixingMeasure {
    let a: Vec<Vec<f64>> = atoms.iter().map(|x| x.to_vec()).collect();
    MixingMeasure::from_coords(Family::Gaussian, &a, w).unwrap()
}

#[test]
fn skew_normal_sample_mean() {
    // E X = θ + σ δ √(2/π), δ = m/√(1+m²)
    let g = MixingMeasure::from_coords(Family::SkewNormal, &[vec![0.0, 1.0, 2.0]], &[1.0]).unwrap();
    let s = sample(&g, 100_000, 5).unwrap();
    let mean = s.x.iter().sum::<f64>() / s.x.len() as f64;
    let delta = 2.0 / 5f64.sqrt();
    let expected = delta * (2.0 / std::f64::consts::PI).sqrt();
    assert!((expected - 0.7136).abs() < 1e-4);
    assert!((mean - expected).abs() < 0.01, "{mean}");
    let var = s.x.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s.x.len() as f64;
    assert!((var - (1.0 - expected * expected)).abs() < 0.01);
}

#[test]
fn gamma_sample_moments() {
    let g = MixingMeasure::from_coords(Family::Gamma, &[vec![3.0, 2.0]], &[1.0]).unwrap();
    let s = sample(&g, 100_000, 9).unwrap();
    let mean = s.x.iter().sum::<f64>() / s.x.len() as f64;
    assert!((mean - 1.5).abs() < 0.01);
    assert!(s.x.iter().all(|&x| x > 0.0));
}

#[test]
fn two_gaussians_are_recovered() {
    let g0 = gauss(&[[-2.0, 1.0], [2.0, 1.5]], &[0.4, 0.6]);
    let s = sample(&g0, 5000, 21).unwrap();
    let b = ParamBox::default_for(Family::Gaussian);
    let fit = fit_mle(&s.x, Family::Gaussian, 2, &b, &FitConfig { seed: 21, ..FitConfig::default() }).unwrap();
    let (w1, _) = distance(&TransportSpec::Order(1.0), &fit.measure, &g0).unwrap();
    assert!(w1 < 0.1, "W1 = {w1}");
    // the MLE must beat the truth on its own sample
    assert!(loglik(&fit.measure, &s.x) >= loglik(&g0, &s.x) - 1e-6);
}

#[test]
fn hellinger_shrinks_with_sample_size() {
    let g0 = gauss(&[[-2.0, 1.0], [2.0, 1.5]], &[0.4, 0.6]);
    let b = ParamBox::default_for(Family::Gaussian);
    let h: Vec<f64> = [500usize, 20_000]
        .iter()
        .map(|&n| {
            let s = sample(&g0, n, 3).unwrap();
            let fit = fit_mle(&s.x, Family::Gaussian, 2, &b, &FitConfig { seed: 3, starts: 4, ..FitConfig::default() }).unwrap();
            hellinger_measures(&fit.measure, &g0).unwrap()
        })
        .collect();
    assert!(h[1] < h[0], "{h:?}");
}

#[test]
fn samples_are_seed_deterministic() {
    let g0 = gauss(&[[0.0, 1.0], [3.0, 0.5]], &[0.5, 0.5]);
    assert_eq!(sample(&g0, 200, 4).unwrap().x, sample(&g0, 200, 4).unwrap().x);
    assert_ne!(sample(&g0, 200, 4).unwrap().x, sample(&g0, 200, 5).unwrap().x);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn le_cam_inequality(t1 in -2.0f64..2.0, t2 in -2.0f64..2.0, v1 in 0.3f64..3.0, v2 in 0.3f64..3.0, m1 in -3.0f64..3.0, m2 in -3.0f64..3.0) {
        let a = MixingMeasure::from_coords(Family::SkewNormal, &[vec![t1, v1, m1]], &[1.0]).unwrap();
        let b = MixingMeasure::from_coords(Family::SkewNormal, &[vec![t2, v2, m2]], &[1.0]).unwrap();
        let h = hellinger_measures(&a, &b).unwrap();
        let v = tv_measures(&a, &b).unwrap();
        // h² ≤ V ≤ √2 h with h² = ½∫(√p − √q)²
        prop_assert!(v <= 2f64.sqrt() * h + 1e-8);
        prop_assert!(h * h <= v + 1e-8);
        prop_assert!(h <= 1.0 + 1e-9 && v <= 1.0 + 1e-9);
    }
}
