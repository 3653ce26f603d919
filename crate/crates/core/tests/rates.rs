use mixsing::rates::{fit_slope, preset, run_rate_study, PRESETS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn slope_of_noisy_quarter_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let pts: Vec<(f64, f64)> = [1000.0, 2000.0, 4000.0, 8000.0, 16000.0]
        .iter()
        .flat_map(|&n: &f64| (0..20).map(move |_| n))
        .map(|n| (n, 3.0 * n.powf(-0.25) * f64::exp(noise.sample(&mut rng))))
        .collect();
    let (s, se) = fit_slope(&pts).unwrap();
    assert!((s + 0.25).abs() < 3.0 * se + 1e-3, "{s} ± {se}");
}

#[test]
fn presets_are_listed_and_valid() {
    for p in PRESETS {
        let s = preset(p, 1).unwrap();
        assert!(s.reps >= 5 && s.n_grid.len() >= 4);
    }
}

#[test]
fn slow_rates_are_refused_without_override() {
    let mut s = preset("o-gauss-loc", 1).unwrap();
    s.report = Some(mixsing::classify::SingularityReport {
        level: mixsing::classify::Level::Exact(3),
        ..s.report.clone().unwrap()
    });
    s.reps = 5;
    s.n_grid = vec![100, 200, 400, 800];
    let st = run_rate_study(&s).unwrap();
    assert!(st.slopes[0].slope.is_none());
    assert!(st.slopes[0].note.as_deref().unwrap().starts_with("SlopeRefused"));
    s.force_slope = true;
    assert!(run_rate_study(&s).unwrap().slopes[0].slope.is_some());
}

#[test]
fn small_study_is_deterministic() {
    let mut s = preset("s0-gauss", 7).unwrap();
    s.reps = 5;
    s.n_grid = vec![200, 400, 800, 1600];
    let a = run_rate_study(&s).unwrap();
    let b = run_rate_study(&s).unwrap();
    assert_eq!(a.long_rows(), b.long_rows());
    assert_eq!(a.cells.len(), 20);
}
