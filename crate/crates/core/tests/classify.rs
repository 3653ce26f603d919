use mixsing::classify::{classify_emixture, classify_omixture, fisher_rank, is_s0, Level};
use mixsing::mixing::{Family, MixingMeasure};
use mixsing::polysys::SolverConfig;
use mixsing::quad::QuadGrid;

fn skew(atoms: &[[f64; 3]], w: &[f64]) -> MixingMeasure {
    let a: Vec<Vec<f64>> = atoms.iter().map(|x| x.to_vec()).collect();
    MixingMeasure::from_coords(Family::SkewNormal, &a, w).unwrap()
}

fn idx(v: &[u32]) -> Vec<Option<u32>> {
    v.iter().map(|&x| Some(x)).collect()
}

fn check(g: &MixingMeasure, label: &str, level: Level, index: Option<&[u32]>) {
    let r = classify_emixture(g).unwrap();
    assert_eq!(r.label, label);
    assert_eq!(r.level, level, "{label}");
    match index {
        Some(i) => assert_eq!(r.index_set.entries, vec![idx(i)], "{label}"),
        None => assert!(r.index_set.entries[0].iter().all(|x| x.is_none())),
    }
}

#[test]
fn s0_generic() {
    check(&skew(&[[0.0, 1.0, 1.0], [1.0, 2.0, -1.0]], &[0.5, 0.5]), "S0", Level::Exact(0), Some(&[1, 1, 1]));
}

#[test]
fn s1_conformant_homologous_pair() {
    // v/(1+m²) = 1 for both, shapes of one sign
    check(&skew(&[[0.0, 2.0, 1.0], [0.0, 5.0, 2.0]], &[0.4, 0.6]), "S1", Level::Exact(1), Some(&[1, 1, 2]));
}

#[test]
fn s2_zero_shape() {
    check(&skew(&[[0.0, 1.0, 0.0], [2.0, 1.0, 1.0]], &[0.5, 0.5]), "S2", Level::Exact(2), Some(&[3, 2, 3]));
}

#[test]
fn s31_pair() {
    let g = skew(&[[0.0, 2.0, 1.0], [0.0, 2.0, -1.0]], &[0.3, 0.7]);
    check(&g, "S31", Level::Exact(1), Some(&[1, 1, 2]));
    assert_eq!(classify_emixture(&g).unwrap().aux.kstar, Some(2));
}

#[test]
fn s31_triple_sign_branches() {
    // shapes (1, −1, 2): Σ a_i Π_{j≠i} b_j = −2a1 + 2a2 − a3
    let atoms = [[0.0, 2.0, 1.0], [0.0, 2.0, -1.0], [0.0, 5.0, 2.0]];
    check(&skew(&atoms, &[0.2, 0.5, 0.3]), "S31", Level::Exact(1), Some(&[1, 1, 2]));
    check(&skew(&atoms, &[0.5, 0.2, 0.3]), "S31", Level::Exact(2), Some(&[1, 1, 3]));
}

#[test]
fn s32_pair() {
    // p1 m2 + p2 m1 = 0 without the C(2) relation
    let g = skew(&[[0.0, 2.0, 1.0], [0.0, 5.0, -2.0]], &[1.0 / 3.0, 2.0 / 3.0]);
    check(&g, "S32", Level::Exact(3), Some(&[1, 1, 4]));
}

#[test]
fn s33_mirror_pair() {
    check(&skew(&[[0.0, 2.0, 1.0], [0.0, 2.0, -1.0]], &[0.5, 0.5]), "S33", Level::Infinite, None);
}

#[test]
fn gamma_generic_and_pathological() {
    let gm = |a: &[[f64; 2]]| {
        let atoms: Vec<Vec<f64>> = a.iter().map(|x| x.to_vec()).collect();
        MixingMeasure::from_coords(Family::Gamma, &atoms, &[0.5, 0.5]).unwrap()
    };
    let r = classify_emixture(&gm(&[[2.0, 1.0], [4.5, 2.0]])).unwrap();
    assert_eq!((r.label.as_str(), r.level), ("gamma-generic", Level::Exact(0)));
    let r = classify_emixture(&gm(&[[2.0, 1.0], [3.0, 1.0]])).unwrap();
    assert_eq!((r.label.as_str(), r.level), ("gamma-pathological", Level::Infinite));
}

#[test]
fn gaussian_exact_fit_is_first_order() {
    let g = MixingMeasure::from_coords(Family::Gaussian, &[vec![0.0, 1.0], vec![2.0, 1.0]], &[0.5, 0.5]).unwrap();
    check(&g, "gaussian-e", Level::Exact(0), Some(&[1, 1]));
}

#[test]
fn skew_overfit_by_one() {
    let g = skew(&[[0.0, 1.0, 1.0]], &[1.0]);
    let r = classify_omixture(&g, 2, 0.02, &SolverConfig::default()).unwrap();
    assert_eq!(r.aux.r, Some(4));
    assert_eq!(r.level, Level::Bound(3));
    assert_eq!(r.index_set.entries, vec![idx(&[4, 2, 2])]);
}

#[test]
fn fisher_information_is_full_rank_only_on_s0() {
    let cases = [
        skew(&[[0.0, 1.0, 1.0], [1.0, 2.0, -1.0]], &[0.5, 0.5]),
        skew(&[[0.0, 2.0, 1.0], [0.0, 5.0, 2.0]], &[0.4, 0.6]),
        skew(&[[0.0, 1.0, 0.0], [2.0, 1.0, 1.0]], &[0.5, 0.5]),
        skew(&[[0.0, 2.0, 1.0], [0.0, 2.0, -1.0]], &[0.3, 0.7]),
        skew(&[[0.0, 2.0, 1.0], [0.0, 2.0, -1.0]], &[0.5, 0.5]),
    ];
    for g in &cases {
        let grid = QuadGrid::envelope(&[g]).unwrap();
        let f = fisher_rank(g, &grid).unwrap();
        assert_eq!(f.rank == f.dim, is_s0(g), "{:?} rank {} of {}", g.atoms(), f.rank, f.dim);
    }
}

#[test]
fn near_boundary_measure_warns() {
    let g = skew(&[[0.0, 1.0, 1e-8], [2.0, 1.0, 1.0]], &[0.5, 0.5]);
    let r = classify_emixture(&g).unwrap();
    assert_eq!(r.label, "S0");
    assert!(r.boundary_warning());
}
