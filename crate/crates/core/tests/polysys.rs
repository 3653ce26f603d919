use mixsing::polysys::{
    build_gaussian_system, build_sbar_system, build_skew_system, check_solvable, rbar, sbar, skew_free_subsystem, Assignment,
    SolverConfig, Status,
};

fn overfit_witness(v: f64, m: f64, a: f64) -> Assignment {
    let c = (m * m * m + m) / (2.0 * v) * a * a;
    Assignment { weights: vec![0.5, 0.5], a: vec![a, -a], b: vec![-a * a, -a * a], c: vec![c, c] }
}

#[test]
fn split_witness_solves_order_three() {
    for (v, m) in [(1.0, 1.0), (2.0, -0.5), (0.3, 3.0)] {
        let sys = build_skew_system(v, m, 1, 3).unwrap();
        for a in [1.0, 0.3] {
            assert!(sys.residual_at(&overfit_witness(v, m, a)) < 1e-12);
        }
        // the same path breaks at order four
        assert!(build_skew_system(v, m, 1, 4).unwrap().residual_at(&overfit_witness(v, m, 1.0)) > 1e-6);
    }
}

#[test]
fn free_subsystem_at_order_four_is_unsolvable() {
    let cfg = SolverConfig { starts: 500, ..SolverConfig::default() };
    let verdict = check_solvable(&skew_free_subsystem(1, 4).unwrap(), &cfg);
    assert_eq!(verdict.status, Status::Unsolvable);
    assert!(verdict.starts >= 500 && verdict.residual > 1e-4);
}

#[test]
fn gaussian_threshold_for_one_extra_atom() {
    let lad = rbar(1, &SolverConfig::default()).unwrap();
    assert_eq!(lad.value, Some(4));
    assert!(lad.exact);
}

#[test]
fn solvable_witness_survives_serialization() {
    let cfg = SolverConfig { starts: 100, ..SolverConfig::default() };
    let sys = build_gaussian_system(1, 3);
    let verdict = check_solvable(&sys, &cfg);
    assert_eq!(verdict.status, Status::Solvable);
    let w: Assignment = serde_json::from_str(&serde_json::to_string(verdict.witness.as_ref().unwrap()).unwrap()).unwrap();
    assert!(sys.residual_at(&w) < cfg.solve_tol);
}

#[test]
fn residual_scales_with_homogeneity() {
    // a has weight 1, b and c weight 2: equation of degree w scales by t^w
    let sys = build_skew_system(1.5, 0.7, 1, 3).unwrap();
    let s = Assignment { weights: vec![0.4, 0.6], a: vec![0.3, -0.2], b: vec![0.1, 0.5], c: vec![-0.4, 0.2] };
    let t = 0.5;
    let scaled = Assignment {
        weights: s.weights.clone(),
        a: s.a.iter().map(|x| t * x).collect(),
        b: s.b.iter().map(|x| t * t * x).collect(),
        c: s.c.iter().map(|x| t * t * x).collect(),
    };
    let r0 = sys.residuals(&s);
    let r1 = sys.residuals(&scaled);
    for (eq, (x, y)) in sys.equations.iter().zip(r0.iter().zip(&r1)) {
        let w = eq.label[0] + 2 * eq.label[1] + 2 * eq.label[2];
        assert!((y - t.powi(w as i32) * x).abs() < 1e-12);
    }
}

#[test]
fn sbar_three_atoms_matches_closed_form() {
    let cfg = SolverConfig { starts: 200, ..SolverConfig::default() };
    assert_eq!(sbar(&[0.2, 0.5, 0.3], &[1.0, -1.0, 2.0], &cfg).unwrap().value, Some(1));
    assert_eq!(sbar(&[0.5, 0.2, 0.3], &[1.0, -1.0, 2.0], &cfg).unwrap().value, Some(2));
    // a vanishing pair makes every order solvable
    assert_eq!(sbar(&[0.5, 0.5], &[1.0, -1.0], &cfg).unwrap().value, None);
    assert!(build_sbar_system(&[0.5, 0.5], &[1.0, 1.0], 1).is_err());
}
