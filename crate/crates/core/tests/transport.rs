use mixsing::mixing::{Family, MixingMeasure};
use mixsing::transport::{cost, distance, solve_transport, TransportSpec};
use mixsing::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum of c·q over the vertices of the transportation polytope, found by
/// trying every support of size n+m−1 and solving the marginal equations.
fn brute_force(c: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let size = n + m - 1;
    let mut best = f64::INFINITY;
    let mut pick = Vec::with_capacity(size);
    subsets(cells.len(), size, 0, &mut pick, &mut |s| {
        if let Some(q) = solve_support(s, &cells, a, b) {
            let v: f64 = s.iter().zip(&q).map(|(&k, x)| c[cells[k].0][cells[k].1] * x).sum();
            best = best.min(v);
        }
    });
    best
}

fn subsets(n: usize, k: usize, from: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in from..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        subsets(n, k, i + 1, cur, f);
        cur.pop();
    }
}

// Gaussian elimination on the (n+m) × |support| marginal system; rejects
// rank-deficient supports and negative solutions.
fn solve_support(s: &[usize], cells: &[(usize, usize)], a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let (n, m) = (a.len(), b.len());
    let cols = s.len();
    let mut t: Vec<Vec<f64>> = (0..n + m)
        .map(|r| {
            let mut row: Vec<f64> = s
                .iter()
                .map(|&k| {
                    let (i, j) = cells[k];
                    f64::from(u8::from(if r < n { i == r } else { j == r - n }))
                })
                .collect();
            row.push(if r < n { a[r] } else { b[r - n] });
            row
        })
        .collect();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..t.len()).max_by(|&x, &y| t[x][col].abs().total_cmp(&t[y][col].abs())) else { break };
        if t[p][col].abs() < 1e-12 {
            return None;
        }
        t.swap(row, p);
        let piv = t[row][col];
        for x in t[row].iter_mut() {
            *x /= piv;
        }
        for r in 0..t.len() {
            if r != row && t[r][col] != 0.0 {
                let f = t[r][col];
                for k in 0..=cols {
                    t[r][k] -= f * t[row][k];
                }
            }
        }
        row += 1;
    }
    if t[row..].iter().any(|r| r[cols].abs() > 1e-10) {
        return None;
    }
    let q: Vec<f64> = (0..cols).map(|k| t[k][cols]).collect();
    if q.iter().any(|&x| x < -1e-12) {
        return None;
    }
    Some(q)
}

fn random_measure(rng: &mut ChaCha8Rng, k: usize) -> MixingMeasure {
    let atoms: Vec<Vec<f64>> =
        (0..k).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(0.2..3.0), rng.random_range(-3.0..3.0)]).collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / s).collect();
    MixingMeasure::from_coords(Family::SkewNormal, &atoms, &w).unwrap()
}

fn random_kappa(rng: &mut ChaCha8Rng) -> Vec<u32> {
    (0..3).map(|_| rng.random_range(1..=4)).collect()
}

#[test]
fn matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..60 {
        let (kg, kh) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let g = random_measure(&mut rng, kg);
        let h = random_measure(&mut rng, kh);
        let specs = [
            TransportSpec::Order(rng.random_range(1.0..3.0)),
            TransportSpec::Index(random_kappa(&mut rng)),
            TransportSpec::Block((0..h.k()).map(|_| random_kappa(&mut rng)).collect()),
        ];
        for spec in specs {
            let c = mixsing::transport::cost_matrix(&spec, &g, &h).unwrap();
            let oracle = brute_force(&c, g.weights(), h.weights());
            let (_, plan) = distance(&spec, &g, &h).unwrap();
            assert!((plan.value - oracle).abs() <= 1e-9, "case {case} {spec:?}: {} vs {oracle}", plan.value);
        }
    }
}

#[test]
fn weak_triangle_holds_for_uniform_index() {
    let kappa = vec![2, 1, 1];
    let c = kappa.iter().map(|&k| 2f64.powi(1 - k as i32)).fold(f64::INFINITY, f64::min);
    assert_eq!(c, 0.5);
    let spec = TransportSpec::Index(kappa);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut strict = 0;
    for _ in 0..20000 {
        let p: Vec<_> = (0..3).map(|_| random_measure(&mut rng, 1)).collect();
        let d = |i: usize, j: usize| cost(&spec, p[i].atom(0), p[j].atom(0)).unwrap();
        let (d13, d12, d23) = (d(0, 2), d(0, 1), d(1, 2));
        assert!(c * d13 <= d12 + d23 + 1e-12);
        if d13 > d12 + d23 + 1e-12 {
            strict += 1;
        }
    }
    // d_κ with the 1/‖κ‖∞ root is subadditive, so the plain inequality holds too
    assert_eq!(strict, 0);
}

#[test]
fn distance_rejects_oversized_support() {
    let atoms: Vec<Vec<f64>> = (0..65).map(|i| vec![i as f64, 1.0]).collect();
    let g = MixingMeasure::from_coords(Family::Gaussian, &atoms, &vec![1.0 / 65.0; 65]).unwrap();
    let h = MixingMeasure::from_coords(Family::Gaussian, &[vec![0.0, 1.0]], &[1.0]).unwrap();
    assert_eq!(distance(&TransportSpec::Order(1.0), &g, &h).unwrap_err(), Error::SupportTooLarge(65, 64));
}

#[test]
fn block_distance_is_asymmetric() {
    // unequal weights force mass across atoms, where the row of K depends on the argument order
    let g0 = MixingMeasure::from_coords(Family::Gaussian, &[vec![0.0, 1.0], vec![1.0, 1.0]], &[0.3, 0.7]).unwrap();
    let g = MixingMeasure::from_coords(Family::Gaussian, &[vec![0.5, 1.0], vec![0.6, 1.0]], &[0.7, 0.3]).unwrap();
    let k = TransportSpec::Block(vec![vec![1, 1], vec![4, 4]]);
    let (ab, _) = distance(&k, &g, &g0).unwrap();
    let (ba, _) = distance(&k, &g0, &g).unwrap();
    assert!((ab - ba).abs() > 1e-3, "{ab} {ba}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plan_marginals_and_value(seed in 0u64..10_000, r in 1.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (kg, kh) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let g = random_measure(&mut rng, kg);
        let h = random_measure(&mut rng, kh);
        let spec = TransportSpec::Order(r);
        let (value, plan) = distance(&spec, &g, &h).unwrap();
        for (i, row) in plan.q.iter().enumerate() {
            prop_assert!(row.iter().all(|&q| q >= -1e-12));
            prop_assert!((row.iter().sum::<f64>() - g.weight(i)).abs() < 1e-9);
        }
        for j in 0..h.k() {
            prop_assert!((plan.q.iter().map(|row| row[j]).sum::<f64>() - h.weight(j)).abs() < 1e-9);
        }
        prop_assert!((value.powf(r) - plan.value).abs() < 1e-9 * (1.0 + plan.value));
        let (back, _) = distance(&spec, &h, &g).unwrap();
        prop_assert!((value - back).abs() < 1e-9);
    }

    #[test]
    fn independent_coupling_never_beats_optimum(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_measure(&mut rng, 3);
        let h = random_measure(&mut rng, 4);
        let spec = TransportSpec::Index(vec![1, 2, 2]);
        let c = mixsing::transport::cost_matrix(&spec, &g, &h).unwrap();
        let (_, opt) = solve_transport(&c, g.weights(), h.weights());
        let product: f64 = (0..3).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| g.weight(i) * h.weight(j) * c[i][j]).sum();
        prop_assert!(opt <= product + 1e-12);
    }
}
