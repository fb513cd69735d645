use proptest::prelude::*;

use ifs_morph_core::ifs::{
    attractor_deterministic, chaos_game, directed_hausdorff, hausdorff_distance, hutchinson_apply,
};
use ifs_morph_core::{AffineContraction, ExactMatrix, ExactPoint, IfsSystem, Metric, PointCloud};

/// Brute-force Hausdorff distance with explicit loops.
fn oracle_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let d = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let dir = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        let mut worst = 0.0f64;
        for p in a {
            let mut best = f64::INFINITY;
            for q in b {
                best = best.min(d(p, q));
            }
            worst = worst.max(best);
        }
        worst
    };
    dir(a, b).max(dir(b, a))
}

fn cloud(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), 1..40)
}

/// Random contraction with entries in `[-9/20, 9/20]`, so `‖Q‖_F < 1` in
/// dimensions 1 and 2.
fn contraction(dim: usize) -> impl Strategy<Value = AffineContraction> {
    (
        prop::collection::vec((-9i64..=9, 20i64..=20), dim * dim),
        prop::collection::vec((-20i64..=20, 1i64..=8), dim),
    )
        .prop_map(move |(m, t)| {
            let rows: Vec<&[(i64, i64)]> = m.chunks(dim).collect();
            AffineContraction::new(ExactMatrix::from_ratios(&rows).unwrap(), ExactPoint::from_ratios(&t)).unwrap()
        })
}

fn system() -> impl Strategy<Value = IfsSystem> {
    (1usize..=2)
        .prop_flat_map(|dim| prop::collection::vec(contraction(dim), 1..4))
        .prop_map(|maps| IfsSystem::new("random", maps).unwrap())
}

fn to_cloud(points: &[Vec<f64>]) -> PointCloud {
    PointCloud::from_points(points).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hutchinson_contracts_hausdorff_distance(
        (sys, a, b) in system().prop_flat_map(|s| {
            let d = s.dimension();
            (Just(s), cloud(d), cloud(d))
        })
    ) {
        let (ka, kb) = (to_cloud(&a), to_cloud(&b));
        let before = hausdorff_distance(&ka, &kb, Metric::Euclidean).unwrap();
        let after = hausdorff_distance(
            &hutchinson_apply(&sys, &ka).unwrap(),
            &hutchinson_apply(&sys, &kb).unwrap(),
            Metric::Euclidean,
        ).unwrap();
        prop_assert!(after <= sys.contraction_factor() * before + 1e-9, "{after} > c * {before}");
    }

    #[test]
    fn hausdorff_matches_oracle_and_is_a_metric(a in cloud(2), b in cloud(2), c in cloud(2)) {
        let (ka, kb, kc) = (to_cloud(&a), to_cloud(&b), to_cloud(&c));
        let ab = hausdorff_distance(&ka, &kb, Metric::Euclidean).unwrap();
        prop_assert_eq!(ab, oracle_hausdorff(&a, &b));
        prop_assert_eq!(ab, hausdorff_distance(&kb, &ka, Metric::Euclidean).unwrap());
        let bc = hausdorff_distance(&kb, &kc, Metric::Euclidean).unwrap();
        let ac = hausdorff_distance(&ka, &kc, Metric::Euclidean).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(directed_hausdorff(&ka, &kb, Metric::Euclidean).unwrap() <= ab);
    }
}

fn unit_grid(step: f64) -> PointCloud {
    let n = (1.0 / step).round() as usize;
    PointCloud::new(1, (0..=n).map(|i| i as f64 * step).collect()).unwrap()
}

#[test]
fn certificate_holds_for_the_unit_interval() {
    let sys = IfsSystem::interval("halves", &[((1, 2), (0, 1)), ((1, 2), (1, 2))]).unwrap();
    let grid = unit_grid(1e-4);
    let mut last = f64::INFINITY;
    for k in 1..=14 {
        let a = attractor_deterministic(&sys, k, 0.0).unwrap();
        let d = hausdorff_distance(&a.cloud, &grid, Metric::Euclidean).unwrap();
        assert!(d <= a.epsilon + 2e-4, "k={k}: {d} > {}", a.epsilon);
        assert!(a.epsilon < last);
        last = a.epsilon;
    }
}

#[test]
fn deeper_clouds_stay_within_both_bounds() {
    let sys = IfsSystem::interval("thirds", &[((1, 3), (0, 1)), ((1, 3), (2, 3))]).unwrap();
    let clouds: Vec<_> = (2..=10).step_by(2).map(|k| attractor_deterministic(&sys, k, 0.0).unwrap()).collect();
    for w in clouds.windows(2) {
        let d = hausdorff_distance(&w[0].cloud, &w[1].cloud, Metric::Euclidean).unwrap();
        assert!(d <= w[0].epsilon + w[1].epsilon);
    }
}

#[test]
fn chaos_game_fills_the_interval() {
    let gamma = IfsSystem::interval("gamma", &[((2, 3), (0, 1)), ((2, 3), (1, 3))]).unwrap();
    let pts = chaos_game(&gamma, 0, 100_000, 100).unwrap();
    assert_eq!(pts.len(), 100_000);
    assert!(pts.coords().iter().all(|x| (0.0..=1.0).contains(x)));
    let d = hausdorff_distance(&pts, &unit_grid(1e-3), Metric::Euclidean).unwrap();
    assert!(d <= 5e-3, "{d}");
    assert_eq!(chaos_game(&gamma, 0, 1000, 100).unwrap(), chaos_game(&gamma, 0, 1000, 100).unwrap());
}
