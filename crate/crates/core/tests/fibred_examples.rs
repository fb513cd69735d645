use std::collections::BTreeSet;

use ifs_morph_core::fibred::{
    exact_fibred_points, fibre, fibred_attractor, graph_test, injectivity_test_1d, projection_check,
    transpose_cloud, transpose_points,
};
use ifs_morph_core::ifs::{attractor_deterministic, backward_invariance_check, hutchinson_apply, hausdorff_distance};
use ifs_morph_core::{AlphaMap, ExactPoint, IfsSystem, Metric, PointCloud, VerdictKind};

fn gamma() -> IfsSystem {
    IfsSystem::interval("gamma", &[((2, 3), (0, 1)), ((2, 3), (1, 3))]).unwrap()
}

fn lambda() -> IfsSystem {
    IfsSystem::interval("lambda", &[((3, 4), (0, 1)), ((3, 4), (1, 4))]).unwrap()
}

fn pt(x: (i64, i64), y: (i64, i64)) -> ExactPoint {
    ExactPoint::from_ratios(&[x, y])
}

fn alpha(table: &[usize]) -> AlphaMap {
    AlphaMap::new(table.to_vec(), 2).unwrap()
}

#[test]
fn displayed_points_of_both_bijections() {
    let fs = fibre(&gamma(), &lambda(), &alpha(&[1, 2])).unwrap();
    let pts: BTreeSet<ExactPoint> = exact_fibred_points(&fs, 2).unwrap().into_iter().collect();
    for p in [pt((0, 1), (0, 1)), pt((1, 1), (1, 1)), pt((4, 9), (9, 16)), pt((5, 9), (7, 16))] {
        assert!(pts.contains(&p), "missing {p}");
    }
    let g = fs.product.map(2).unwrap();
    assert_eq!(g.apply_exact(&g.apply_exact(&pt((0, 1), (0, 1)))), pt((5, 9), (7, 16)));

    let fs = fibre(&gamma(), &lambda(), &alpha(&[2, 1])).unwrap();
    let pts: BTreeSet<ExactPoint> = exact_fibred_points(&fs, 2).unwrap().into_iter().collect();
    for p in [pt((0, 1), (1, 1)), pt((1, 1), (0, 1)), pt((4, 9), (7, 16)), pt((5, 9), (9, 16))] {
        assert!(pts.contains(&p), "missing {p}");
    }
}

#[test]
fn both_bijections_refute_injectivity() {
    for table in [[1, 2], [2, 1]] {
        let fs = fibre(&gamma(), &lambda(), &alpha(&table)).unwrap();
        let v = injectivity_test_1d(&exact_fibred_points(&fs, 3).unwrap()).unwrap();
        assert_eq!(v.kind, VerdictKind::CertifiedNotInjective, "alpha {table:?}");
    }
}

#[test]
fn transpose_has_a_vertical_jump() {
    let fs = fibre(&gamma(), &lambda(), &alpha(&[1, 2])).unwrap();
    let d = fibred_attractor(&fs, 20, 0.0).unwrap();
    assert!(d.epsilon < 0.005, "epsilon {}", d.epsilon);
    let flipped = transpose_cloud(&d, 1).unwrap();
    let exact = transpose_points(&exact_fibred_points(&fs, 2).unwrap(), 1);
    let v = graph_test(&flipped, &exact, 1, Some(0.01), None).unwrap();
    assert!(v.kind.is_refutation(), "{v:?}");
    assert!(v.score.unwrap() >= 0.125, "score {}", v.score.unwrap());
}

#[test]
fn horizontal_reflection_relates_the_bijections() {
    let a = fibred_attractor(&fibre(&gamma(), &lambda(), &alpha(&[1, 2])).unwrap(), 10, 0.0).unwrap();
    let b = fibred_attractor(&fibre(&gamma(), &lambda(), &alpha(&[2, 1])).unwrap(), 10, 0.0).unwrap();
    let reflected: Vec<[f64; 2]> = a.cloud.points().map(|p| [p[0], 1.0 - p[1]]).collect();
    let reflected = PointCloud::from_points(&reflected).unwrap();
    let d = hausdorff_distance(&reflected, &b.cloud, Metric::Product { split: 1 }).unwrap();
    assert!(d <= a.epsilon + b.epsilon, "{d}");
}

#[test]
fn exact_points_are_closed_under_the_fibred_maps() {
    let fs = fibre(&gamma(), &lambda(), &alpha(&[1, 2])).unwrap();
    let small = exact_fibred_points(&fs, 2).unwrap();
    let image = fs.product.hutchinson_exact(&small);
    let larger: BTreeSet<ExactPoint> = exact_fibred_points(&fs, 3).unwrap().into_iter().collect();
    assert!(image.iter().all(|p| larger.contains(p)));

    let xs: Vec<ExactPoint> = small.iter().map(|p| p.split_at(1).0).collect();
    let source_cloud = PointCloud::from_exact(&xs).unwrap();
    let image_cloud = hutchinson_apply(&gamma(), &source_cloud).unwrap();
    assert!(image_cloud.points().all(|p| (0.0..=1.0).contains(&p[0])));
}

#[test]
fn projection_onto_source_matches_its_attractor() {
    for table in [[1, 1], [1, 2], [2, 1], [2, 2]] {
        let fs = fibre(&gamma(), &lambda(), &alpha(&table)).unwrap();
        let d = fibred_attractor(&fs, 12, 0.0).unwrap();
        let src = attractor_deterministic(&gamma(), 12, 0.0).unwrap();
        let pc = projection_check(&d, &src, 1, 0.0).unwrap();
        assert!(pc.within_bound, "{table:?}: {}", pc.distance);
    }
}

#[test]
fn unit_interval_is_backward_invariant_for_the_source() {
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let cloud = PointCloud::new(1, grid).unwrap();
    let check = backward_invariance_check(&cloud, &gamma(), 1e-3).unwrap();
    assert!(check.holds, "deficit {}", check.deficit);
}

#[test]
fn rigidity_across_depths() {
    let fs = fibre(&gamma(), &lambda(), &alpha(&[1, 2])).unwrap();
    let a = fibred_attractor(&fs, 8, 0.0).unwrap();
    let b = fibred_attractor(&fs, 12, 0.0).unwrap();
    let d = hausdorff_distance(&a.cloud, &b.cloud, Metric::Product { split: 1 }).unwrap();
    assert!(d <= a.epsilon + b.epsilon);
}
