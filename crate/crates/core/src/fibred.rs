//! The system fibred over a label map, and tests for whether its attractor
//! is the graph of a function.
//!
//! For `α: Γ -> Λ` the fibred maps are `γ^α(x, y) = (γ(x), α(γ)(y))` on
//! `X × Y` with the max metric. A morphism `(f, α)` exists on the attractors
//! exactly when the fibred attractor `𝔻` is the graph of a function, so:
//!
//! - two exact points of `𝔻` with equal `x` and different `y` refute it
//!   (`CertifiedNotGraph`);
//! - in one dimension, exact points forcing a non-monotone continuous
//!   function refute injectivity (`CertifiedNotInjective`), which rules out
//!   a conjugacy when the source attractor is an interval;
//! - a finite cloud can only suggest graphness (`HeuristicGraph`).

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{affine_fixed_point, ExactPoint};
use crate::ifs::{self, CertifiedCloud, IfsSystem, Metric, PointCloud};
use crate::morphism::{code_space_system, AlphaMap};

#[derive(Clone, Debug, PartialEq)]
pub struct FibredSystem {
    pub product: IfsSystem,
    pub alpha: AlphaMap,
    pub source: IfsSystem,
    pub target: IfsSystem,
}

impl FibredSystem {
    /// Number of leading coordinates belonging to the source space.
    pub fn split(&self) -> usize {
        self.source.dimension()
    }
}

pub fn fibre(source: &IfsSystem, target: &IfsSystem, alpha: &AlphaMap) -> Result<FibredSystem> {
    if alpha.domain_size() != source.len() || alpha.codomain_size() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "label map {} -> {} does not fit systems with {} and {} maps",
            alpha.domain_size(),
            alpha.codomain_size(),
            source.len(),
            target.len()
        )));
    }
    let maps = source
        .maps()
        .iter()
        .map(|g| {
            let h = target.map(alpha.image(g.label())).expect("validated label");
            g.block_product(h)
        })
        .collect::<Result<Vec<_>>>()?;
    let product = IfsSystem::with_metric(
        format!("{} x_[{alpha}] {}", source.name(), target.name()),
        maps,
        Metric::Product {
            split: source.dimension(),
        },
    )?;
    Ok(FibredSystem {
        product,
        alpha: alpha.clone(),
        source: source.clone(),
        target: target.clone(),
    })
}

pub fn fibred_attractor(fs: &FibredSystem, depth: usize, grid: f64) -> Result<CertifiedCloud> {
    ifs::attractor_deterministic(&fs.product, depth, grid)
}

/// Exact points of the fibred attractor: fixed points of all words of length
/// `1..=max_word_len`, together with their images under all words of length
/// `0..=max_word_len`. Sorted and deduplicated.
pub fn exact_fibred_points(fs: &FibredSystem, max_word_len: usize) -> Result<Vec<ExactPoint>> {
    let n = fs.product.len();
    let mut fixed = Vec::new();
    let mut word = Vec::with_capacity(max_word_len);
    for len in 1..=max_word_len {
        word.clear();
        word.resize(len, 1);
        loop {
            let (q, b) = fs.product.word_affine(&word)?;
            fixed.push(affine_fixed_point(&q, &b)?);
            // odometer over {1..n}^len
            let mut i = len;
            while i > 0 && word[i - 1] == n {
                word[i - 1] = 1;
                i -= 1;
            }
            if i == 0 {
                break;
            }
            word[i - 1] += 1;
        }
    }
    let mut all: BTreeSet<ExactPoint> = fixed.iter().cloned().collect();
    let mut level: Vec<ExactPoint> = all.iter().cloned().collect();
    for _ in 0..max_word_len {
        level = fs.product.hutchinson_exact(&level);
        all.extend(level.iter().cloned());
    }
    Ok(all.into_iter().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    CertifiedNotGraph,
    CertifiedNotInjective,
    HeuristicGraph,
    HeuristicNotGraph,
    Inconclusive,
}

impl VerdictKind {
    pub fn is_certified(self) -> bool {
        matches!(self, Self::CertifiedNotGraph | Self::CertifiedNotInjective)
    }

    /// The verdict rules out a conjugacy for this label map.
    pub fn is_refutation(self) -> bool {
        matches!(
            self,
            Self::CertifiedNotGraph | Self::CertifiedNotInjective | Self::HeuristicNotGraph
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphVerdict {
    pub kind: VerdictKind,
    pub witness: Vec<ExactPoint>,
    pub score: Option<f64>,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
}

impl GraphVerdict {
    fn exact(kind: VerdictKind, witness: Vec<ExactPoint>) -> Self {
        Self {
            kind,
            witness,
            score: None,
            delta: None,
            eta: None,
        }
    }
}

/// Default resolution: `δ = 4ε`, `η = 10δ`. An exact cloud (`ε = 0`) gets
/// `δ = MIN_DELTA`.
pub fn default_params(epsilon: f64) -> (f64, f64) {
    let delta = (4.0 * epsilon).max(MIN_DELTA);
    (delta, 10.0 * delta)
}

pub const MIN_DELTA: f64 = 1e-12;

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    Metric::Euclidean.distance(a, b)
}

/// Decides (semi-)whether the fibred attractor is a graph over the first
/// `split` coordinates.
///
/// Exact phase: two exact points with identical `x` block and distinct `y`
/// block give `CertifiedNotGraph`. Numeric phase: the score is the largest
/// `y` spread over cloud pairs whose `x` blocks are within `δ`;
/// `HeuristicNotGraph` if it reaches `η`, `HeuristicGraph` below, and
/// `Inconclusive` if some cloud point has no other point within `δ` in `x`.
pub fn graph_test(
    d: &CertifiedCloud,
    exact: &[ExactPoint],
    split: usize,
    delta: Option<f64>,
    eta: Option<f64>,
) -> Result<GraphVerdict> {
    let dim = d.cloud.dim();
    if split == 0 || split >= dim {
        return Err(Error::ShapeMismatch(format!("split {split} invalid for dimension {dim}")));
    }
    let (def_delta, _) = default_params(d.epsilon);
    let delta = delta.unwrap_or(def_delta);
    let eta = eta.unwrap_or(10.0 * delta);
    if !(delta > 2.0 * d.epsilon) || !delta.is_finite() {
        return Err(Error::BadParams(format!(
            "delta {delta} must exceed twice the cloud error {}",
            d.epsilon
        )));
    }

    let mut by_x: HashMap<ExactPoint, &ExactPoint> = HashMap::new();
    for p in exact {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        let (x, y) = p.split_at(split);
        match by_x.get(&x) {
            Some(q) if q.split_at(split).1 != y => {
                return Ok(GraphVerdict::exact(
                    VerdictKind::CertifiedNotGraph,
                    vec![(*q).clone(), p.clone()],
                ));
            }
            Some(_) => {}
            None => {
                by_x.insert(x, p);
            }
        }
    }

    let cloud = &d.cloud;
    let (score, sparse) = if dim == 2 {
        scan_line(cloud, delta)
    } else {
        scan_buckets(cloud, split, delta)
    };

    let kind = if sparse && cloud.len() > 1 {
        VerdictKind::Inconclusive
    } else if score >= eta {
        VerdictKind::HeuristicNotGraph
    } else {
        VerdictKind::HeuristicGraph
    };
    Ok(GraphVerdict {
        kind,
        witness: Vec::new(),
        score: Some(score),
        delta: Some(delta),
        eta: Some(eta),
    })
}

/// `(score, sparse)` for a cloud in ℝ × ℝ: after sorting by `x`, every pair
/// within `delta` lies in a window starting at its left point, and monotone
/// deques track the `y` range of the sliding window.
fn scan_line(cloud: &PointCloud, delta: f64) -> (f64, bool) {
    let mut pts: Vec<(f64, f64)> = cloud.points().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len();
    let sparse = (0..n).any(|i| {
        let left = i > 0 && pts[i].0 - pts[i - 1].0 <= delta;
        let right = i + 1 < n && pts[i + 1].0 - pts[i].0 <= delta;
        !left && !right
    });
    let mut hi: VecDeque<usize> = VecDeque::new();
    let mut lo: VecDeque<usize> = VecDeque::new();
    let mut score: f64 = 0.0;
    let mut end = 0;
    for start in 0..n {
        while end < n && pts[end].0 - pts[start].0 <= delta {
            while hi.back().is_some_and(|&j| pts[j].1 <= pts[end].1) {
                hi.pop_back();
            }
            hi.push_back(end);
            while lo.back().is_some_and(|&j| pts[j].1 >= pts[end].1) {
                lo.pop_back();
            }
            lo.push_back(end);
            end += 1;
        }
        score = score.max(pts[hi[0]].1 - pts[lo[0]].1);
        if hi[0] == start {
            hi.pop_front();
        }
        if lo[0] == start {
            lo.pop_front();
        }
    }
    (score, sparse)
}

/// `(score, sparse)` by scanning the `3^split` neighbouring cells of a grid
/// of side `delta` on the first factor.
fn scan_buckets(cloud: &PointCloud, split: usize, delta: f64) -> (f64, bool) {
    let cell = |p: &[f64]| -> Vec<i64> { p[..split].iter().map(|v| (v / delta).floor() as i64).collect() };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in cloud.points().enumerate() {
        buckets.entry(cell(p)).or_default().push(i);
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(split as u32))
        .map(|mut code| {
            (0..split)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();

    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            let home = cell(p);
            let mut count = 0usize;
            let mut spread: f64 = 0.0;
            for off in &offsets {
                let key: Vec<i64> = home.iter().zip(off).map(|(a, b)| a + b).collect();
                let Some(members) = buckets.get(&key) else { continue };
                for &j in members {
                    let q = cloud.point(j);
                    if euclid(&p[..split], &q[..split]) <= delta {
                        count += 1;
                        spread = spread.max(euclid(&p[split..], &q[split..]));
                    }
                }
            }
            (spread, count < 2)
        })
        .reduce(|| (0.0, false), |a, b| (a.0.max(b.0), a.1 || b.1))
}

/// One-dimensional injectivity refutation from exact points of `𝔻`.
///
/// If the points contain both a falling and a rising pair, any continuous
/// function through them is non-monotone and hence, on an interval, not
/// injective. The witness is `[fall_a, fall_b, rise_a, rise_b]`; among all
/// candidate pairs the one with the smallest largest denominator is reported, and
/// the rising pair is the outermost one when that rises. Callers must only
/// rely on the verdict when the source attractor is an interval (see
/// [`ifs::interval_attractor_1d`]).
pub fn injectivity_test_1d(exact: &[ExactPoint]) -> Result<GraphVerdict> {
    if exact.iter().any(|p| p.dim() != 2) {
        return Err(Error::NotOneDimensional);
    }
    let sorted: Vec<&ExactPoint> = exact.iter().collect::<BTreeSet<_>>().into_iter().collect();
    fn x(p: &ExactPoint) -> &BigRational {
        &p.coords()[0]
    }
    fn y(p: &ExactPoint) -> &BigRational {
        &p.coords()[1]
    }
    let weight = |a: &ExactPoint, b: &ExactPoint| -> (BigInt, BigInt) {
        let dens = || a.coords().iter().chain(b.coords()).map(|r| r.denom().clone());
        (dens().max().unwrap_or_default(), dens().product())
    };
    let simplest = |want: Ordering| {
        let mut best: Option<((BigInt, BigInt), &ExactPoint, &ExactPoint)> = None;
        for (i, a) in sorted.iter().enumerate() {
            for b in &sorted[i + 1..] {
                if x(a) < x(b) && y(a).cmp(y(b)) == want {
                    let w = weight(a, b);
                    if best.as_ref().is_none_or(|(bw, _, _)| w < *bw) {
                        best = Some((w, *a, *b));
                    }
                }
            }
        }
        best.map(|(_, a, b)| (a, b))
    };
    let falling = simplest(Ordering::Greater);
    let rising = match (sorted.first(), sorted.last()) {
        (Some(a), Some(b)) if x(a) < x(b) && y(a) < y(b) => Some((*a, *b)),
        _ => simplest(Ordering::Less),
    };
    Ok(match (falling, rising) {
        (Some((a, b)), Some((c, d))) => GraphVerdict::exact(
            VerdictKind::CertifiedNotInjective,
            vec![a.clone(), b.clone(), c.clone(), d.clone()],
        ),
        _ => GraphVerdict::exact(VerdictKind::Inconclusive, Vec::new()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionCheck {
    pub distance: f64,
    /// `distance <= D.epsilon + source.epsilon + tol`.
    pub within_bound: bool,
}

/// Hausdorff distance between the first-factor projection of `D` and a
/// cloud of the source attractor.
pub fn projection_check(
    d: &CertifiedCloud,
    source_attractor: &CertifiedCloud,
    split: usize,
    tol: f64,
) -> Result<ProjectionCheck> {
    let projected = d.cloud.project(0..split)?;
    let distance = ifs::hausdorff_distance(&projected, &source_attractor.cloud, Metric::Euclidean)?;
    Ok(ProjectionCheck {
        distance,
        within_bound: distance <= d.epsilon + source_attractor.epsilon + tol,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedValue {
    pub y: Vec<f64>,
    pub radius: f64,
}

/// `f(x)` read off the graph cloud: the `y` block of the cloud point nearest
/// to `x` in the first factor, if it lies within `delta`.
pub fn tabulate_function(d: &CertifiedCloud, x: &[f64], split: usize, delta: f64) -> Result<TabulatedValue> {
    if x.len() != split || split >= d.cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: split,
            found: x.len(),
        });
    }
    let (best, dist) = d
        .cloud
        .points()
        .map(|p| (p, euclid(&p[..split], x)))
        .fold((None, f64::INFINITY), |acc, (p, dist)| if dist < acc.1 { (Some(p), dist) } else { acc });
    match best {
        Some(p) if dist <= delta => Ok(TabulatedValue {
            y: p[split..].to_vec(),
            radius: delta + d.epsilon,
        }),
        _ => Err(Error::NoSample { delta }),
    }
}

/// Swaps the factors of a fibred cloud. The max metric is symmetric, so the
/// error bound carries over.
pub fn transpose_cloud(d: &CertifiedCloud, split: usize) -> Result<CertifiedCloud> {
    Ok(CertifiedCloud {
        cloud: d.cloud.transpose(split)?,
        epsilon: d.epsilon,
        exact_members: transpose_points(&d.exact_members, split),
        depth: d.depth,
        grid: d.grid,
    })
}

pub fn transpose_points(points: &[ExactPoint], split: usize) -> Vec<ExactPoint> {
    points.iter().map(|p| p.swap_blocks(split)).collect()
}

/// The code map as a fibred attractor: the affine code-space model fibred
/// over the identity labelling onto `sys`. Its attractor is the graph of the
/// code map in code-space coordinates.
pub fn code_map_fibration(sys: &IfsSystem) -> Result<FibredSystem> {
    let code = code_space_system(sys.len())?;
    fibre(&code, sys, &AlphaMap::identity(sys.len()))
}

/// Cloud of exact points, for feeding exact witnesses to cloud-based checks.
pub fn exact_cloud(points: &[ExactPoint]) -> Result<PointCloud> {
    PointCloud::from_exact(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma() -> IfsSystem {
        IfsSystem::interval("gamma", &[((2, 3), (0, 1)), ((2, 3), (1, 3))]).unwrap()
    }

    fn lambda() -> IfsSystem {
        IfsSystem::interval("lambda", &[((3, 4), (0, 1)), ((3, 4), (1, 4))]).unwrap()
    }

    fn pt(a: (i64, i64), b: (i64, i64)) -> ExactPoint {
        ExactPoint::from_ratios(&[a, b])
    }

    #[test]
    fn fibred_maps_are_blockwise() {
        let fs = fibre(&gamma(), &lambda(), &AlphaMap::identity(2)).unwrap();
        assert_eq!(fs.product.len(), 2);
        let m1 = fs.product.map(1).unwrap();
        assert_eq!(m1.apply_exact(&pt((1, 1), (1, 1))), pt((2, 3), (3, 4)));
        assert!((fs.product.contraction_factor() - 0.75).abs() < 1e-15);
        assert_eq!(fs.product.metric(), Metric::Product { split: 1 });
    }

    #[test]
    fn constant_alpha_shares_second_block() {
        let fs = fibre(&gamma(), &lambda(), &AlphaMap::new(vec![1, 1], 2).unwrap()).unwrap();
        let (a, b) = (fs.product.map(1).unwrap(), fs.product.map(2).unwrap());
        let p = pt((1, 2), (1, 2));
        assert_eq!(a.apply_exact(&p).split_at(1).1, b.apply_exact(&p).split_at(1).1);
    }

    #[test]
    fn fibre_rejects_bad_tables() {
        let err = fibre(&gamma(), &lambda(), &AlphaMap::identity(3));
        assert!(matches!(err, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn exact_points_of_interval_example() {
        let fs = fibre(&gamma(), &lambda(), &AlphaMap::identity(2)).unwrap();
        let one = exact_fibred_points(&fs, 1).unwrap();
        assert!(one.contains(&pt((0, 1), (0, 1))));
        assert!(one.contains(&pt((1, 1), (1, 1))));
        let two = exact_fibred_points(&fs, 2).unwrap();
        assert!(two.contains(&pt((5, 9), (7, 16))));
        assert!(two.contains(&pt((4, 9), (9, 16))));
    }

    #[test]
    fn injected_same_x_pair_is_certified() {
        let fs = fibre(&gamma(), &gamma(), &AlphaMap::identity(2)).unwrap();
        let d = fibred_attractor(&fs, 8, 0.0).unwrap();
        let witness = vec![pt((1, 2), (0, 1)), pt((1, 2), (1, 1))];
        let v = graph_test(&d, &witness, 1, None, None).unwrap();
        assert_eq!(v.kind, VerdictKind::CertifiedNotGraph);
        assert_eq!(v.witness, witness);
    }

    #[test]
    fn diagonal_is_heuristically_a_graph() {
        let g = gamma();
        let fs = fibre(&g, &g, &AlphaMap::identity(2)).unwrap();
        let d = fibred_attractor(&fs, 12, 0.0).unwrap();
        let exact = exact_fibred_points(&fs, 2).unwrap();
        let v = graph_test(&d, &exact, 1, None, None).unwrap();
        assert_eq!(v.kind, VerdictKind::HeuristicGraph);
        assert!(v.score.unwrap() <= 2.0 * d.epsilon + v.delta.unwrap());
        assert!(matches!(
            graph_test(&d, &exact, 1, Some(d.epsilon), None),
            Err(Error::BadParams(_))
        ));
    }

    #[test]
    fn injectivity_examples() {
        let four = vec![
            pt((0, 1), (0, 1)),
            pt((1, 1), (1, 1)),
            pt((4, 9), (9, 16)),
            pt((5, 9), (7, 16)),
        ];
        let v = injectivity_test_1d(&four).unwrap();
        assert_eq!(v.kind, VerdictKind::CertifiedNotInjective);
        assert_eq!(
            v.witness,
            vec![
                pt((4, 9), (9, 16)),
                pt((5, 9), (7, 16)),
                pt((0, 1), (0, 1)),
                pt((1, 1), (1, 1)),
            ]
        );
        let diag = vec![pt((0, 1), (0, 1)), pt((1, 1), (1, 1))];
        assert_eq!(injectivity_test_1d(&diag).unwrap().kind, VerdictKind::Inconclusive);
        let down = vec![pt((0, 1), (1, 1)), pt((1, 2), (1, 2)), pt((1, 1), (0, 1))];
        assert_eq!(injectivity_test_1d(&down).unwrap().kind, VerdictKind::Inconclusive);
        let fs = fibre(&gamma(), &lambda(), &AlphaMap::identity(2)).unwrap();
        let deep = injectivity_test_1d(&exact_fibred_points(&fs, 3).unwrap()).unwrap();
        assert_eq!(deep.witness, v.witness);
        let bad = vec![ExactPoint::from_ratios(&[(0, 1), (0, 1), (0, 1)])];
        assert!(matches!(injectivity_test_1d(&bad), Err(Error::NotOneDimensional)));
    }

    #[test]
    fn line_scan_agrees_with_bucket_scan() {
        let mut rng = crate::rng::SplitMix64::new(7);
        for trial in 0..200 {
            let n = 1 + rng.next_below(60) as usize;
            let coords: Vec<f64> = (0..2 * n).map(|_| (rng.next_f64() * 8.0).floor() / 8.0).collect();
            let cloud = PointCloud::new(2, coords).unwrap();
            let delta = [0.1, 0.125, 0.3, 1.0][trial % 4];
            assert_eq!(scan_line(&cloud, delta), scan_buckets(&cloud, 1, delta), "trial {trial}");
        }
    }

    #[test]
    fn single_map_fibration_is_a_point() {
        let a = IfsSystem::interval("a", &[((1, 2), (1, 2))]).unwrap();
        let b = IfsSystem::interval("b", &[((1, 3), (2, 3))]).unwrap();
        let fs = fibre(&a, &b, &AlphaMap::identity(1)).unwrap();
        let d = fibred_attractor(&fs, 6, 0.0).unwrap();
        assert_eq!(d.cloud.coords(), &[1.0, 1.0]);
        let src = ifs::attractor_deterministic(&a, 6, 0.0).unwrap();
        let pc = projection_check(&d, &src, 1, 1e-12).unwrap();
        assert_eq!(pc.distance, 0.0);
        assert!(pc.within_bound);
        let v = tabulate_function(&d, &[0.3], 1, 1.0).unwrap();
        assert_eq!(v.y, vec![1.0]);
    }

    #[test]
    fn tabulate_on_diagonal() {
        let g = gamma();
        let fs = fibre(&g, &g, &AlphaMap::identity(2)).unwrap();
        let d = fibred_attractor(&fs, 12, 0.0).unwrap();
        let (delta, _) = default_params(d.epsilon);
        let v = tabulate_function(&d, &[0.37], 1, delta).unwrap();
        assert!((v.y[0] - 0.37).abs() <= v.radius);
        assert!(matches!(
            tabulate_function(&d, &[5.0], 1, delta),
            Err(Error::NoSample { .. })
        ));
    }
}
