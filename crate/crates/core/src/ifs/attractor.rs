//! Hutchinson iteration, certified attractor clouds and the chaos game.

use std::collections::HashSet;

use num_rational::BigRational;

use super::{directed_hausdorff, CertifiedCloud, IfsSystem, PointCloud};
use crate::error::{Error, Result};
use crate::exact::ExactPoint;
use crate::rng::SplitMix64;

/// Upper limit on the number of exact attractor members collected while
/// building a deterministic cloud.
pub const EXACT_MEMBER_CAP: usize = 4096;

fn check_dim(sys: &IfsSystem, cloud: &PointCloud) -> Result<()> {
    if sys.dimension() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dimension(),
            found: cloud.dim(),
        });
    }
    Ok(())
}

fn bits_key(p: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 are the same point
    p.iter().map(|&x| (x + 0.0).to_bits()).collect()
}

/// `Γ(K) = ⋃ γ(K)` on a finite cloud, dropping exact duplicates.
///
/// Output order is map-major (all of `γ_1(K)`, then `γ_2(K)`, ...), keeping
/// the first occurrence of each point.
pub fn hutchinson_apply(sys: &IfsSystem, cloud: &PointCloud) -> Result<PointCloud> {
    check_dim(sys, cloud)?;
    let n = sys.dimension();
    let mut seen = HashSet::with_capacity(cloud.len() * sys.len());
    let mut coords = Vec::with_capacity(cloud.coords().len() * sys.len());
    let mut buf = vec![0.0; n];
    for map in sys.maps() {
        for p in cloud.points() {
            map.apply_into(p, &mut buf);
            if seen.insert(bits_key(&buf)) {
                coords.extend_from_slice(&buf);
            }
        }
    }
    PointCloud::new(n, coords)
}

/// Keeps the first point seen in each half-open cell `floor(x / delta)`.
pub fn snap_to_grid(cloud: &PointCloud, delta: f64) -> PointCloud {
    let mut seen = HashSet::with_capacity(cloud.len());
    let mut coords = Vec::with_capacity(cloud.coords().len());
    for p in cloud.points() {
        let cell: Vec<i64> = p.iter().map(|x| (x / delta).floor() as i64).collect();
        if seen.insert(cell) {
            coords.extend_from_slice(p);
        }
    }
    PointCloud::new(cloud.dim(), coords).expect("a non-empty cloud keeps at least one point")
}

/// `max_γ d(x*, γ(x*))` for the fixed point `x*` of map 1, computed exactly
/// and rounded up.
fn seed_displacement(sys: &IfsSystem, seed: &ExactPoint) -> f64 {
    sys.maps()
        .iter()
        .map(|m| sys.metric().exact_distance_up(seed, &m.apply_exact(seed)))
        .fold(0.0, f64::max)
}

fn lower_one_minus(c: f64) -> f64 {
    (1.0 - c).next_down()
}

fn exact_orbit_levels(sys: &IfsSystem, seed: &ExactPoint, depth: usize) -> Vec<ExactPoint> {
    let mut seen: HashSet<ExactPoint> = HashSet::new();
    let mut all = vec![seed.clone()];
    seen.insert(seed.clone());
    let mut level = vec![seed.clone()];
    for _ in 0..depth {
        if all.len() + level.len() * sys.len() > EXACT_MEMBER_CAP {
            break;
        }
        let next: Vec<ExactPoint> = sys
            .hutchinson_exact(&level)
            .into_iter()
            .filter(|p| seen.insert(p.clone()))
            .collect();
        if next.is_empty() {
            break;
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    all
}

/// Deterministic attractor approximation with a certified Hausdorff bound.
///
/// Starts from `K₀ = {x*}` (the exact fixed point of map 1), applies the
/// Hutchinson operator `depth` times and, if `grid > 0`, snaps to a grid of
/// cell size `grid` after each step. The bound is
///
/// ```text
/// epsilon = c^k · d_H(K₀, Γ(K₀)) / (1 − c) + ρ / (1 − c)
/// ```
///
/// where `ρ` is the metric diameter of a grid cell (`grid` itself in one
/// dimension and on products of lines). Floating-point evaluation error of
/// the iterates is not included.
pub fn attractor_deterministic(sys: &IfsSystem, depth: usize, grid: f64) -> Result<CertifiedCloud> {
    if !sys.is_certified() {
        return Err(Error::UncertifiedBound);
    }
    approximate_attractor(sys, depth, grid)
}

/// Like [`attractor_deterministic`] but accepts declared bounds, in which
/// case `epsilon` is infinite.
pub fn approximate_attractor(sys: &IfsSystem, depth: usize, grid: f64) -> Result<CertifiedCloud> {
    if !(grid >= 0.0) || !grid.is_finite() {
        return Err(Error::BadParams(format!("grid size {grid} must be finite and >= 0")));
    }
    let seed = sys.maps()[0].fixed_point()?;
    let mut cloud = PointCloud::new(sys.dimension(), seed.to_f64())?;
    for _ in 0..depth {
        cloud = hutchinson_apply(sys, &cloud)?;
        if grid > 0.0 {
            cloud = snap_to_grid(&cloud, grid);
        }
    }

    let epsilon = if sys.is_certified() {
        let c = sys.contraction_factor();
        let denom = lower_one_minus(c);
        let ck = c.powi(depth as i32) * (1.0 + 4.0 * depth as f64 * f64::EPSILON);
        let mut eps = (ck * seed_displacement(sys, &seed) / denom).next_up();
        if grid > 0.0 {
            let rho = sys.metric().cell_diameter(sys.dimension(), grid);
            eps = (eps + (rho / denom).next_up()).next_up();
        }
        eps
    } else {
        f64::INFINITY
    };

    Ok(CertifiedCloud {
        cloud,
        epsilon,
        exact_members: exact_orbit_levels(sys, &seed, depth),
        depth,
        grid,
    })
}

/// `Γ^depth` applied to the fixed points of every map. Each point is an image
/// of an attractor member, so the cloud lies in the attractor up to rounding.
pub fn fixed_point_orbits(sys: &IfsSystem, depth: usize) -> Result<PointCloud> {
    let mut coords = Vec::with_capacity(sys.len() * sys.dimension());
    for m in sys.maps() {
        coords.extend(m.fixed_point()?.to_f64());
    }
    let mut cloud = PointCloud::new(sys.dimension(), coords)?;
    for _ in 0..depth {
        cloud = hutchinson_apply(sys, &cloud)?;
    }
    Ok(cloud)
}

/// Random-orbit approximation of the attractor.
///
/// Starts at the fixed point of map 1 and applies maps chosen uniformly with
/// [`SplitMix64`] seeded by `seed`. The first `burn_in` iterates are dropped;
/// the next `n_points` are returned (duplicates kept).
pub fn chaos_game(sys: &IfsSystem, seed: u64, n_points: usize, burn_in: usize) -> Result<PointCloud> {
    if n_points == 0 {
        return Err(Error::BadParams("n_points must be at least 1".into()));
    }
    let n = sys.dimension();
    let mut rng = SplitMix64::new(seed);
    let mut x = sys.maps()[0].fixed_point()?.to_f64();
    let mut next = vec![0.0; n];
    let mut coords = Vec::with_capacity(n_points * n);
    for step in 0..burn_in + n_points {
        let map = &sys.maps()[rng.next_below(sys.len())];
        map.apply_into(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        if step >= burn_in {
            coords.extend_from_slice(&x);
        }
    }
    PointCloud::new(n, coords)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackwardInvariance {
    pub holds: bool,
    pub deficit: f64,
}

/// Measures how far `K ⊆ Γ(K)` is from holding: `sup_{x ∈ K} d(x, Γ(K))`.
pub fn backward_invariance_check(
    cloud: &PointCloud,
    sys: &IfsSystem,
    tol: f64,
) -> Result<BackwardInvariance> {
    let image = hutchinson_apply(sys, cloud)?;
    let deficit = directed_hausdorff(cloud, &image, sys.metric())?;
    Ok(BackwardInvariance {
        holds: deficit <= tol,
        deficit,
    })
}

/// `2 · max_γ d(x*, γ(x*)) / (1 − c)`; the attractor lies in the ball of
/// half that radius about `x*`, the fixed point of map 1.
pub fn diameter_upper_bound(sys: &IfsSystem) -> Result<f64> {
    if !sys.is_certified() {
        return Err(Error::UncertifiedBound);
    }
    let seed = sys.maps()[0].fixed_point()?;
    let disp = seed_displacement(sys, &seed);
    if disp == 0.0 {
        return Ok(0.0);
    }
    let denom = lower_one_minus(sys.contraction_factor());
    Ok((2.0 * disp / denom).next_up())
}

/// For a one-dimensional system, returns the exact endpoints `[a, b]` when
/// the attractor is certified to be that whole interval.
///
/// The convex hull `[a, b]` of the attractor satisfies `a = min γ(a|b)` and
/// `b = max γ(a|b)`, so both endpoints are fixed points or images of fixed
/// points of words of length at most two. The hull is the smallest candidate
/// interval mapped into itself. If the images `γ([a, b])` cover `[a, b]` the
/// interval is backward invariant, hence contained in the attractor.
pub fn interval_attractor_1d(sys: &IfsSystem) -> Option<(BigRational, BigRational)> {
    if sys.dimension() != 1 {
        return None;
    }
    let eval = |label: usize, x: &BigRational| -> BigRational {
        let m = sys.map(label).expect("label in range");
        &m.linear().entries()[0] * x + &m.translation().coords()[0]
    };
    let fixed = |word: &[usize]| -> Option<BigRational> {
        let (q, b) = sys.word_affine(word).ok()?;
        crate::exact::affine_fixed_point(&q, &b)
            .ok()
            .map(|p| p.coords()[0].clone())
    };

    let labels: Vec<usize> = (1..=sys.len()).collect();
    let mut candidates = Vec::new();
    for &i in &labels {
        let fi = fixed(&[i])?;
        for &j in &labels {
            let fj = fixed(&[j])?;
            candidates.push((fi.clone(), fj.clone()));
            candidates.push((fi.clone(), eval(j, &fi)));
            candidates.push((eval(i, &fj), fj));
            let a = fixed(&[i, j])?;
            let b = eval(j, &a);
            candidates.push((a, b));
        }
    }

    let invariant = |(a, b): &(BigRational, BigRational)| {
        a <= b
            && labels.iter().all(|&l| {
                let (u, v) = (eval(l, a), eval(l, b));
                &u >= a && &u <= b && &v >= a && &v <= b
            })
    };
    let mut lo: Option<BigRational> = None;
    let mut hi: Option<BigRational> = None;
    for (a, b) in candidates.iter().filter(|c| invariant(c)) {
        if lo.as_ref().is_none_or(|l| a > l) {
            lo = Some(a.clone());
        }
        if hi.as_ref().is_none_or(|h| b < h) {
            hi = Some(b.clone());
        }
    }
    let (lo, hi) = (lo?, hi?);

    let mut pieces: Vec<(BigRational, BigRational)> = labels
        .iter()
        .map(|&l| {
            let (u, v) = (eval(l, &lo), eval(l, &hi));
            if u <= v { (u, v) } else { (v, u) }
        })
        .collect();
    pieces.sort();
    let mut reach = lo.clone();
    for (u, v) in &pieces {
        if *u > reach {
            return None;
        }
        if *v > reach {
            reach = v.clone();
        }
    }
    (reach >= hi).then_some((lo, hi))
}
