//! Hyperbolic affine iterated function systems.
//!
//! An [`IfsSystem`] is an ordered, labelled family of [`AffineContraction`]s
//! on ℝⁿ. Labels are `1..=N` in insertion order. Each contraction carries a
//! Lipschitz bound that is either *certified* (derived from the exact linear
//! part) or *declared* by the user; only certified bounds feed error
//! certificates.

mod attractor;
mod cloud;

pub use attractor::{
    approximate_attractor, attractor_deterministic, backward_invariance_check, chaos_game,
    diameter_upper_bound, fixed_point_orbits, hutchinson_apply, interval_attractor_1d, snap_to_grid,
    BackwardInvariance,
};
pub use cloud::{directed_hausdorff, distance_to_cloud, hausdorff_distance, CertifiedCloud, PointCloud};

use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, affine_fixed_point, ExactMatrix, ExactPoint};
use crate::rng::SplitMix64;

/// Number of random point pairs used to spot-check a declared bound.
pub const DECLARED_SPOT_CHECKS: usize = 10_000;
const SPOT_CHECK_SEED: u64 = 0x1F5_C0DE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Certified,
    Declared,
}

/// Metric on the ambient space.
///
/// `Product { split }` is the max of the Euclidean distances on the first
/// `split` coordinates and on the remaining ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Product { split: usize },
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Metric::Euclidean => euclid(a, b),
            Metric::Product { split } => {
                euclid(&a[..split], &b[..split]).max(euclid(&a[split..], &b[split..]))
            }
        }
    }

    /// Distance between exact points, rounded toward +inf.
    pub fn exact_distance_up(&self, a: &ExactPoint, b: &ExactPoint) -> f64 {
        let d = a.sub(b);
        match *self {
            Metric::Euclidean => d.norm_up(),
            Metric::Product { split } => {
                let (x, y) = d.split_at(split);
                x.norm_up().max(y.norm_up())
            }
        }
    }

    /// Upper bound on the diameter of a half-open grid cell of side `delta`
    /// in dimension `dim`.
    pub fn cell_diameter(&self, dim: usize, delta: f64) -> f64 {
        let widest = match *self {
            Metric::Euclidean => dim,
            Metric::Product { split } => split.max(dim - split),
        };
        (delta * (widest as f64).sqrt()).next_up()
    }
}

/// `x -> Qx + b` with a Lipschitz bound `< 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineContraction {
    linear: ExactMatrix,
    translation: ExactPoint,
    lipschitz: f64,
    bound_kind: BoundKind,
    label: usize,
    linear_f64: Vec<f64>,
    translation_f64: Vec<f64>,
}

impl AffineContraction {
    /// Certified contraction: the bound is [`ExactMatrix::operator_norm_upper`].
    pub fn new(linear: ExactMatrix, translation: ExactPoint) -> Result<Self> {
        check_shapes(&linear, &translation)?;
        let bound = linear.operator_norm_upper();
        Self::with_bound(linear, translation, bound, BoundKind::Certified)
    }

    /// Contraction with a user-declared Lipschitz constant.
    ///
    /// The constant is spot-checked on [`DECLARED_SPOT_CHECKS`] random point
    /// pairs; a violation is an error. Declared constants never feed
    /// certified error bounds.
    pub fn with_declared_bound(
        linear: ExactMatrix,
        translation: ExactPoint,
        declared: &BigRational,
    ) -> Result<Self> {
        check_shapes(&linear, &translation)?;
        let bound = exact::f64_up(declared);
        if declared.is_negative() {
            return Err(Error::BadParams("declared Lipschitz bound is negative".into()));
        }
        let map = Self::with_bound(linear, translation, bound, BoundKind::Declared)?;
        map.spot_check(bound)?;
        Ok(map)
    }

    pub(crate) fn with_bound(
        linear: ExactMatrix,
        translation: ExactPoint,
        lipschitz: f64,
        bound_kind: BoundKind,
    ) -> Result<Self> {
        check_shapes(&linear, &translation)?;
        if !(lipschitz < 1.0) {
            return Err(Error::NotContractive {
                label: 1,
                bound: lipschitz,
            });
        }
        let linear_f64 = linear.to_f64();
        let translation_f64 = translation.to_f64();
        Ok(Self {
            linear,
            translation,
            lipschitz,
            bound_kind,
            label: 1,
            linear_f64,
            translation_f64,
        })
    }

    fn spot_check(&self, bound: f64) -> Result<()> {
        let n = self.dimension();
        let mut rng = SplitMix64::new(SPOT_CHECK_SEED);
        let mut diff = vec![0.0; n];
        let mut worst: f64 = 0.0;
        for _ in 0..DECLARED_SPOT_CHECKS {
            for d in diff.iter_mut() {
                // difference of two points drawn from [-1, 1]^n
                *d = 2.0 * rng.next_f64() - 2.0 * rng.next_f64();
            }
            let len = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            if len == 0.0 {
                continue;
            }
            let image = self.apply_linear(&diff);
            let ratio = image.iter().map(|d| d * d).sum::<f64>().sqrt() / len;
            worst = worst.max(ratio);
        }
        if worst > bound * (1.0 + 1e-12) {
            return Err(Error::DeclaredBoundViolated {
                label: self.label,
                declared: bound,
                observed: worst,
            });
        }
        Ok(())
    }

    pub fn linear(&self) -> &ExactMatrix {
        &self.linear
    }

    pub fn translation(&self) -> &ExactPoint {
        &self.translation
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    pub fn bound_kind(&self) -> BoundKind {
        self.bound_kind
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn dimension(&self) -> usize {
        self.translation.dim()
    }

    fn apply_linear(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        (0..n)
            .map(|i| {
                self.linear_f64[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Double-precision evaluation, writing into `out`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dimension();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.linear_f64[i * n..(i + 1) * n];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.translation_f64[i];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_exact(&self, x: &ExactPoint) -> ExactPoint {
        self.linear.mul_vec(x).add(&self.translation)
    }

    pub fn fixed_point(&self) -> Result<ExactPoint> {
        affine_fixed_point(&self.linear, &self.translation)
    }

    /// Affine parts of `self ∘ inner`.
    pub fn compose_affine(&self, inner: (&ExactMatrix, &ExactPoint)) -> (ExactMatrix, ExactPoint) {
        let (q, b) = inner;
        (
            self.linear.mul(q),
            self.linear.mul_vec(b).add(&self.translation),
        )
    }

    /// `(x, y) -> (self(x), other(y))`, with bound `max` of the two; the
    /// result is a contraction for the product (max) metric.
    pub fn block_product(&self, other: &AffineContraction) -> Result<AffineContraction> {
        let kind = if self.bound_kind == BoundKind::Certified
            && other.bound_kind == BoundKind::Certified
        {
            BoundKind::Certified
        } else {
            BoundKind::Declared
        };
        AffineContraction::with_bound(
            self.linear.block_diag(&other.linear),
            self.translation.concat(&other.translation),
            self.lipschitz.max(other.lipschitz),
            kind,
        )
    }

    fn same_map(&self, other: &AffineContraction) -> bool {
        self.linear == other.linear && self.translation == other.translation
    }
}

fn check_shapes(linear: &ExactMatrix, translation: &ExactPoint) -> Result<()> {
    if !linear.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "linear part is {}x{}, expected square",
            linear.rows(),
            linear.cols()
        )));
    }
    if linear.rows() != translation.dim() {
        return Err(Error::DimensionMismatch {
            expected: linear.rows(),
            found: translation.dim(),
        });
    }
    if linear.rows() == 0 {
        return Err(Error::ShapeMismatch("zero-dimensional map".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct IfsSystem {
    name: String,
    dimension: usize,
    maps: Vec<AffineContraction>,
    contraction: f64,
    metric: Metric,
}

impl IfsSystem {
    /// Euclidean system. Maps are relabelled `1..=N` in order.
    pub fn new(name: impl Into<String>, maps: Vec<AffineContraction>) -> Result<Self> {
        Self::with_metric(name, maps, Metric::Euclidean)
    }

    pub fn with_metric(
        name: impl Into<String>,
        mut maps: Vec<AffineContraction>,
        metric: Metric,
    ) -> Result<Self> {
        let first = maps.first().ok_or(Error::EmptySystem)?;
        let dimension = first.dimension();
        for (i, m) in maps.iter_mut().enumerate() {
            if m.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: m.dimension(),
                });
            }
            m.label = i + 1;
            if !(m.lipschitz < 1.0) {
                return Err(Error::NotContractive {
                    label: m.label,
                    bound: m.lipschitz,
                });
            }
            if let Metric::Product { split } = metric {
                // spectral bounds only transfer to the max metric blockwise
                if !m.linear.is_block_diagonal(split) {
                    return Err(Error::ShapeMismatch(format!(
                        "map {} is not block diagonal for split {split}",
                        m.label
                    )));
                }
            }
        }
        let contraction = maps.iter().map(|m| m.lipschitz).fold(0.0, f64::max);
        Ok(Self {
            name: name.into(),
            dimension,
            maps,
            contraction,
            metric,
        })
    }

    /// Convenience constructor for one-dimensional systems `x -> s x + t`
    /// given as `((s_num, s_den), (t_num, t_den))`.
    pub fn interval(name: impl Into<String>, maps: &[((i64, i64), (i64, i64))]) -> Result<Self> {
        let maps = maps
            .iter()
            .map(|&(s, t)| {
                AffineContraction::new(
                    ExactMatrix::from_ratios(&[&[s]])?,
                    ExactPoint::from_ratios(&[t]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, maps)
    }

    /// All maps `γ × γ'` (first factor major), under the product metric.
    pub fn product(a: &IfsSystem, b: &IfsSystem) -> Result<IfsSystem> {
        let mut maps = Vec::with_capacity(a.len() * b.len());
        for g in &a.maps {
            for h in &b.maps {
                maps.push(g.block_product(h)?);
            }
        }
        IfsSystem::with_metric(
            format!("{} x {}", a.name, b.name),
            maps,
            Metric::Product {
                split: a.dimension,
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn maps(&self) -> &[AffineContraction] {
        &self.maps
    }

    /// Map with the given 1-based label.
    pub fn map(&self, label: usize) -> Option<&AffineContraction> {
        label.checked_sub(1).and_then(|i| self.maps.get(i))
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Global contraction factor `c = max c_γ`.
    pub fn contraction_factor(&self) -> f64 {
        self.contraction
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn is_certified(&self) -> bool {
        self.maps
            .iter()
            .all(|m| m.bound_kind == BoundKind::Certified)
    }

    /// Same ambient space and the same maps in the same order.
    pub fn same_maps(&self, other: &IfsSystem) -> bool {
        self.dimension == other.dimension
            && self.maps.len() == other.maps.len()
            && self.maps.iter().zip(&other.maps).all(|(a, b)| a.same_map(b))
    }

    /// Exact image of a finite set under the Hutchinson operator, duplicates
    /// removed, order of first appearance kept.
    pub fn hutchinson_exact(&self, points: &[ExactPoint]) -> Vec<ExactPoint> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for m in &self.maps {
            for p in points {
                let q = m.apply_exact(p);
                if seen.insert(q.clone()) {
                    out.push(q);
                }
            }
        }
        out
    }

    /// Exact `γ_{w_1} ∘ ... ∘ γ_{w_k}` as an affine pair.
    pub fn word_affine(&self, word: &[usize]) -> Result<(ExactMatrix, ExactPoint)> {
        let mut acc = (
            ExactMatrix::identity(self.dimension),
            ExactPoint::zeros(self.dimension),
        );
        for &letter in word.iter().rev() {
            let m = self.map(letter).ok_or(Error::InvalidLabel {
                label: letter,
                size: self.len(),
            })?;
            acc = m.compose_affine((&acc.0, &acc.1));
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex46_gamma() -> IfsSystem {
        IfsSystem::interval("gamma", &[((2, 3), (0, 1)), ((2, 3), (1, 3))]).unwrap()
    }

    #[test]
    fn labels_and_contraction_factor() {
        let sys = ex46_gamma();
        assert_eq!(sys.len(), 2);
        assert_eq!(sys.map(1).unwrap().label(), 1);
        assert_eq!(sys.map(2).unwrap().label(), 2);
        assert!(sys.map(0).is_none() && sys.map(3).is_none());
        assert!((sys.contraction_factor() - 2.0 / 3.0).abs() < 1e-15);
        assert!(sys.contraction_factor() >= 2.0 / 3.0);
        assert!(sys.is_certified());
    }

    #[test]
    fn rejects_non_contractions_and_empty_systems() {
        assert!(matches!(
            IfsSystem::interval("bad", &[((1, 1), (0, 1))]),
            Err(Error::NotContractive { .. })
        ));
        assert!(matches!(IfsSystem::new("e", vec![]), Err(Error::EmptySystem)));
    }

    #[test]
    fn fixed_point_is_reproduced_exactly() {
        for m in ex46_gamma().maps() {
            let fp = m.fixed_point().unwrap();
            assert_eq!(m.apply_exact(&fp), fp);
        }
    }

    #[test]
    fn declared_bounds_are_spot_checked() {
        let lin = ExactMatrix::from_ratios(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)]]).unwrap();
        let t = ExactPoint::zeros(2);
        let ok = AffineContraction::with_declared_bound(lin.clone(), t.clone(), &"3/5".parse().unwrap())
            .unwrap();
        assert_eq!(ok.bound_kind(), BoundKind::Declared);
        assert!(matches!(
            AffineContraction::with_declared_bound(lin, t, &"1/3".parse().unwrap()),
            Err(Error::DeclaredBoundViolated { .. })
        ));
    }

    #[test]
    fn word_affine_composes_left_to_right() {
        let sys = ex46_gamma();
        // γ1 ∘ γ2 (x) = 4x/9 + 2/9
        let (q, b) = sys.word_affine(&[1, 2]).unwrap();
        assert_eq!(q, ExactMatrix::from_ratios(&[&[(4, 9)]]).unwrap());
        assert_eq!(b, ExactPoint::from_ratios(&[(2, 9)]));
        assert!(sys.word_affine(&[3]).is_err());
    }

    #[test]
    fn product_system_uses_max_metric() {
        let g = ex46_gamma();
        let p = IfsSystem::product(&g, &g).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.metric(), Metric::Product { split: 1 });
        assert_eq!(p.dimension(), 2);
        let d = p.metric().distance(&[0.0, 0.0], &[3.0, 4.0]);
        assert_eq!(d, 4.0);
    }
}
