use rayon::prelude::*;

use super::Metric;
use crate::error::{Error, Result};
use crate::exact::ExactPoint;

/// Non-empty finite set of points in ℝⁿ, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ShapeMismatch("zero-dimensional cloud".into()));
        }
        if coords.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptyCloud)?.as_ref().len();
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    pub fn from_exact(points: &[ExactPoint]) -> Result<Self> {
        let pts: Vec<Vec<f64>> = points.iter().map(ExactPoint::to_f64).collect();
        Self::from_points(&pts)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Keeps coordinates `range` of every point (duplicates are kept).
    pub fn project(&self, range: std::ops::Range<usize>) -> Result<PointCloud> {
        if range.end > self.dim || range.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "cannot project {}-dimensional cloud onto {range:?}",
                self.dim
            )));
        }
        let coords = self
            .points()
            .flat_map(|p| p[range.clone()].iter().copied())
            .collect();
        PointCloud::new(range.len(), coords)
    }

    /// `(x, y) -> (y, x)` where `x` holds the first `split` coordinates.
    pub fn transpose(&self, split: usize) -> Result<PointCloud> {
        if split == 0 || split >= self.dim {
            return Err(Error::ShapeMismatch(format!(
                "split {split} invalid for dimension {}",
                self.dim
            )));
        }
        let coords = self
            .points()
            .flat_map(|p| p[split..].iter().chain(&p[..split]).copied())
            .collect();
        PointCloud::new(self.dim, coords)
    }
}

/// A cloud together with a proven bound on its Hausdorff distance to the
/// attractor, and points known to lie exactly on the attractor.
///
/// `epsilon` is `f64::INFINITY` when the cloud was built from declared
/// (uncertified) Lipschitz bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedCloud {
    pub cloud: PointCloud,
    pub epsilon: f64,
    pub exact_members: Vec<ExactPoint>,
    pub depth: usize,
    pub grid: f64,
}

impl CertifiedCloud {
    pub fn is_certified(&self) -> bool {
        self.epsilon.is_finite()
    }
}

pub fn distance_to_cloud(p: &[f64], cloud: &PointCloud, metric: Metric) -> f64 {
    cloud
        .points()
        .map(|q| metric.distance(p, q))
        .fold(f64::INFINITY, f64::min)
}

/// `sup_{a ∈ A} inf_{b ∈ B} d(a, b)`, brute force.
pub fn directed_hausdorff(a: &PointCloud, b: &PointCloud, metric: Metric) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(a
        .coords
        .par_chunks_exact(a.dim)
        .map(|p| distance_to_cloud(p, b, metric))
        .reduce(|| 0.0, f64::max))
}

/// Hausdorff distance between two finite clouds under `metric`.
pub fn hausdorff_distance(a: &PointCloud, b: &PointCloud, metric: Metric) -> Result<f64> {
    Ok(directed_hausdorff(a, b, metric)?.max(directed_hausdorff(b, a, metric)?))
}
