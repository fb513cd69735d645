//! Certified attractors, fibred systems and morphism search for hyperbolic
//! affine iterated function systems.
//!
//! All map coefficients are exact rationals. Attractors are approximated by
//! finite point clouds carrying a rigorous Hausdorff error bound, and the
//! question "is there a morphism `(f, alpha)` between two systems?" is
//! reduced to asking whether the attractor of the system fibred over `alpha`
//! is the graph of a function. Refutations come with exact rational
//! witnesses; affirmative answers are heuristic and reported as such.
//!
//! Module map:
//!
//! - [`exact`]: rational scalars, points, matrices, norm bounds, fixed points.
//! - [`ifs`]: systems, point clouds, Hutchinson operator, Hausdorff distance,
//!   certified attractors, chaos game.
//! - [`morphism`]: morphisms, code space, code map, lifting to code space.
//! - [`fibred`]: fibred product systems and graph/injectivity tests.
//! - [`search`]: enumeration of label maps and morphism/conjugacy search.
//! - [`files`]: system description files, reports, CSV and PGM output.

pub mod error;
pub mod exact;
pub mod fibred;
pub mod files;
pub mod ifs;
pub mod morphism;
pub mod rng;
pub mod search;

pub use error::{Error, Result};
pub use exact::{ExactMatrix, ExactPoint, ExactScalar};
pub use fibred::{FibredSystem, GraphVerdict, VerdictKind};
pub use ifs::{AffineContraction, BoundKind, CertifiedCloud, IfsSystem, Metric, PointCloud};
pub use morphism::{AlphaMap, MorphismSpec, PointMap, Word};
pub use search::{SearchParams, SearchReport};
