//! Exact rational arithmetic for map coefficients and witnesses.
//!
//! Scalars are [`BigRational`]s, always kept in lowest terms with a positive
//! denominator by `num-rational`. Conversions to `f64` come in three flavours
//! (nearest, toward +inf, toward -inf) so that norm bounds and error terms
//! can be rounded outward.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type ExactScalar = BigRational;

/// Parses `-?[0-9]+(/[0-9]+)?` into a rational. Zero denominators are rejected.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidRational(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let digits = num.strip_prefix('-').unwrap_or(num);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let numer: BigInt = num.parse().map_err(|_| bad())?;
    let denom: BigInt = match den {
        Some(d) => {
            if d.is_empty() || !d.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            d.parse().map_err(|_| bad())?
        }
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(numer, denom))
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn rational_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact rational value of a finite double.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn f64_nearest(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Smallest double `>= r`.
pub fn f64_up(r: &BigRational) -> f64 {
    let x = f64_nearest(r);
    if !x.is_finite() {
        return x;
    }
    match rational_from_f64(x) {
        Some(q) if q < *r => x.next_up(),
        _ => x,
    }
}

/// Largest double `<= r`.
pub fn f64_down(r: &BigRational) -> f64 {
    let x = f64_nearest(r);
    if !x.is_finite() {
        return x;
    }
    match rational_from_f64(x) {
        Some(q) if q > *r => x.next_down(),
        _ => x,
    }
}

/// Smallest double `>= sqrt(r)` for `r >= 0`.
pub fn sqrt_up(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let s = f64_up(r).sqrt();
    if !s.is_finite() {
        return s;
    }
    match rational_from_f64(s) {
        Some(q) if &q * &q >= *r => s,
        _ => s.next_up(),
    }
}

/// A point of ℝⁿ with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactPoint {
    coords: Vec<BigRational>,
}

impl ExactPoint {
    pub fn new(coords: Vec<BigRational>) -> Self {
        Self { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![BigRational::zero(); dim])
    }

    /// Convenience constructor from `(numerator, denominator)` pairs.
    pub fn from_ratios(pairs: &[(i64, i64)]) -> Self {
        Self::new(
            pairs
                .iter()
                .map(|&(p, q)| BigRational::new(p.into(), q.into()))
                .collect(),
        )
    }

    pub fn parse(parts: &[&str]) -> Result<Self> {
        parts
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    /// Exact conversion of a finite double vector.
    pub fn from_f64(xs: &[f64]) -> Option<Self> {
        xs.iter()
            .map(|&x| rational_from_f64(x))
            .collect::<Option<Vec<_>>>()
            .map(Self::new)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<BigRational> {
        self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(f64_nearest).collect()
    }

    /// Splits into the first `at` coordinates and the rest.
    pub fn split_at(&self, at: usize) -> (ExactPoint, ExactPoint) {
        let (a, b) = self.coords.split_at(at);
        (Self::new(a.to_vec()), Self::new(b.to_vec()))
    }

    pub fn concat(&self, other: &ExactPoint) -> ExactPoint {
        let mut coords = self.coords.clone();
        coords.extend(other.coords.iter().cloned());
        Self::new(coords)
    }

    /// `(x, y) -> (y, x)` where `x` holds the first `split` coordinates.
    pub fn swap_blocks(&self, split: usize) -> ExactPoint {
        let (x, y) = self.split_at(split);
        y.concat(&x)
    }

    pub fn sub(&self, other: &ExactPoint) -> ExactPoint {
        assert_eq!(self.dim(), other.dim(), "point dimensions differ");
        Self::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn add(&self, other: &ExactPoint) -> ExactPoint {
        assert_eq!(self.dim(), other.dim(), "point dimensions differ");
        Self::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Exact squared Euclidean norm.
    pub fn norm_sq(&self) -> BigRational {
        self.coords
            .iter()
            .fold(BigRational::zero(), |acc, c| acc + c * c)
    }

    /// Upper bound (rounded toward +inf) on the Euclidean norm.
    pub fn norm_up(&self) -> f64 {
        sqrt_up(&self.norm_sq())
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coords.iter().map(rational_to_string).collect()
    }
}

impl fmt::Display for ExactPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", rational_to_string(c))?;
        }
        write!(f, ")")
    }
}

impl Serialize for ExactPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExactPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let parts = Vec::<String>::deserialize(deserializer)?;
        parts
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()
            .map(ExactPoint::new)
            .map_err(serde::de::Error::custom)
    }
}

/// Dense row-major rational matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigRational>,
}

impl ExactMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigRational>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                expected: c,
                found: bad.len(),
            });
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Builds a matrix from `(numerator, denominator)` pairs, row by row.
    pub fn from_ratios(rows: &[&[(i64, i64)]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|row| {
                    row.iter()
                        .map(|&(p, q)| BigRational::new(p.into(), q.into()))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigRational::one();
        }
        m
    }

    /// `diag(s, ..., s)`.
    pub fn scalar(n: usize, s: BigRational) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = s.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(f64_nearest).collect()
    }

    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(rational_to_string).collect())
            .collect()
    }

    /// Matrix-vector product.
    ///
    /// # Panics
    ///
    /// If `v.dim() != self.cols()`.
    pub fn mul_vec(&self, v: &ExactPoint) -> ExactPoint {
        assert_eq!(v.dim(), self.cols, "matrix/vector dimensions differ");
        ExactPoint::new(
            (0..self.rows)
                .map(|i| {
                    self.row(i)
                        .iter()
                        .zip(v.coords())
                        .fold(BigRational::zero(), |acc, (a, x)| acc + a * x)
                })
                .collect(),
        )
    }

    /// Matrix product `self * other`.
    ///
    /// # Panics
    ///
    /// If the inner dimensions differ.
    pub fn mul(&self, other: &ExactMatrix) -> ExactMatrix {
        assert_eq!(self.cols, other.rows, "inner matrix dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.entries[idx] = &out.entries[idx] + a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &ExactMatrix) -> ExactMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ExactMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `[[self, 0], [0, other]]`.
    pub fn block_diag(&self, other: &ExactMatrix) -> ExactMatrix {
        let rows = self.rows + other.rows;
        let cols = self.cols + other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[i * cols + j] = self.get(i, j).clone();
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out.entries[(self.rows + i) * cols + self.cols + j] = other.get(i, j).clone();
            }
        }
        out
    }

    /// True when every entry coupling the leading `split` coordinates with the
    /// trailing ones is zero.
    pub fn is_block_diagonal(&self, split: usize) -> bool {
        if !self.is_square() || split > self.rows {
            return false;
        }
        (0..self.rows).all(|i| {
            (0..self.cols).all(|j| (i < split) == (j < split) || self.get(i, j).is_zero())
        })
    }

    fn max_abs_row_sum(&self) -> BigRational {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .fold(BigRational::zero(), |acc, a| acc + a.abs())
            })
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    fn max_abs_col_sum(&self) -> BigRational {
        (0..self.cols)
            .map(|j| {
                (0..self.rows).fold(BigRational::zero(), |acc, i| acc + self.get(i, j).abs())
            })
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    /// Upper bound on the spectral norm (the Euclidean Lipschitz constant of
    /// `x -> Qx`), rounded toward +inf.
    ///
    /// Returns the smaller of the Frobenius norm and `sqrt(|Q|_1 * |Q|_inf)`.
    /// The induced 1- and inf-norms alone are not upper bounds for the
    /// spectral norm (`[[1, 1], [0, 0]]` has `|Q|_1 = 1 < sqrt 2`), so they
    /// only enter through the geometric mean.
    pub fn operator_norm_upper(&self) -> f64 {
        let frobenius_sq = self
            .entries
            .iter()
            .fold(BigRational::zero(), |acc, a| acc + a * a);
        let mixed = self.max_abs_row_sum() * self.max_abs_col_sum();
        sqrt_up(&frobenius_sq).min(sqrt_up(&mixed))
    }

    /// Exact rank by fraction-free elimination over the rationals.
    pub fn rank(&self) -> usize {
        let mut m: Vec<Vec<BigRational>> = (0..self.rows).map(|i| self.row(i).to_vec()).collect();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..self.rows).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(rank, p);
            let pivot = m[rank][col].clone();
            for r in rank + 1..self.rows {
                if m[r][col].is_zero() {
                    continue;
                }
                let factor = &m[r][col] / &pivot;
                for c in col..self.cols {
                    let v = &m[rank][c] * &factor;
                    m[r][c] -= v;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Solves `self * x = b` exactly by Gaussian elimination.
    pub fn solve(&self, b: &ExactPoint) -> Result<ExactPoint> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "cannot solve with a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        if b.dim() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: b.dim(),
            });
        }
        let n = self.rows;
        let mut aug: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                let mut row = self.row(i).to_vec();
                row.push(b.coords()[i].clone());
                row
            })
            .collect();
        for col in 0..n {
            let p = (col..n)
                .find(|&r| !aug[r][col].is_zero())
                .ok_or(Error::SingularSystem)?;
            aug.swap(col, p);
            let pivot = aug[col][col].clone();
            for c in col..=n {
                aug[col][c] = &aug[col][c] / &pivot;
            }
            for r in 0..n {
                if r == col || aug[r][col].is_zero() {
                    continue;
                }
                let factor = aug[r][col].clone();
                for c in col..=n {
                    let v = &aug[col][c] * &factor;
                    aug[r][c] -= v;
                }
            }
        }
        Ok(ExactPoint::new(aug.into_iter().map(|mut row| row.pop().unwrap()).collect()))
    }
}

/// The unique `x` with `x = Qx + b`, i.e. the solution of `(I - Q)x = b`.
pub fn affine_fixed_point(linear: &ExactMatrix, translation: &ExactPoint) -> Result<ExactPoint> {
    if !linear.is_square() {
        return Err(Error::ShapeMismatch("linear part must be square".into()));
    }
    ExactMatrix::identity(linear.rows())
        .sub(linear)
        .solve(translation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn parse_accepts_canonical_forms() {
        assert_eq!(parse_rational("2/3").unwrap(), q(2, 3));
        assert_eq!(parse_rational("-4/6").unwrap(), q(-2, 3));
        assert_eq!(parse_rational("7").unwrap(), q(7, 1));
        assert_eq!(parse_rational("0/5").unwrap(), q(0, 1));
    }

    #[test]
    fn parse_rejects_malformed() {
        for s in ["2/0", "", "1/", "/2", "+1", "1.5", "a/b", "1/-2", "--1", " 1"] {
            assert!(parse_rational(s).is_err(), "{s:?} should be rejected");
        }
    }

    #[test]
    fn rationals_stay_in_lowest_terms() {
        let r = parse_rational("6").unwrap() / q(-4, 1);
        assert_eq!(r, q(-3, 2));
        assert!(r.denom() > &BigInt::zero());
        assert_eq!(rational_to_string(&r), "-3/2");
    }

    #[test]
    fn directed_rounding_brackets_value() {
        let third = q(1, 3);
        let (lo, hi) = (f64_down(&third), f64_up(&third));
        assert!(lo < hi);
        assert!(rational_from_f64(lo).unwrap() < third);
        assert!(rational_from_f64(hi).unwrap() > third);
        assert_eq!(f64_up(&q(3, 4)), 0.75);
        assert_eq!(f64_down(&q(3, 4)), 0.75);
        assert_eq!(sqrt_up(&q(9, 16)), 0.75);
        assert!(sqrt_up(&q(2, 1)) >= std::f64::consts::SQRT_2);
    }

    #[test]
    fn norm_of_scalar_matrix() {
        let m = ExactMatrix::from_ratios(&[&[(2, 3)]]).unwrap();
        assert_eq!(m.operator_norm_upper(), f64_up(&q(2, 3)));
    }

    #[test]
    fn norm_of_diagonal_matrix() {
        // spectral norm of a diagonal matrix is its largest |entry|
        let m = ExactMatrix::from_ratios(&[&[(2, 3), (0, 1)], &[(0, 1), (3, 4)]]).unwrap();
        assert_eq!(m.operator_norm_upper(), 0.75);
    }

    #[test]
    fn norm_of_nilpotent_matrix() {
        let m = ExactMatrix::from_ratios(&[&[(0, 1), (1, 1)], &[(0, 1), (0, 1)]]).unwrap();
        assert_eq!(m.operator_norm_upper(), 1.0);
    }

    #[test]
    fn norm_bound_covers_rank_one_counterexample() {
        let m = ExactMatrix::from_ratios(&[&[(1, 1), (1, 1)], &[(0, 1), (0, 1)]]).unwrap();
        assert!(m.operator_norm_upper() >= std::f64::consts::SQRT_2);
    }

    #[test]
    fn fixed_points_of_interval_maps() {
        let two_thirds = ExactMatrix::from_ratios(&[&[(2, 3)]]).unwrap();
        let fp = affine_fixed_point(&two_thirds, &ExactPoint::from_ratios(&[(1, 3)])).unwrap();
        assert_eq!(fp, ExactPoint::from_ratios(&[(1, 1)]));
        let fp = affine_fixed_point(&two_thirds, &ExactPoint::from_ratios(&[(0, 1)])).unwrap();
        assert_eq!(fp, ExactPoint::from_ratios(&[(0, 1)]));
        let four_ninths = ExactMatrix::from_ratios(&[&[(4, 9)]]).unwrap();
        let fp = affine_fixed_point(&four_ninths, &ExactPoint::from_ratios(&[(2, 9)])).unwrap();
        assert_eq!(fp, ExactPoint::from_ratios(&[(2, 5)]));
    }

    #[test]
    fn identity_linear_part_is_singular() {
        let id = ExactMatrix::identity(2);
        assert!(matches!(
            affine_fixed_point(&id, &ExactPoint::zeros(2)),
            Err(Error::SingularSystem)
        ));
    }

    #[test]
    fn solve_two_by_two_with_pivoting() {
        let m = ExactMatrix::from_ratios(&[&[(0, 1), (1, 1)], &[(2, 1), (1, 1)]]).unwrap();
        let x = m.solve(&ExactPoint::from_ratios(&[(3, 1), (5, 1)])).unwrap();
        assert_eq!(x, ExactPoint::from_ratios(&[(1, 1), (3, 1)]));
    }

    #[test]
    fn rank_and_block_structure() {
        let m = ExactMatrix::from_ratios(&[&[(1, 2)], &[(1, 3)]]).unwrap();
        assert_eq!(m.rank(), 1);
        let d = ExactMatrix::identity(1).block_diag(&ExactMatrix::scalar(2, q(1, 2)));
        assert!(d.is_block_diagonal(1));
        assert_eq!(d.rank(), 3);
        let full = ExactMatrix::from_ratios(&[&[(1, 2), (1, 4)], &[(0, 1), (1, 2)]]).unwrap();
        assert!(!full.is_block_diagonal(1));
    }

    #[test]
    fn exact_point_serde_uses_rational_strings() {
        let p = ExactPoint::from_ratios(&[(4, 9), (9, 16), (-2, 1)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"["4/9","9/16","-2"]"#);
        let back: ExactPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert_eq!(p.to_string(), "(4/9, 9/16, -2)");
    }
}
