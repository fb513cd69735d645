//! Morphisms `(f, α)` between systems, code space words and the code map.
//!
//! A morphism from `(X, Γ)` to `(Y, Λ)` pairs a continuous `f: X -> Y` with a
//! label map `α: Γ -> Λ` such that `f ∘ γ = α(γ) ∘ f` for every `γ`. Here `f`
//! is either affine with rational coefficients (checked exactly) or a
//! tabulated graph (checked in floating point).

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{affine_fixed_point, ExactMatrix, ExactPoint};
use crate::ifs::{self, AffineContraction, IfsSystem, Metric, PointCloud};

/// Label map `α: Γ -> Λ` as a table of 1-based labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlphaMap {
    table: Vec<usize>,
    codomain: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlphaClass {
    pub injective: bool,
    pub surjective: bool,
}

impl AlphaMap {
    pub fn new(table: Vec<usize>, codomain: usize) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::ShapeMismatch("label map has an empty domain".into()));
        }
        if let Some(&label) = table.iter().find(|&&l| l == 0 || l > codomain) {
            return Err(Error::InvalidLabel {
                label,
                size: codomain,
            });
        }
        Ok(Self { table, codomain })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            table: (1..=n).collect(),
            codomain: n,
        }
    }

    /// Parses `"2,1,3"`.
    pub fn parse(s: &str, codomain: usize) -> Result<Self> {
        Self::new(parse_labels(s)?, codomain)
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn domain_size(&self) -> usize {
        self.table.len()
    }

    pub fn codomain_size(&self) -> usize {
        self.codomain
    }

    /// `α(γ_label)` as a label of the codomain.
    pub fn image(&self, label: usize) -> usize {
        self.table[label - 1]
    }

    pub fn classify(&self) -> AlphaClass {
        let distinct: BTreeSet<usize> = self.table.iter().copied().collect();
        AlphaClass {
            injective: distinct.len() == self.table.len(),
            surjective: distinct.len() == self.codomain,
        }
    }

    pub fn is_bijection(&self) -> bool {
        let c = self.classify();
        c.injective && c.surjective
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &AlphaMap) -> Result<AlphaMap> {
        if first.codomain != self.domain_size() {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose: inner codomain {} vs outer domain {}",
                first.codomain,
                self.domain_size()
            )));
        }
        AlphaMap::new(
            first.table.iter().map(|&l| self.image(l)).collect(),
            self.codomain,
        )
    }

    pub fn inverse(&self) -> Option<AlphaMap> {
        if !self.is_bijection() {
            return None;
        }
        let mut inv = vec![0; self.codomain];
        for (i, &l) in self.table.iter().enumerate() {
            inv[l - 1] = i + 1;
        }
        Some(AlphaMap {
            table: inv,
            codomain: self.table.len(),
        })
    }
}

impl fmt::Display for AlphaMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", join_labels(&self.table))
    }
}

pub fn classify_alpha(alpha: &AlphaMap) -> AlphaClass {
    alpha.classify()
}

pub(crate) fn parse_labels(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad label {t:?} in {s:?}")))
        })
        .collect()
}

pub(crate) fn join_labels(labels: &[usize]) -> String {
    labels
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Affine map `x -> Ax + b` between spaces of possibly different dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePointMap {
    linear: ExactMatrix,
    translation: ExactPoint,
}

impl AffinePointMap {
    pub fn new(linear: ExactMatrix, translation: ExactPoint) -> Result<Self> {
        if linear.rows() != translation.dim() {
            return Err(Error::DimensionMismatch {
                expected: linear.rows(),
                found: translation.dim(),
            });
        }
        Ok(Self {
            linear,
            translation,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            linear: ExactMatrix::identity(n),
            translation: ExactPoint::zeros(n),
        }
    }

    pub fn linear(&self) -> &ExactMatrix {
        &self.linear
    }

    pub fn translation(&self) -> &ExactPoint {
        &self.translation
    }

    pub fn input_dim(&self) -> usize {
        self.linear.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.linear.rows()
    }

    pub fn apply_exact(&self, x: &ExactPoint) -> ExactPoint {
        self.linear.mul_vec(x).add(&self.translation)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let a = self.linear.to_f64();
        let b = self.translation.to_f64();
        let n = self.input_dim();
        (0..self.output_dim())
            .map(|i| a[i * n..(i + 1) * n].iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + b[i])
            .collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffinePointMap) -> Result<AffinePointMap> {
        if inner.output_dim() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose maps {}->{} after {}->{}",
                self.input_dim(),
                self.output_dim(),
                inner.input_dim(),
                inner.output_dim()
            )));
        }
        AffinePointMap::new(
            self.linear.mul(&inner.linear),
            self.linear.mul_vec(&inner.translation).add(&self.translation),
        )
    }

    pub fn lipschitz_upper(&self) -> f64 {
        self.linear.operator_norm_upper()
    }

    pub fn is_injective(&self) -> bool {
        self.linear.rank() == self.input_dim()
    }
}

/// A function known only through samples of its graph.
///
/// `graph` lives in `X × Y` with `X` the first `split` coordinates. `f(x)` is
/// the `Y` block of the graph point nearest to `x` in `X`, provided it is
/// within `radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedMap {
    pub graph: PointCloud,
    pub split: usize,
    pub radius: f64,
}

impl TabulatedMap {
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (best, dist) = self
            .graph
            .points()
            .map(|p| (p, Metric::Euclidean.distance(&p[..self.split], x)))
            .fold((None, f64::INFINITY), |acc, (p, d)| {
                if d < acc.1 {
                    (Some(p), d)
                } else {
                    acc
                }
            });
        match best {
            Some(p) if dist <= self.radius => Ok(p[self.split..].to_vec()),
            _ => Err(Error::FNotEvaluable {
                radius: self.radius,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointMap {
    Affine(AffinePointMap),
    Tabulated(TabulatedMap),
}

impl PointMap {
    fn dims(&self) -> (usize, usize) {
        match self {
            PointMap::Affine(a) => (a.input_dim(), a.output_dim()),
            PointMap::Tabulated(t) => (t.split, t.graph.dim() - t.split),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            PointMap::Affine(a) => Ok(a.apply(x)),
            PointMap::Tabulated(t) => t.eval(x),
        }
    }
}

/// Candidate morphism `(f, α)` from `source` to `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct MorphismSpec {
    pub f: PointMap,
    pub alpha: AlphaMap,
    pub source: IfsSystem,
    pub target: IfsSystem,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MorphismCheck {
    pub max_defect: f64,
    pub ok: bool,
    /// The defect was computed in exact rational arithmetic.
    pub exact: bool,
}

impl MorphismSpec {
    pub fn new(f: PointMap, alpha: AlphaMap, source: IfsSystem, target: IfsSystem) -> Result<Self> {
        let (din, dout) = f.dims();
        if din != source.dimension() || dout != target.dimension() {
            return Err(Error::ShapeMismatch(format!(
                "f maps R^{din} -> R^{dout}, systems live in R^{} and R^{}",
                source.dimension(),
                target.dimension()
            )));
        }
        if alpha.domain_size() != source.len() || alpha.codomain_size() != target.len() {
            return Err(Error::ShapeMismatch(format!(
                "label map is {} -> {}, systems have {} and {} maps",
                alpha.domain_size(),
                alpha.codomain_size(),
                source.len(),
                target.len()
            )));
        }
        Ok(Self {
            f,
            alpha,
            source,
            target,
        })
    }

    pub fn identity(sys: &IfsSystem) -> Self {
        Self {
            f: PointMap::Affine(AffinePointMap::identity(sys.dimension())),
            alpha: AlphaMap::identity(sys.len()),
            source: sys.clone(),
            target: sys.clone(),
        }
    }

    fn target_map(&self, label: usize) -> &AffineContraction {
        self.target
            .map(self.alpha.image(label))
            .expect("label map validated against target")
    }

    /// The sets `f(Γ(K))` and `α(Γ)(f(K))`, computed exactly. They agree for
    /// every finite `K` when `(f, α)` is an affine morphism.
    pub fn intertwining_sets(
        &self,
        points: &[ExactPoint],
    ) -> Result<(BTreeSet<ExactPoint>, BTreeSet<ExactPoint>)> {
        let PointMap::Affine(f) = &self.f else {
            return Err(Error::BadParams("exact intertwining needs an affine f".into()));
        };
        let lhs = self
            .source
            .hutchinson_exact(points)
            .iter()
            .map(|p| f.apply_exact(p))
            .collect();
        let images: Vec<ExactPoint> = points.iter().map(|p| f.apply_exact(p)).collect();
        let used: BTreeSet<usize> = self.alpha.table().iter().copied().collect();
        let mut rhs = BTreeSet::new();
        for label in used {
            let m = self.target.map(label).expect("validated label");
            rhs.extend(images.iter().map(|p| m.apply_exact(p)));
        }
        Ok((lhs, rhs))
    }

    /// `max_{x ∈ cloud} d(f(x), target_cloud)`.
    pub fn image_deficit(&self, source_cloud: &PointCloud, target_cloud: &PointCloud) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in source_cloud.points() {
            let y = self.f.eval(p)?;
            worst = worst.max(ifs::distance_to_cloud(&y, target_cloud, self.target.metric()));
        }
        Ok(worst)
    }
}

/// Maximum of `d(f(γ(x)), α(γ)(f(x)))` over all maps and samples.
///
/// Affine `f` is checked exactly (samples are converted to their exact
/// rational values); tabulated `f` in double precision.
pub fn verify_morphism(m: &MorphismSpec, samples: &PointCloud, tol: f64) -> Result<MorphismCheck> {
    if samples.dim() != m.source.dimension() {
        return Err(Error::DimensionMismatch {
            expected: m.source.dimension(),
            found: samples.dim(),
        });
    }
    let metric = m.target.metric();
    let mut worst: f64 = 0.0;
    let exact = matches!(m.f, PointMap::Affine(_));
    match &m.f {
        PointMap::Affine(f) => {
            for p in samples.points() {
                let x = ExactPoint::from_f64(p)
                    .ok_or_else(|| Error::BadParams("non-finite sample".into()))?;
                let fx = f.apply_exact(&x);
                for g in m.source.maps() {
                    let lhs = f.apply_exact(&g.apply_exact(&x));
                    let rhs = m.target_map(g.label()).apply_exact(&fx);
                    worst = worst.max(metric.exact_distance_up(&lhs, &rhs));
                }
            }
        }
        PointMap::Tabulated(t) => {
            for p in samples.points() {
                let fx = t.eval(p)?;
                for g in m.source.maps() {
                    let lhs = t.eval(&g.apply(p))?;
                    let rhs = m.target_map(g.label()).apply(&fx);
                    worst = worst.max(metric.distance(&lhs, &rhs));
                }
            }
        }
    }
    Ok(MorphismCheck {
        max_defect: worst,
        ok: worst <= tol,
        exact,
    })
}

/// `m2 ∘ m1 = (f₂ ∘ f₁, α₂ ∘ α₁)`.
pub fn compose(m2: &MorphismSpec, m1: &MorphismSpec) -> Result<MorphismSpec> {
    if !m1.target.same_maps(&m2.source) {
        return Err(Error::ShapeMismatch(
            "target of the first morphism is not the source of the second".into(),
        ));
    }
    let (PointMap::Affine(f2), PointMap::Affine(f1)) = (&m2.f, &m1.f) else {
        return Err(Error::NotComposable);
    };
    MorphismSpec::new(
        PointMap::Affine(f2.compose(f1)?),
        m2.alpha.compose(&m1.alpha)?,
        m1.source.clone(),
        m2.target.clone(),
    )
}

/// A finite truncation `w₁…w_k` of an infinite word, or an eventually
/// periodic word whose last `period` letters repeat forever.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    alphabet: usize,
    letters: Vec<usize>,
    period: Option<usize>,
}

impl Word {
    pub fn new(alphabet: usize, letters: Vec<usize>) -> Result<Self> {
        Self::build(alphabet, letters, None)
    }

    /// `letters[..len - period]` followed by `letters[len - period..]`
    /// repeated forever.
    pub fn eventually_periodic(alphabet: usize, letters: Vec<usize>, period: usize) -> Result<Self> {
        if period == 0 || period > letters.len() {
            return Err(Error::BadParams(format!(
                "period {period} must be in 1..={}",
                letters.len()
            )));
        }
        Self::build(alphabet, letters, Some(period))
    }

    fn build(alphabet: usize, letters: Vec<usize>, period: Option<usize>) -> Result<Self> {
        if let Some(&label) = letters.iter().find(|&&l| l == 0 || l > alphabet) {
            return Err(Error::InvalidLabel {
                label,
                size: alphabet,
            });
        }
        Ok(Self {
            alphabet,
            letters,
            period,
        })
    }

    /// Parses `"1,2,1"`; `period` of `None` or `Some(0)` means a plain truncation.
    pub fn parse(s: &str, alphabet: usize, period: Option<usize>) -> Result<Self> {
        let letters = if s.trim().is_empty() {
            Vec::new()
        } else {
            parse_labels(s)?
        };
        match period {
            None | Some(0) => Self::new(alphabet, letters),
            Some(p) => Self::eventually_periodic(alphabet, letters, p),
        }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn period(&self) -> Option<usize> {
        self.period
    }

    pub fn preperiod(&self) -> usize {
        self.letters.len() - self.period.unwrap_or(0)
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    /// Number of known letters: `None` for an infinite (eventually periodic) word.
    pub fn known_len(&self) -> Option<usize> {
        match self.period {
            Some(_) => None,
            None => Some(self.letters.len()),
        }
    }

    /// The `k`-th letter (0-based), if known.
    pub fn letter(&self, k: usize) -> Option<usize> {
        if k < self.letters.len() {
            return Some(self.letters[k]);
        }
        let p = self.period?;
        let pre = self.preperiod();
        Some(self.letters[pre + (k - pre) % p])
    }

    /// `σ_i(w) = i w`.
    pub fn prepend(&self, letter: usize) -> Result<Word> {
        let mut letters = Vec::with_capacity(self.letters.len() + 1);
        letters.push(letter);
        letters.extend_from_slice(&self.letters);
        Self::build(self.alphabet, letters, self.period)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pre = self.preperiod();
        write!(f, "{}", join_labels(&self.letters[..pre]))?;
        if self.period.is_some() {
            if pre > 0 {
                write!(f, ",")?;
            }
            write!(f, "({})^inf", join_labels(&self.letters[pre..]))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodePoint {
    pub point: ExactPoint,
    /// Guaranteed distance to `π(w·v)` for every continuation `v`; zero for
    /// eventually periodic words, infinite for uncertified systems.
    pub error: f64,
}

/// The code map `π(w)`.
///
/// For an eventually periodic word the exact limit is returned: the fixed
/// point of the period block's composite map, pushed through the preperiod.
/// For a truncation `w₁…w_k` the result is `γ_{w₁} ∘ … ∘ γ_{w_k}(basepoint)`
/// with error `c^k · (diam bound + d(basepoint, x*))`. The basepoint defaults
/// to `x*`, the fixed point of map 1.
pub fn code_map_eval(sys: &IfsSystem, w: &Word, basepoint: Option<&ExactPoint>) -> Result<CodePoint> {
    if let Some(&label) = w.letters().iter().find(|&&l| l > sys.len()) {
        return Err(Error::InvalidLabel {
            label,
            size: sys.len(),
        });
    }
    if let Some(p) = w.period() {
        let pre = w.preperiod();
        let (q, b) = sys.word_affine(&w.letters()[pre..pre + p])?;
        let limit = affine_fixed_point(&q, &b)?;
        let (q, b) = sys.word_affine(&w.letters()[..pre])?;
        return Ok(CodePoint {
            point: q.mul_vec(&limit).add(&b),
            error: 0.0,
        });
    }

    let anchor = sys.maps()[0].fixed_point()?;
    let base = match basepoint {
        Some(p) if p.dim() != sys.dimension() => {
            return Err(Error::DimensionMismatch {
                expected: sys.dimension(),
                found: p.dim(),
            })
        }
        Some(p) => p.clone(),
        None => anchor.clone(),
    };
    let (q, b) = sys.word_affine(w.letters())?;
    let point = q.mul_vec(&base).add(&b);
    let error = if sys.is_certified() {
        let spread = ifs::diameter_upper_bound(sys)? + sys.metric().exact_distance_up(&base, &anchor);
        let k = w.letters().len();
        (sys.contraction_factor().powi(k as i32) * (1.0 + 4.0 * k as f64 * f64::EPSILON) * spread)
            .next_up()
    } else {
        f64::INFINITY
    };
    Ok(CodePoint { point, error })
}

/// Value of the code-space ultrametric `d(w, v) = 2^{1 - min{k : w_k ≠ v_k}}`.
///
/// When the known letters never disagree the distance is only bracketed:
/// `lo = 0`, `hi = 2^{1 - L}` with `L` the number of letters compared.
/// Two eventually periodic words are compared in full.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeDistance {
    pub lo: f64,
    pub hi: f64,
}

impl CodeDistance {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }
}

pub fn code_space_metric(w: &Word, v: &Word) -> CodeDistance {
    let horizon = match (w.known_len(), v.known_len()) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => {
            let (pw, pv) = (w.period().unwrap(), v.period().unwrap());
            w.preperiod().max(v.preperiod()) + pw.lcm(&pv)
        }
    };
    for k in 0..horizon {
        if w.letter(k) != v.letter(k) {
            let d = 2f64.powi(-(k as i32));
            return CodeDistance { lo: d, hi: d };
        }
    }
    if w.is_periodic() && v.is_periodic() {
        return CodeDistance { lo: 0.0, hi: 0.0 };
    }
    CodeDistance {
        lo: 0.0,
        hi: 2f64.powi(1 - horizon as i32),
    }
}

/// Letterwise image `h(w₁)h(w₂)…` with `h(i)` the label of `α(γ_i)`: the
/// code-space morphism lifting `(f, α)`.
pub fn lift_to_code_space(alpha: &AlphaMap, w: &Word) -> Result<Word> {
    if let Some(&label) = w.letters().iter().find(|&&l| l > alpha.domain_size()) {
        return Err(Error::InvalidLabel {
            label,
            size: alpha.domain_size(),
        });
    }
    Word::build(
        alpha.codomain_size(),
        w.letters().iter().map(|&l| alpha.image(l)).collect(),
        w.period(),
    )
}

/// Affine model of the code space on `N` symbols: the Cantor set on `[0, 1]`
/// generated by `σ_i(t) = (t + 2(i − 1)) / (2N − 1)` (ratio `1/3` when
/// `N = 1`). The gaps make the coding injective, so this system is conjugate
/// to the shift maps on sequences; the coordinate of a word is its code-map
/// value here.
pub fn code_space_system(n: usize) -> Result<IfsSystem> {
    if n == 0 {
        return Err(Error::EmptySystem);
    }
    let denom = (2 * n as i64 - 1).max(3);
    let maps = (0..n as i64)
        .map(|i| ((1, denom), (2 * i, denom)))
        .collect::<Vec<_>>();
    IfsSystem::interval(format!("code space on {n} symbols"), &maps)
}

/// Position of `w` in [`code_space_system`].
pub fn word_coordinate(w: &Word) -> Result<CodePoint> {
    code_map_eval(&code_space_system(w.alphabet())?, w, None)
}
