//! Python bindings. Points cross the boundary as lists of floats, exact
//! values as rational strings, and reports as JSON text.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ifs_morph_core::fibred::{exact_fibred_points, fibre, fibred_attractor, graph_test, injectivity_test_1d};
use ifs_morph_core::files::SystemFile;
use ifs_morph_core::ifs::{attractor_deterministic, chaos_game, hausdorff_distance, interval_attractor_1d};
use ifs_morph_core::morphism::{code_map_eval, lift_to_code_space};
use ifs_morph_core::search::{search_conjugacies, search_morphisms};
use ifs_morph_core::{AlphaMap, Error, ExactPoint, IfsSystem, Metric, PointCloud, SearchParams, Word};

create_exception!(ifs_morph, IfsMorphError, PyValueError);

fn err(e: Error) -> PyErr {
    IfsMorphError::new_err(e.to_string())
}

fn to_rows(cloud: &PointCloud) -> Vec<Vec<f64>> {
    cloud.points().map(<[f64]>::to_vec).collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<PointCloud> {
    let dim = rows.first().map_or(1, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(IfsMorphError::new_err("points must all have the same dimension"));
    }
    PointCloud::new(dim, rows.concat()).map_err(err)
}

fn exact_strings(p: &ExactPoint) -> Vec<String> {
    p.coords().iter().map(ToString::to_string).collect()
}

fn word(letters: Vec<usize>, alphabet: usize, tail_period: Option<usize>) -> PyResult<Word> {
    match tail_period {
        Some(p) => Word::eventually_periodic(alphabet, letters, p),
        None => Word::new(alphabet, letters),
    }
    .map_err(err)
}

/// An affine iterated function system with exact rational coefficients.
#[pyclass(name = "System", module = "ifs_morph", frozen)]
struct PySystem {
    inner: IfsSystem,
}

#[pymethods]
impl PySystem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = SystemFile::from_json(text).and_then(|f| f.to_system()).map_err(err)?;
        Ok(PySystem { inner })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = SystemFile::read(&path).and_then(|f| f.to_system()).map_err(err)?;
        Ok(PySystem { inner })
    }

    fn to_json(&self) -> String {
        SystemFile::from_system(&self.inner).to_json()
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn contraction_factor(&self) -> f64 {
        self.inner.contraction_factor()
    }

    #[getter]
    fn certified(&self) -> bool {
        self.inner.is_certified()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("System({:?}, maps={}, dimension={})", self.inner.name(), self.inner.len(), self.inner.dimension())
    }

    /// Deterministic cloud after `depth` Hutchinson steps and its certified
    /// Hausdorff error.
    #[pyo3(signature = (depth = 12, grid = 0.0))]
    fn attractor(&self, depth: usize, grid: f64) -> PyResult<(Vec<Vec<f64>>, f64)> {
        let c = attractor_deterministic(&self.inner, depth, grid).map_err(err)?;
        Ok((to_rows(&c.cloud), c.epsilon))
    }

    #[pyo3(signature = (seed, n_points, burn_in = 100))]
    fn chaos_game(&self, seed: u64, n_points: usize, burn_in: usize) -> PyResult<Vec<Vec<f64>>> {
        chaos_game(&self.inner, seed, n_points, burn_in).map(|c| to_rows(&c)).map_err(err)
    }

    /// Code map at a word (1-based labels); the last `tail_period` letters
    /// repeat forever. Returns the exact point and its error bound.
    #[pyo3(signature = (letters, tail_period = None))]
    fn code_map(&self, letters: Vec<usize>, tail_period: Option<usize>) -> PyResult<(Vec<String>, f64)> {
        let w = word(letters, self.inner.len(), tail_period)?;
        let p = code_map_eval(&self.inner, &w, None).map_err(err)?;
        Ok((exact_strings(&p.point), p.error))
    }
}

#[pyfunction]
fn hausdorff(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    hausdorff_distance(&from_rows(a)?, &from_rows(b)?, Metric::Euclidean).map_err(err)
}

/// Exact points of the attractor of the system fibred over `alpha`.
#[pyfunction]
#[pyo3(signature = (source, target, alpha, max_word_len = 2))]
fn fibred_points(
    source: &PySystem,
    target: &PySystem,
    alpha: Vec<usize>,
    max_word_len: usize,
) -> PyResult<Vec<Vec<String>>> {
    let alpha = AlphaMap::new(alpha, target.inner.len()).map_err(err)?;
    let fs = fibre(&source.inner, &target.inner, &alpha).map_err(err)?;
    let pts = exact_fibred_points(&fs, max_word_len).map_err(err)?;
    Ok(pts.iter().map(exact_strings).collect())
}

/// Graph verdict as JSON, with the injectivity verdict when both factors are
/// one-dimensional and the source attractor is an interval.
#[pyfunction]
#[pyo3(signature = (source, target, alpha, depth = 14, exact_len = 3))]
fn fibred_graph(source: &PySystem, target: &PySystem, alpha: Vec<usize>, depth: usize, exact_len: usize) -> PyResult<String> {
    let alpha = AlphaMap::new(alpha, target.inner.len()).map_err(err)?;
    let fs = fibre(&source.inner, &target.inner, &alpha).map_err(err)?;
    let d = fibred_attractor(&fs, depth, 0.0).map_err(err)?;
    let exact = exact_fibred_points(&fs, exact_len).map_err(err)?;
    let verdict = graph_test(&d, &exact, fs.split(), None, None).map_err(err)?;
    let one_dim = source.inner.dimension() == 1 && target.inner.dimension() == 1;
    let injectivity = if one_dim && interval_attractor_1d(&source.inner).is_some() {
        Some(injectivity_test_1d(&exact).map_err(err)?)
    } else {
        None
    };
    let out = serde_json::json!({
        "epsilon": d.epsilon,
        "points": d.cloud.len(),
        "verdict": verdict,
        "injectivity": injectivity,
    });
    Ok(out.to_string())
}

/// Runs the search and returns the report as JSON (timings removed).
#[pyfunction]
#[pyo3(signature = (source, target, mode = "conjugacies", depth = 12, max_depth = 16, threads = None))]
fn search(
    py: Python<'_>,
    source: &PySystem,
    target: &PySystem,
    mode: &str,
    depth: usize,
    max_depth: usize,
    threads: Option<usize>,
) -> PyResult<String> {
    let params = SearchParams {
        depth,
        max_depth: max_depth.max(depth),
        threads,
        ..SearchParams::default()
    };
    let (src, tgt) = (&source.inner, &target.inner);
    let mut report = match mode {
        "morphisms" => py.detach(|| search_morphisms(src, tgt, &params)),
        "conjugacies" => py.detach(|| search_conjugacies(src, tgt, &params)),
        other => return Err(IfsMorphError::new_err(format!("unknown mode {other:?}"))),
    }
    .map_err(err)?;
    report.strip_timing();
    serde_json::to_string(&report).map_err(|e| IfsMorphError::new_err(e.to_string()))
}

/// Applies the code-space lift of `alpha` to a word.
#[pyfunction]
#[pyo3(signature = (alpha, letters, codomain = None, tail_period = None))]
fn lift(alpha: Vec<usize>, letters: Vec<usize>, codomain: Option<usize>, tail_period: Option<usize>) -> PyResult<Vec<usize>> {
    let m = codomain.unwrap_or_else(|| alpha.iter().copied().max().unwrap_or(1));
    let alpha = AlphaMap::new(alpha, m).map_err(err)?;
    let w = word(letters, alpha.domain_size(), tail_period)?;
    Ok(lift_to_code_space(&alpha, &w).map_err(err)?.letters().to_vec())
}

#[pymodule]
fn ifs_morph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add("IfsMorphError", m.py().get_type::<IfsMorphError>())?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(fibred_points, m)?)?;
    m.add_function(wrap_pyfunction!(fibred_graph, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    Ok(())
}
