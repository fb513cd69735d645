//! On-disk formats: system descriptions, reports, point-cloud CSV and PGM
//! rasters.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{parse_rational, rational_from_f64, rational_to_string, ExactMatrix, ExactPoint};
use crate::fibred::GraphVerdict;
use crate::ifs::{AffineContraction, BoundKind, IfsSystem, PointCloud};
use crate::morphism::AlphaMap;
use crate::search::SearchReport;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapEntry {
    pub matrix: Vec<Vec<String>>,
    pub translation: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<String>,
}

/// JSON description of an affine system. Every number is a rational string
/// `p` or `p/q`.
///
/// ```json
/// { "name": "halves", "dimension": 1,
///   "maps": [ { "matrix": [["1/2"]], "translation": ["0"] },
///             { "matrix": [["1/2"]], "translation": ["1/2"] } ] }
/// ```
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    pub dimension: usize,
    pub maps: Vec<MapEntry>,
}

impl SystemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system file serializes")
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_system(&self) -> Result<IfsSystem> {
        let n = self.dimension;
        let mut maps = Vec::with_capacity(self.maps.len());
        for (i, m) in self.maps.iter().enumerate() {
            if m.matrix.len() != n || m.matrix.iter().any(|r| r.len() != n) {
                return Err(Error::Parse(format!("map {}: matrix is not {n}x{n}", i + 1)));
            }
            if m.translation.len() != n {
                return Err(Error::Parse(format!("map {}: translation has {} entries", i + 1, m.translation.len())));
            }
            let rows = m
                .matrix
                .iter()
                .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let linear = ExactMatrix::from_rows(rows)?;
            let translation = ExactPoint::parse(&m.translation.iter().map(String::as_str).collect::<Vec<_>>())?;
            maps.push(match &m.lipschitz {
                Some(l) => AffineContraction::with_declared_bound(linear, translation, &parse_rational(l)?)?,
                None => AffineContraction::new(linear, translation)?,
            });
        }
        IfsSystem::new(self.name.clone(), maps)
    }

    pub fn from_system(sys: &IfsSystem) -> Self {
        let maps = sys
            .maps()
            .iter()
            .map(|m| MapEntry {
                matrix: m.linear().to_string_rows(),
                translation: m.translation().to_strings(),
                lipschitz: match m.bound_kind() {
                    BoundKind::Certified => None,
                    BoundKind::Declared => rational_from_f64(m.lipschitz_bound()).map(|r| rational_to_string(&r)),
                },
            })
            .collect();
        Self {
            name: sys.name().to_string(),
            dimension: sys.dimension(),
            maps,
        }
    }
}

/// Parameters recorded alongside every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    pub grid: f64,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub exact_word_len: usize,
    pub seed: Option<u64>,
}

pub const HEURISTIC_NOTE: &str =
    "HeuristicGraph is an observation at the stated resolution, not a certificate; only Certified* verdicts carry proofs";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportFile {
    Search {
        source: String,
        target: String,
        params: ReportParams,
        report: SearchReport,
        note: String,
    },
    FibredGraph {
        source: String,
        target: String,
        alpha: AlphaMap,
        params: ReportParams,
        epsilon: f64,
        points: usize,
        verdict: GraphVerdict,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        injectivity: Option<GraphVerdict>,
        note: String,
    },
}

impl ReportFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if let ReportFile::Search { report, .. } = &r {
            report.validate()?;
        }
        Ok(r)
    }
}

/// One point per line, shortest round-trip decimals, preceded by
/// `# epsilon=<value>`.
pub fn cloud_to_csv(cloud: &PointCloud, epsilon: f64) -> String {
    let mut out = String::with_capacity(cloud.len() * 24);
    writeln!(out, "# epsilon={epsilon}").unwrap();
    for p in cloud.points() {
        for (i, v) in p.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`cloud_to_csv`]; comment lines are skipped and the epsilon
/// comment, if present, is returned.
pub fn cloud_from_csv(text: &str) -> Result<(PointCloud, Option<f64>)> {
    let mut epsilon = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some(v) = c.trim().strip_prefix("epsilon=") {
                epsilon = Some(v.parse::<f64>().map_err(|e| Error::Parse(format!("epsilon: {e}")))?);
            }
            continue;
        }
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((PointCloud::from_points(&rows)?, epsilon))
}

/// Axis-aligned view rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct View {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl View {
    pub fn bounding(cloud: &PointCloud) -> Result<View> {
        if cloud.dim() != 2 {
            return Err(Error::ShapeMismatch(format!("cannot render a {}-dimensional cloud", cloud.dim())));
        }
        let mut v = View {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for p in cloud.points() {
            v.x0 = v.x0.min(p[0]);
            v.x1 = v.x1.max(p[0]);
            v.y0 = v.y0.min(p[1]);
            v.y1 = v.y1.max(p[1]);
        }
        Ok(v)
    }

    /// Grows the view to contain `(x, y)`.
    pub fn include(&mut self, x: f64, y: f64) {
        self.x0 = self.x0.min(x);
        self.x1 = self.x1.max(x);
        self.y0 = self.y0.min(y);
        self.y1 = self.y1.max(y);
    }

    /// Nearest pixel `(column, row)` for `(x, y)`, row 0 at the top, or `None`
    /// outside the view.
    pub fn pixel(&self, x: f64, y: f64, width: usize, height: usize) -> Option<(usize, usize)> {
        let scale = |v: f64, lo: f64, hi: f64, n: usize| -> Option<usize> {
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            let i = (t * (n - 1) as f64).round();
            (0.0..=(n - 1) as f64).contains(&i).then_some(i as usize)
        };
        let c = scale(x, self.x0, self.x1, width)?;
        let r = scale(y, self.y0, self.y1, height)?;
        Some((c, height - 1 - r))
    }
}

/// Grey-level raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Pgm {
    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Binary P5 encoding with maxval 255.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Pgm> {
        let bad = |m: &str| Error::Parse(format!("pgm: {m}"));
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if bytes.get(pos) == Some(&b'#') {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?);
        }
        if fields[0] != "P5" || fields[3] != "255" {
            return Err(bad("expected P5 with maxval 255"));
        }
        let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
        let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
        let pixels = bytes.get(pos + 1..).ok_or_else(|| bad("missing raster"))?.to_vec();
        if pixels.len() != width * height {
            return Err(bad("raster size"));
        }
        Ok(Pgm { width, height, pixels })
    }
}

/// Splats a 2-D cloud onto a white `width × height` raster, black at the
/// nearest pixel of each point, with `y` increasing upwards.
pub fn render_pgm(cloud: &PointCloud, width: usize, height: usize, view: Option<View>) -> Result<Pgm> {
    if width == 0 || height == 0 {
        return Err(Error::BadParams("image must be at least 1x1".into()));
    }
    let view = match view {
        Some(v) => v,
        None => View::bounding(cloud)?,
    };
    if cloud.dim() != 2 {
        return Err(Error::ShapeMismatch(format!("cannot render a {}-dimensional cloud", cloud.dim())));
    }
    let mut pixels = vec![255u8; width * height];
    for p in cloud.points() {
        if let Some((c, r)) = view.pixel(p[0], p[1], width, height) {
            pixels[r * width + c] = 0;
        }
    }
    Ok(Pgm { width, height, pixels })
}
