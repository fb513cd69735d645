//! Morphism and conjugacy search over all label maps.
//!
//! A morphism `(f, α)` restricted to the attractor is determined by `α`, so
//! it suffices to run the graph test on the fibred attractor for each of the
//! `M^N` label maps (or the `N!` bijections when looking for conjugacies).
//! Label maps are processed in parallel; report order is enumeration order.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibred::{
    self, exact_fibred_points, fibre, fibred_attractor, graph_test, injectivity_test_1d,
    transpose_cloud, transpose_points, GraphVerdict, VerdictKind,
};
use crate::ifs::{interval_attractor_1d, IfsSystem};
use crate::morphism::AlphaMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerationMode {
    All,
    Bijections,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Morphisms,
    Conjugacies,
}

/// All label maps `{1..n} -> {1..m}` in lexicographic order of their tables.
pub fn enumerate_alphas(n: usize, m: usize, mode: EnumerationMode) -> Result<Vec<AlphaMap>> {
    if n == 0 || m == 0 {
        return Err(Error::ShapeMismatch("systems must have at least one map".into()));
    }
    if mode == EnumerationMode::Bijections && n != m {
        return Err(Error::ShapeMismatch(format!(
            "bijections need equal map counts, got {n} and {m}"
        )));
    }
    let mut out = Vec::new();
    let mut table = vec![1usize; n];
    loop {
        let keep = match mode {
            EnumerationMode::All => true,
            EnumerationMode::Bijections => {
                let mut seen = vec![false; m];
                table.iter().all(|&l| !std::mem::replace(&mut seen[l - 1], true))
            }
        };
        if keep {
            out.push(AlphaMap::new(table.clone(), m)?);
        }
        let mut i = n;
        while i > 0 && table[i - 1] == m {
            table[i - 1] = 1;
            i -= 1;
        }
        if i == 0 {
            break;
        }
        table[i - 1] += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Starting depth of the deterministic attractor approximation.
    pub depth: usize,
    /// Inconclusive verdicts are retried at `depth + 2, depth + 4, ...` up to this cap.
    pub max_depth: usize,
    pub grid: f64,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    /// Maximum word length for exact fibred points.
    pub exact_word_len: usize,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            depth: 12,
            max_depth: 16,
            grid: 0.0,
            delta: None,
            eta: None,
            exact_word_len: 3,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub alpha: AlphaMap,
    pub depth: usize,
    pub epsilon: f64,
    pub verdict: GraphVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transpose_verdict: Option<GraphVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injectivity: Option<GraphVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transpose_injectivity: Option<GraphVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl SearchEntry {
    fn verdicts(&self) -> impl Iterator<Item = &GraphVerdict> {
        std::iter::once(&self.verdict)
            .chain(self.transpose_verdict.as_ref())
            .chain(self.injectivity.as_ref())
            .chain(self.transpose_injectivity.as_ref())
    }

    /// Strongest refutation recorded for this label map, certified ones first.
    pub fn refutation(&self) -> Option<VerdictKind> {
        let kinds: Vec<VerdictKind> = self
            .verdicts()
            .map(|v| v.kind)
            .filter(|k| k.is_refutation())
            .collect();
        kinds
            .iter()
            .copied()
            .find(|k| k.is_certified())
            .or_else(|| kinds.first().copied())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub any_morphism_candidate: bool,
    pub conjugacy_refuted: bool,
    pub all_refutations_certified: bool,
}

impl SearchSummary {
    fn from_entries(entries: &[SearchEntry]) -> Self {
        let bijections: Vec<&SearchEntry> =
            entries.iter().filter(|e| e.alpha.is_bijection()).collect();
        let refuted: Vec<VerdictKind> = entries.iter().filter_map(SearchEntry::refutation).collect();
        Self {
            any_morphism_candidate: entries
                .iter()
                .any(|e| e.verdict.kind == VerdictKind::HeuristicGraph),
            conjugacy_refuted: !bijections.is_empty()
                && bijections.iter().all(|e| e.refutation().is_some()),
            all_refutations_certified: refuted.iter().all(|k| k.is_certified()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub mode: SearchMode,
    pub entries: Vec<SearchEntry>,
    pub summary: SearchSummary,
}

impl SearchReport {
    pub fn new(mode: SearchMode, entries: Vec<SearchEntry>) -> Self {
        let summary = SearchSummary::from_entries(&entries);
        Self {
            mode,
            entries,
            summary,
        }
    }

    /// Re-derives the summary from the entries and rejects any mismatch, in
    /// particular a refuted conjugacy with an unrefuted bijection.
    pub fn validate(&self) -> Result<()> {
        if self.summary.conjugacy_refuted {
            if let Some(e) = self
                .entries
                .iter()
                .find(|e| e.alpha.is_bijection() && e.refutation().is_none())
            {
                return Err(Error::GateViolation(format!(
                    "conjugacy marked refuted but bijection {} has no refutation",
                    e.alpha
                )));
            }
        }
        let expected = SearchSummary::from_entries(&self.entries);
        if expected != self.summary {
            return Err(Error::GateViolation(format!(
                "summary {:?} does not match entries ({expected:?})",
                self.summary
            )));
        }
        Ok(())
    }

    pub fn strip_timing(&mut self) {
        for e in &mut self.entries {
            e.runtime_ms = None;
        }
    }

    /// `conjugacy_refuted=... certified=... alphas=...`
    pub fn summary_line(&self) -> String {
        format!(
            "conjugacy_refuted={} certified={} alphas={}",
            self.summary.conjugacy_refuted,
            self.summary.all_refutations_certified,
            self.entries.len()
        )
    }
}

struct Context<'a> {
    source: &'a IfsSystem,
    target: &'a IfsSystem,
    params: &'a SearchParams,
    mode: SearchMode,
    source_is_interval: bool,
    target_is_interval: bool,
}

fn evaluate(ctx: &Context<'_>, alpha: &AlphaMap) -> Result<SearchEntry> {
    let started = Instant::now();
    let fs = fibre(ctx.source, ctx.target, alpha)?;
    let split = fs.split();
    let exact = exact_fibred_points(&fs, ctx.params.exact_word_len)?;

    let mut depth = ctx.params.depth;
    let (cloud, verdict) = loop {
        let cloud = fibred_attractor(&fs, depth, ctx.params.grid)?;
        let verdict = graph_test(&cloud, &exact, split, ctx.params.delta, ctx.params.eta)?;
        if verdict.kind != VerdictKind::Inconclusive || depth + 2 > ctx.params.max_depth {
            break (cloud, verdict);
        }
        depth += 2;
    };

    let mut entry = SearchEntry {
        alpha: alpha.clone(),
        depth,
        epsilon: cloud.epsilon,
        verdict,
        transpose_verdict: None,
        injectivity: None,
        transpose_injectivity: None,
        runtime_ms: None,
    };
    if ctx.mode == SearchMode::Conjugacies {
        let flipped = transpose_cloud(&cloud, split)?;
        let flipped_exact = transpose_points(&exact, split);
        let target_split = ctx.target.dimension();
        entry.transpose_verdict = Some(graph_test(
            &flipped,
            &flipped_exact,
            target_split,
            ctx.params.delta,
            ctx.params.eta,
        )?);
        if ctx.source.dimension() == 1 && ctx.target.dimension() == 1 {
            if ctx.source_is_interval {
                entry.injectivity = Some(injectivity_test_1d(&exact)?);
            }
            if ctx.target_is_interval {
                entry.transpose_injectivity = Some(injectivity_test_1d(&flipped_exact)?);
            }
        }
    }
    entry.runtime_ms = Some(started.elapsed().as_millis() as u64);
    Ok(entry)
}

fn run(
    source: &IfsSystem,
    target: &IfsSystem,
    params: &SearchParams,
    mode: SearchMode,
) -> Result<SearchReport> {
    if !source.is_certified() || !target.is_certified() {
        return Err(Error::UncertifiedBound);
    }
    if params.max_depth < params.depth {
        return Err(Error::BadParams("max_depth is below depth".into()));
    }
    let enumeration = match mode {
        SearchMode::Morphisms => EnumerationMode::All,
        SearchMode::Conjugacies => EnumerationMode::Bijections,
    };
    let alphas = enumerate_alphas(source.len(), target.len(), enumeration)?;
    let ctx = Context {
        source,
        target,
        params,
        mode,
        source_is_interval: interval_attractor_1d(source).is_some(),
        target_is_interval: interval_attractor_1d(target).is_some(),
    };
    let work = || alphas.par_iter().map(|a| evaluate(&ctx, a)).collect::<Result<Vec<_>>>();
    let entries = match params.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::BadParams(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let report = SearchReport::new(mode, entries);
    report.validate()?;
    Ok(report)
}

/// Graph test for every label map `Γ -> Λ`.
pub fn search_morphisms(source: &IfsSystem, target: &IfsSystem, params: &SearchParams) -> Result<SearchReport> {
    run(source, target, params, SearchMode::Morphisms)
}

/// Graph tests on `𝔻` and its transpose for every bijection, plus exact
/// one-dimensional injectivity tests on the sides whose attractor is an
/// interval.
pub fn search_conjugacies(
    source: &IfsSystem,
    target: &IfsSystem,
    params: &SearchParams,
) -> Result<SearchReport> {
    run(source, target, params, SearchMode::Conjugacies)
}

/// Default graph-test resolution for a cloud error of `epsilon`.
pub fn default_resolution(epsilon: f64) -> (f64, f64) {
    fibred::default_params(epsilon)
}
