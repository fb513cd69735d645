use proptest::prelude::*;

use ifs_morph_core::files::{ReportFile, ReportParams, HEURISTIC_NOTE};
use ifs_morph_core::search::{search_conjugacies, search_morphisms, SearchEntry, SearchMode};
use ifs_morph_core::{AlphaMap, Error, ExactPoint, GraphVerdict, IfsSystem, SearchParams, SearchReport, VerdictKind};

fn gamma() -> IfsSystem {
    IfsSystem::interval("gamma", &[((2, 3), (0, 1)), ((2, 3), (1, 3))]).unwrap()
}

fn lambda() -> IfsSystem {
    IfsSystem::interval("lambda", &[((3, 4), (0, 1)), ((3, 4), (1, 4))]).unwrap()
}

fn params(threads: usize) -> SearchParams {
    SearchParams {
        depth: 12,
        max_depth: 14,
        threads: Some(threads),
        ..SearchParams::default()
    }
}

fn stripped(mut r: SearchReport) -> String {
    r.strip_timing();
    serde_json::to_string(&r).unwrap()
}

#[test]
fn interval_pair_is_not_conjugate() {
    let r = search_conjugacies(&gamma(), &lambda(), &params(2)).unwrap();
    assert_eq!(r.entries.len(), 2);
    assert!(r.summary.conjugacy_refuted);
    assert!(r.summary.all_refutations_certified);
    for e in &r.entries {
        assert_eq!(e.refutation(), Some(VerdictKind::CertifiedNotInjective), "{}", e.alpha);
    }
    assert_eq!(r.summary_line(), "conjugacy_refuted=true certified=true alphas=2");
}

#[test]
fn interval_pair_has_four_morphism_candidates() {
    let r = search_morphisms(&gamma(), &lambda(), &params(2)).unwrap();
    let tables: Vec<Vec<usize>> = r.entries.iter().map(|e| e.alpha.table().to_vec()).collect();
    assert_eq!(tables, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
    assert!(r.summary.any_morphism_candidate);
    assert!(r.entries.iter().all(|e| e.transpose_verdict.is_none()));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let a = search_conjugacies(&gamma(), &lambda(), &params(1)).unwrap();
    let b = search_conjugacies(&gamma(), &lambda(), &params(4)).unwrap();
    assert_eq!(stripped(a), stripped(b));
}

#[test]
fn corrupted_summary_trips_the_gate() {
    let g = gamma();
    let mut r = search_conjugacies(&g, &g, &params(2)).unwrap();
    assert!(!r.summary.conjugacy_refuted);
    r.validate().unwrap();
    r.summary.conjugacy_refuted = true;
    assert!(matches!(r.validate(), Err(Error::GateViolation(_))));

    let mut r = search_conjugacies(&gamma(), &lambda(), &params(2)).unwrap();
    let e = &mut r.entries[1];
    e.verdict.kind = VerdictKind::HeuristicGraph;
    e.transpose_verdict = None;
    e.injectivity = None;
    e.transpose_injectivity = None;
    assert!(matches!(r.validate(), Err(Error::GateViolation(_))));
}

fn verdict() -> impl Strategy<Value = GraphVerdict> {
    let kind = prop::sample::select(vec![
        VerdictKind::CertifiedNotGraph,
        VerdictKind::CertifiedNotInjective,
        VerdictKind::HeuristicGraph,
        VerdictKind::HeuristicNotGraph,
        VerdictKind::Inconclusive,
    ]);
    let witness = prop::collection::vec(
        prop::collection::vec((-99i64..=99, 1i64..=99), 2).prop_map(|p| ExactPoint::from_ratios(&p)),
        0..4,
    );
    let real = prop::option::of(0.0f64..10.0);
    (kind, witness, real.clone(), real.clone(), real).prop_map(|(kind, witness, score, delta, eta)| GraphVerdict {
        kind,
        witness,
        score,
        delta,
        eta,
    })
}

fn entry() -> impl Strategy<Value = SearchEntry> {
    (
        prop::collection::vec(1usize..=3, 1..4),
        0usize..20,
        0.0f64..1.0,
        verdict(),
        prop::option::of(verdict()),
        prop::option::of(verdict()),
        prop::option::of(any::<u64>()),
    )
        .prop_map(|(table, depth, epsilon, verdict, transpose_verdict, injectivity, runtime_ms)| SearchEntry {
            alpha: AlphaMap::new(table, 3).unwrap(),
            depth,
            epsilon,
            verdict,
            transpose_verdict,
            injectivity,
            transpose_injectivity: None,
            runtime_ms,
        })
}

fn report_params() -> impl Strategy<Value = ReportParams> {
    (
        0usize..30,
        prop::option::of(0usize..30),
        0.0f64..0.1,
        prop::option::of(0.0f64..1.0),
        prop::option::of(0.0f64..1.0),
        0usize..5,
        prop::option::of(any::<u64>()),
    )
        .prop_map(|(depth, max_depth, grid, delta, eta, exact_word_len, seed)| ReportParams {
            depth,
            max_depth,
            grid,
            delta,
            eta,
            exact_word_len,
            seed,
        })
}

fn report_file() -> impl Strategy<Value = ReportFile> {
    let search = (report_params(), prop::collection::vec(entry(), 0..5)).prop_map(|(params, entries)| {
        ReportFile::Search {
            source: "a.json".into(),
            target: "b.json".into(),
            params,
            report: SearchReport::new(SearchMode::Conjugacies, entries),
            note: HEURISTIC_NOTE.into(),
        }
    });
    let graph = (report_params(), verdict(), prop::option::of(verdict()), 0.0f64..1.0, 1usize..100_000).prop_map(
        |(params, verdict, injectivity, epsilon, points)| ReportFile::FibredGraph {
            source: "a.json".into(),
            target: "b.json".into(),
            alpha: AlphaMap::new(vec![2, 1], 2).unwrap(),
            params,
            epsilon,
            points,
            verdict,
            injectivity,
            note: HEURISTIC_NOTE.into(),
        },
    );
    prop_oneof![search, graph]
}

proptest! {
    #[test]
    fn report_files_round_trip(r in report_file()) {
        let text = r.to_json();
        prop_assert_eq!(ReportFile::from_json(&text).unwrap(), r);
    }
}
