use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ifs_morph_core::exact::parse_rational;
use ifs_morph_core::fibred::{
    exact_fibred_points, fibre, fibred_attractor, graph_test, injectivity_test_1d,
};
use ifs_morph_core::files::{cloud_to_csv, render_pgm, ReportFile, ReportParams, SystemFile, View, HEURISTIC_NOTE};
use ifs_morph_core::ifs::{approximate_attractor, attractor_deterministic, fixed_point_orbits, interval_attractor_1d};
use ifs_morph_core::morphism::{code_map_eval, lift_to_code_space};
use ifs_morph_core::search::{search_conjugacies, search_morphisms};
use ifs_morph_core::{AlphaMap, Error, ExactPoint, IfsSystem, Result, SearchParams, Word};

const THREADS_ENV: &str = "IFS_MORPH_THREADS";

#[derive(Parser)]
#[command(name = "ifs-morph", version, about = "Attractors, fibred systems and morphism search for affine IFS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Morphisms,
    Conjugacies,
}

#[derive(Subcommand)]
enum Command {
    /// Write a certified attractor cloud as CSV.
    Attractor {
        system: PathBuf,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 0.0)]
        grid: f64,
        #[arg(long)]
        out: PathBuf,
        /// Accept declared Lipschitz bounds; epsilon is then reported as inf.
        #[arg(long)]
        allow_uncertified: bool,
    },
    /// Fibre two systems over a label map and test the attractor for graphness.
    FibredGraph {
        source: PathBuf,
        target: PathBuf,
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 14)]
        depth: usize,
        #[arg(long, default_value_t = 0.0)]
        grid: f64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        /// Maximum word length for exact attractor points.
        #[arg(long, default_value_t = 3)]
        exact_len: usize,
        /// Write a PGM image of the attractor (one-dimensional factors only).
        #[arg(long)]
        render: Option<PathBuf>,
        #[arg(long, default_value_t = 400)]
        px: usize,
        /// Report path; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the graph test for every label map (or every bijection).
    Search {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 16)]
        max_depth: usize,
        #[arg(long, default_value_t = 0.0)]
        grid: f64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 3)]
        exact_len: usize,
        /// Worker threads (default: all logical processors).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record per-label-map runtimes in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Evaluate the code map at a word.
    Codemap {
        system: PathBuf,
        #[arg(long)]
        word: String,
        /// The last `p` letters of the word repeat forever.
        #[arg(long)]
        tail_period: Option<usize>,
        /// `auto` or comma-separated rationals.
        #[arg(long, default_value = "auto")]
        basepoint: String,
    },
    /// Lift a label map to code space and apply it to a word.
    Lift {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        word: String,
        /// Number of target labels (default: largest entry of the table).
        #[arg(long)]
        codomain: Option<usize>,
        #[arg(long)]
        tail_period: Option<usize>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UncertifiedBound => 3,
        Error::ShapeMismatch(_) | Error::DimensionMismatch { .. } | Error::NotOneDimensional => 4,
        Error::GateViolation(_) => 1,
        _ => 2,
    }
}

fn load(path: &Path) -> Result<IfsSystem> {
    SystemFile::read(path)?.to_system()
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Out-of-range labels are a shape problem, not a syntax problem.
fn parse_alpha(s: &str, codomain: usize) -> Result<AlphaMap> {
    AlphaMap::parse(s, codomain).map_err(|e| match e {
        Error::InvalidLabel { .. } => Error::ShapeMismatch(e.to_string()),
        e => e,
    })
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Parse(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(flag),
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Attractor {
            system,
            depth,
            grid,
            out,
            allow_uncertified,
        } => {
            let sys = load(&system)?;
            let cloud = if allow_uncertified {
                approximate_attractor(&sys, depth, grid)?
            } else {
                attractor_deterministic(&sys, depth, grid)?
            };
            write(&out, cloud_to_csv(&cloud.cloud, cloud.epsilon).as_bytes())?;
            println!("points={} epsilon={}", cloud.cloud.len(), cloud.epsilon);
        }
        Command::FibredGraph {
            source,
            target,
            alpha,
            depth,
            grid,
            delta,
            eta,
            exact_len,
            render,
            px,
            out,
        } => {
            let (src, tgt) = (load(&source)?, load(&target)?);
            let alpha = parse_alpha(&alpha, tgt.len())?;
            let fs = fibre(&src, &tgt, &alpha)?;
            let split = fs.split();
            let d = fibred_attractor(&fs, depth, grid)?;
            let exact = exact_fibred_points(&fs, exact_len)?;
            let verdict = graph_test(&d, &exact, split, delta, eta)?;
            let one_dim = src.dimension() == 1 && tgt.dimension() == 1;
            let injectivity = if one_dim && interval_attractor_1d(&src).is_some() {
                Some(injectivity_test_1d(&exact)?)
            } else {
                None
            };
            if let Some(path) = render {
                if one_dim {
                    let shown = fixed_point_orbits(&fs.product, depth)?;
                    // word fixed points reach hull corners the orbits only approach
                    let mut view = View::bounding(&shown)?;
                    for p in &exact {
                        let c = p.to_f64();
                        view.include(c[0], c[1]);
                    }
                    write(&path, &render_pgm(&shown, px, px, Some(view))?.encode())?;
                } else {
                    eprintln!("warning: --render needs one-dimensional factors; no image written");
                }
            }
            println!(
                "verdict={:?} injectivity={} points={} epsilon={}",
                verdict.kind,
                injectivity.as_ref().map_or("none".to_string(), |v| format!("{:?}", v.kind)),
                d.cloud.len(),
                d.epsilon
            );
            let report = ReportFile::FibredGraph {
                source: source.display().to_string(),
                target: target.display().to_string(),
                alpha,
                params: ReportParams {
                    depth,
                    max_depth: None,
                    grid,
                    delta: verdict.delta.or(delta),
                    eta: verdict.eta.or(eta),
                    exact_word_len: exact_len,
                    seed: None,
                },
                epsilon: d.epsilon,
                points: d.cloud.len(),
                verdict,
                injectivity,
                note: HEURISTIC_NOTE.into(),
            };
            match out {
                Some(path) => write(&path, report.to_json().as_bytes())?,
                None => print!("{}", report.to_json()),
            }
        }
        Command::Search {
            source,
            target,
            mode,
            depth,
            max_depth,
            grid,
            delta,
            eta,
            exact_len,
            threads: flag,
            out,
            timing,
        } => {
            let (src, tgt) = (load(&source)?, load(&target)?);
            let params = SearchParams {
                depth,
                max_depth: max_depth.max(depth),
                grid,
                delta,
                eta,
                exact_word_len: exact_len,
                threads: threads(flag)?,
            };
            let mut report = match mode {
                Mode::Morphisms => search_morphisms(&src, &tgt, &params)?,
                Mode::Conjugacies => search_conjugacies(&src, &tgt, &params)?,
            };
            if !timing {
                report.strip_timing();
            }
            println!("{}", report.summary_line());
            if report.summary.conjugacy_refuted && !report.summary.all_refutations_certified {
                eprintln!("warning: some refutations are heuristic (numeric clouds can alias)");
            }
            if let Some(path) = out {
                let file = ReportFile::Search {
                    source: source.display().to_string(),
                    target: target.display().to_string(),
                    params: ReportParams {
                        depth,
                        max_depth: Some(params.max_depth),
                        grid,
                        delta,
                        eta,
                        exact_word_len: exact_len,
                        seed: None,
                    },
                    report,
                    note: HEURISTIC_NOTE.into(),
                };
                write(&path, file.to_json().as_bytes())?;
            }
        }
        Command::Codemap {
            system,
            word,
            tail_period,
            basepoint,
        } => {
            let sys = load(&system)?;
            let w = Word::parse(&word, sys.len(), tail_period)?;
            let base = match basepoint.trim() {
                "auto" => None,
                s => {
                    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
                    for p in &parts {
                        parse_rational(p)?;
                    }
                    Some(ExactPoint::parse(&parts)?)
                }
            };
            let p = code_map_eval(&sys, &w, base.as_ref())?;
            println!("point={}", p.point);
            println!("error={}", p.error);
        }
        Command::Lift {
            alpha,
            word,
            codomain,
            tail_period,
        } => {
            let table = AlphaMap::parse(&alpha, usize::MAX)?;
            let m = codomain.unwrap_or_else(|| table.table().iter().copied().max().unwrap_or(1));
            let alpha = AlphaMap::parse(&alpha, m)?;
            let w = Word::parse(&word, alpha.domain_size(), tail_period)?;
            println!("{}", lift_to_code_space(&alpha, &w)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
