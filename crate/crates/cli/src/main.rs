//! `thickset` command-line front end.

mod render;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use thickset::constructions::{
    self, CounterexampleParams, CounterexampleSidecar, GapPlacement, RandomThickSpec,
};
use thickset::family::StageFamily;
use thickset::gaplemma::{self, GapLemmaVerdict, PersistentWitness};
use thickset::rational::{self, Rational};
use thickset::search::{self, SearchConfig};
use thickset::stage::{self, CantorStage};
use thickset::{functions, Error, FunctionSpec};

#[derive(Parser)]
#[command(name = "thickset", version, about = "Exact thickness computations for Cantor sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Placement {
    Centered,
    Uniform,
}

#[derive(Subcommand)]
enum Command {
    /// Build a stage (or all stages up to a depth) and write it as JSON.
    Construct {
        #[arg(long, value_name = "ALPHA", conflicts_with = "random_thick")]
        middle_alpha: Option<String>,
        /// Random thick set with this target thickness.
        #[arg(long, value_name = "TAU")]
        random_thick: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "uniform")]
        placement: Placement,
        #[arg(long)]
        depth: usize,
        /// Write the array of stages 0..=depth instead of the last one.
        #[arg(long)]
        all_stages: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the exact thickness and the minimizing gap endpoint.
    Thickness {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Bridge report for every gap endpoint.
    Bridges {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the gap-lemma hypotheses for two sets and, with --depth, search
    /// for a nested intersection chain. The hypotheses are checked at that
    /// depth, or at depth 1 without it.
    CheckGapLemma {
        first: String,
        second: String,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = gaplemma::DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find {x - t, x, x + t} at an endpoint of the largest gap.
    #[command(name = "find-3ap")]
    Find3ap {
        #[arg(long)]
        set_family: String,
        #[arg(long, default_value_t = 12)]
        max_depth: usize,
        #[arg(long, default_value_t = gaplemma::DEFAULT_BUDGET)]
        budget: usize,
        /// Print the full search report instead of the witness.
        #[arg(long)]
        report: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find {x - t, x, x + f(t)} with f given by coefficients "c1,c2,...".
    FindConfig {
        #[arg(long)]
        set_family: String,
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 34)]
        max_depth: usize,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, default_value_t = gaplemma::DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long)]
        report: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the five-interval set avoiding {x - t, x, x + t^2}.
    Counterexample {
        #[arg(long)]
        tau: String,
        #[arg(long)]
        eps: String,
        /// Use this c instead of calibrating.
        #[arg(long)]
        c: Option<String>,
        #[arg(long, default_value = "1/1000000")]
        tol: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the named parts.
        #[arg(long)]
        parts: Option<PathBuf>,
    },
    /// Check the five-interval set's avoidance inequalities and thickness.
    VerifyCounterexample {
        #[arg(long, required_unless_present = "parts")]
        tau: Option<String>,
        #[arg(long, required_unless_present = "parts")]
        eps: Option<String>,
        #[arg(long)]
        c: Option<String>,
        #[arg(long, default_value = "1/1000000")]
        tol: String,
        /// Verify a parts file written by `counterexample`.
        #[arg(long, conflicts_with_all = ["tau", "eps", "c"])]
        parts: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a stage as SVG with one segment per interval and one brace per
    /// bridge.
    Render {
        file: PathBuf,
        #[arg(long)]
        parts: Option<PathBuf>,
        /// Symmetric log scale around 0.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        no_braces: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Experimental: run find-config over a grid of slopes f'(0) with the
    /// derivative window check disabled.
    Sweep {
        #[arg(long)]
        set_family: String,
        /// Higher coefficients "c2,c3,..." shared by every f.
        #[arg(long, default_value = "")]
        tail: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 9)]
        steps: usize,
        #[arg(long, default_value_t = 16)]
        max_depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status classes.
enum Failure {
    /// Hypothesis, usage, input or verification failure.
    User(String),
    /// An internal contradiction.
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::User(e.to_string())
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn num(text: &str) -> CliResult<Rational> {
    Ok(rational::parse(text)?)
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::User(format!("cannot read {}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> CliResult {
    match out {
        Some(p) => fs::write(p, format!("{text}\n"))
            .map_err(|e| Failure::User(format!("cannot write {}: {e}", p.display()))),
        None => {
            // a closed pipe (e.g. `| head`) is not an error
            match writeln!(std::io::stdout(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::User(format!("cannot write output: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
    emit(&text, out)
}

fn load_stage(path: &Path) -> CliResult<CantorStage> {
    Ok(stage::stage_from_json(&read(path)?)?)
}

/// Reads a file holding either one stage or an array of nested stages.
fn load_stages(path: &Path) -> CliResult<Vec<CantorStage>> {
    let text = read(path)?;
    if text.trim_start().starts_with('[') {
        Ok(stage::stages_from_json(&text)?)
    } else {
        Ok(vec![stage::stage_from_json(&text)?])
    }
}

/// `middle-alpha:A`, `random-thick:TAU:DEPTH:SEED`, `file:PATH`, or a bare
/// path to a stage / stage-array JSON file.
fn parse_family(spec: &str) -> CliResult<StageFamily> {
    let (kind, rest) = spec.split_once(':').unwrap_or(("file", spec));
    match kind {
        "middle-alpha" => Ok(StageFamily::middle_alpha(&num(rest)?)?),
        "random-thick" => {
            let parts: Vec<&str> = rest.split(':').collect();
            let [tau, depth, seed] = parts.as_slice() else {
                return Err(Failure::User(format!("expected random-thick:TAU:DEPTH:SEED, got {spec}")));
            };
            let depth = depth.parse().map_err(|_| Failure::User(format!("bad depth {depth}")))?;
            let seed = seed.parse().map_err(|_| Failure::User(format!("bad seed {seed}")))?;
            let stages = constructions::random_thick_family(&RandomThickSpec::new(num(tau)?, depth, seed))?;
            Ok(StageFamily::from_stages(stages)?)
        }
        "file" => Ok(StageFamily::from_stages(load_stages(Path::new(rest))?)?),
        _ => Err(Failure::User(format!(
            "unknown set family {spec}; use middle-alpha:A, random-thick:TAU:DEPTH:SEED or file:PATH"
        ))),
    }
}

fn inverse_precision() -> CliResult<Rational> {
    match std::env::var("THICKSET_PRECISION") {
        Ok(v) => {
            let p = num(&v)?;
            if !rational::is_positive(&p) {
                return Err(Failure::User(format!("THICKSET_PRECISION must be positive, got {v}")));
            }
            Ok(p)
        }
        Err(_) => Ok(functions::default_precision()),
    }
}

#[derive(Serialize)]
struct GapLemmaReport {
    verdict: GapLemmaVerdict,
    intersection: Option<gaplemma::IntersectionWitness>,
    persistence: Option<PersistentWitness>,
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Construct { middle_alpha, random_thick, seed, placement, depth, all_stages, out } => {
            let stages = match (middle_alpha, random_thick) {
                (Some(a), None) => constructions::middle_alpha_family(&num(&a)?, depth)?,
                (None, Some(t)) => {
                    let gap_placement = match placement {
                        Placement::Centered => GapPlacement::Centered,
                        Placement::Uniform => GapPlacement::Uniform,
                    };
                    let spec = RandomThickSpec { target_tau: num(&t)?, depth, seed, gap_placement };
                    constructions::random_thick_family(&spec)?
                }
                _ => return Err(Failure::User("give exactly one of --middle-alpha or --random-thick".into())),
            };
            if all_stages {
                emit(&serde_json::to_string(&stages).unwrap(), out.as_deref())
            } else {
                emit(&stage::stage_to_json(stages.last().unwrap()), out.as_deref())
            }
        }
        Command::Thickness { file, json } => {
            let s = load_stage(&file)?;
            let t = stage::thickness(&s)?;
            if json {
                return emit_json(&t, None);
            }
            let a = &t.argmin;
            let side = match a.side {
                stage::Side::Left => "left",
                stage::Side::Right => "right",
            };
            println!("{}", t.value);
            println!(
                "argmin endpoint {} ({side} side of gap ({}, {})), bridge {}",
                a.endpoint,
                a.gap.lo.as_ref().unwrap(),
                a.gap.hi.as_ref().unwrap(),
                a.bridge
            );
            Ok(())
        }
        Command::Bridges { file, out } => emit_json(&stage::all_bridges(&load_stage(&file)?), out.as_deref()),
        Command::CheckGapLemma { first, second, depth, budget, out } => {
            let f1 = parse_family(&first)?;
            let f2 = parse_family(&second)?;
            // depth 0 is a single interval with no gap to check
            let d0 = depth.unwrap_or(1);
            let s1 = f1.stage(d0)?;
            let s2 = f2.stage(d0)?;
            let verdict = gaplemma::check_hypotheses(&s1, &s2);
            let intersection = gaplemma::intersect(&s1, &s2);
            let persistence = match depth {
                None => None,
                Some(d) => match gaplemma::persistent_intersect(&f1, &f2, d, budget) {
                    Ok(w) => Some(w),
                    Err(Error::EmptyIntersection(fail)) => {
                        let report = GapLemmaReport { verdict: verdict.clone(), intersection, persistence: None };
                        emit_json(&report, out.as_deref())?;
                        let msg = format!("no nested intersection chain: empty at depth {}", fail.depth);
                        return Err(if verdict.applies { Failure::Internal(msg) } else { Failure::User(msg) });
                    }
                    Err(e) => return Err(e.into()),
                },
            };
            emit_json(&GapLemmaReport { verdict, intersection, persistence }, out.as_deref())
        }
        Command::Find3ap { set_family, max_depth, budget, report, out } => {
            let fam = parse_family(&set_family)?;
            let rep = search::find_3ap(&fam, max_depth, budget)?;
            if report {
                emit_json(&rep, out.as_deref())
            } else {
                emit_json(&rep.witness, out.as_deref())
            }
        }
        Command::FindConfig { set_family, f, max_depth, delta, rho, epsilon, budget, report, out } => {
            let fam = parse_family(&set_family)?;
            let f = FunctionSpec::parse(&f)?;
            let cfg = SearchConfig {
                rho: rho.as_deref().map(num).transpose()?,
                epsilon: epsilon.as_deref().map(num).transpose()?,
                delta: delta.as_deref().map(num).transpose()?,
                max_depth,
                inverse_precision: inverse_precision()?,
                enforce_window: true,
                budget,
            };
            let rep = search::find_config(&fam, &f, &cfg)?;
            if report {
                emit_json(&rep, out.as_deref())
            } else {
                emit_json(&rep.witness, out.as_deref())
            }
        }
        Command::Counterexample { tau, eps, c, tol, out, parts } => {
            let (tau, eps) = (num(&tau)?, num(&eps)?);
            let params = match c {
                Some(c) => CounterexampleParams::new(tau, eps, num(&c)?)?,
                None => constructions::counterexample_calibrate(&tau, &eps, &num(&tol)?)?,
            };
            let p = constructions::counterexample_parts(&params);
            let s = p.stage()?;
            if let Some(path) = parts {
                emit_json(&p.sidecar(), Some(&path))?;
            }
            emit(&stage::stage_to_json(&s), out.as_deref())
        }
        Command::VerifyCounterexample { tau, eps, c, tol, parts, out } => {
            let tol = num(&tol)?;
            let report = match parts {
                Some(path) => {
                    let side: CounterexampleSidecar = serde_json::from_str(&read(&path)?)
                        .map_err(|e| Failure::User(format!("{}: {e}", path.display())))?;
                    let params = CounterexampleParams::new(side.tau.clone(), side.eps.clone(), side.c.clone())?;
                    let labels = side.labels();
                    let ivs: Vec<_> = labels.iter().step_by(2).map(|(_, iv)| (*iv).clone()).collect();
                    let bounds = std::array::from_fn(|k| (ivs[k].lo().clone(), ivs[k].hi().clone()));
                    search::verify_counterexample_parts(&constructions::CounterexampleParts { bounds, params }, &tol)
                }
                None => {
                    let (tau, eps) = (num(tau.as_deref().unwrap())?, num(eps.as_deref().unwrap())?);
                    let params = match c {
                        Some(c) => CounterexampleParams::new(tau, eps, num(&c)?)?,
                        None => constructions::counterexample_calibrate(&tau, &eps, &tol)?,
                    };
                    search::verify_counterexample(&params, &tol)
                }
            };
            emit_json(&report, out.as_deref())?;
            match report.failures().first() {
                None => Ok(()),
                Some(bad) => Err(Failure::User(format!("verification failed: {} {}", bad.name, bad.detail))),
            }
        }
        Command::Render { file, parts, log, no_braces, out } => {
            let s = load_stage(&file)?;
            let side = match parts {
                Some(p) => Some(
                    serde_json::from_str::<CounterexampleSidecar>(&read(&p)?)
                        .map_err(|e| Failure::User(format!("{}: {e}", p.display())))?,
                ),
                None => None,
            };
            let svg = render::svg(&s, side.as_ref(), &render::Options { log, braces: !no_braces });
            emit(&svg, out.as_deref())
        }
        Command::Sweep { set_family, tail, from, to, steps, max_depth, out } => {
            let fam = parse_family(&set_family)?;
            let tail: Vec<Rational> = if tail.trim().is_empty() {
                Vec::new()
            } else {
                tail.split(',').map(|t| num(t.trim())).collect::<CliResult<_>>()?
            };
            let (lo, hi) = (num(&from)?, num(&to)?);
            if steps < 2 || lo >= hi {
                return Err(Failure::User("need --from < --to and --steps >= 2".into()));
            }
            let slopes: Vec<Rational> = (0..steps)
                .map(|k| &lo + (&hi - &lo) * rational::rat(k as i64, steps as i64 - 1))
                .collect();
            let cfg = SearchConfig { max_depth, inverse_precision: inverse_precision()?, ..SearchConfig::default() };
            let rows = search::sweep(&fam, &slopes, &tail, &cfg)?;
            #[derive(Serialize)]
            struct SweepReport {
                experimental: &'static str,
                rows: Vec<search::SweepRow>,
            }
            emit_json(
                &SweepReport {
                    experimental: "derivative window check disabled; failures are not counterexamples",
                    rows,
                },
                out.as_deref(),
            )
        }
    }
}
