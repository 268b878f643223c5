//! Command-line front end: config ingestion, flag merging, command dispatch
//! and artifact emission.
//!
//! Exit statuses: 0 on success, 2 on invalid input (config or parameters),
//! 3 when an internal consistency check fails, 1 on I/O failure. Every error
//! is also printed to stderr as one JSON object.

mod artifact;
mod config;
mod examples;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{classify_with_grid, drift_profile, DRIFT_GRID};
use crate::error::Error;
use crate::market::{
    build_market_ifs, drift_bridge, grade_ensemble, grade_run, kelly_rule, simulate_market, Grade,
    GradeThresholds, OutcomeGrade,
};
use crate::orbit_engine::{ensemble_verdicts, sample_orbit_stream, scan_basin, IFSystem, Limit};
use crate::stats::{
    arcsine_path, coin_flip_arcsine, exponent_series, positive_fraction_bound, ArcsineEnsemble,
};

pub use artifact::{ArtifactWriter, Provenance, VERSION};
pub use config::{IfsConfig, MapConfig, RunConfig};
pub use examples::{example_3_4, example_5_1, kelly_demo_model, run_example, Check, ExampleReport};

#[derive(Debug, Parser)]
#[command(name = "srb", version, about = "SRB measures of monotone interval IFS")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample orbits and classify their tails.
    Simulate,
    /// Classify the candidate SRB measures of an IFS.
    Classify,
    /// Scan convergence frequencies over a grid of initial points.
    Basin,
    /// Simulate the asset market and grade each investor.
    Market,
    /// Arcsine-law statistics (coin flips, or the exponent process of an IFS).
    Arcsine,
    /// Reproduce a built-in worked example: ex3.4, ex5.1 or kelly-demo.
    Example {
        name: String,
        /// Probability of the squaring map in ex5.1.
        #[arg(long)]
        p1: Option<f64>,
    },
}

/// Failure of a CLI run.
#[derive(Debug)]
pub enum CliError {
    Srb(Error),
    Config(String),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Srb(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Srb(Error::Inconsistent(_) | Error::ClearingDrift { .. }) => 3,
            CliError::Srb(_) | CliError::Config(_) => 2,
            CliError::Io(_) => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Srb(e) => {
                let mut v = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
                if let Error::InvalidParameter { field, .. } = e {
                    v["field"] = serde_json::json!(field);
                }
                v
            }
            CliError::Config(m) => serde_json::json!({ "error": "config", "message": m }),
            CliError::Io(e) => serde_json::json!({ "error": "io", "message": e.to_string() }),
        }
    }
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

/// Reads the config file and applies flag overrides (flags win).
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    let c = &cli.common;
    cfg.seed = c.seed.or(cfg.seed);
    cfg.steps = c.steps.or(cfg.steps);
    cfg.paths = c.paths.or(cfg.paths);
    cfg.grid = c.grid.or(cfg.grid);
    let name = match &cli.command {
        Command::Simulate => "simulate",
        Command::Classify => "classify",
        Command::Basin => "basin",
        Command::Market => "market",
        Command::Arcsine => "arcsine",
        Command::Example { name, p1 } => {
            cfg.example = Some(name.clone());
            cfg.p1 = p1.or(cfg.p1);
            "example"
        }
    };
    cfg.command = Some(name.into());
    fill_defaults(&mut cfg);
    Ok(cfg)
}

/// Records every default in the config so the hash pins the whole run.
fn fill_defaults(cfg: &mut RunConfig) {
    let cmd = cfg.command.clone().unwrap_or_default();
    let ex = cfg.example.clone().unwrap_or_default();
    cfg.seed.get_or_insert(42);
    match (cmd.as_str(), ex.as_str()) {
        ("simulate", _) => {
            cfg.steps.get_or_insert(10_000);
            cfg.paths.get_or_insert(100);
            cfg.r0.get_or_insert(0.5);
            cfg.tail_fraction.get_or_insert(0.5);
            cfg.eps.get_or_insert(1e-6);
        }
        ("classify", _) => {
            cfg.grid.get_or_insert(DRIFT_GRID);
        }
        ("basin", _) | ("example", "ex3.4") => {
            cfg.steps.get_or_insert(10_000);
            cfg.grid.get_or_insert(101);
            cfg.seeds_per_point.get_or_insert(50);
        }
        ("market", _) => {
            cfg.steps.get_or_insert(10_000);
            cfg.paths.get_or_insert(1);
            cfg.grid.get_or_insert(DRIFT_GRID);
        }
        ("arcsine", _) => {
            cfg.n.get_or_insert(10_000);
            cfg.paths.get_or_insert(2000);
            cfg.a.get_or_insert(0.25);
        }
        ("example", "ex5.1") => {
            cfg.p1.get_or_insert(0.4);
            cfg.steps.get_or_insert(10_000);
            cfg.paths.get_or_insert(200);
            cfg.r0.get_or_insert(0.5);
        }
        ("example", "kelly-demo") => {
            cfg.steps.get_or_insert(100_000);
            cfg.paths.get_or_insert(200);
            cfg.grid.get_or_insert(DRIFT_GRID);
        }
        _ => {}
    }
}

/// Runs a parsed command; returns the human-readable summary lines.
pub fn dispatch(cli: &Cli) -> Result<Vec<String>, CliError> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Error::invalid("threads", "must be positive").into());
        }
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let cfg = effective_config(cli)?;
    if let Command::Example { name, .. } = &cli.command {
        if !examples::NAMES.contains(&name.as_str()) {
            return Err(Error::invalid(
                "example",
                format!(
                    "unknown example `{name}`; expected one of {:?}",
                    examples::NAMES
                ),
            )
            .into());
        }
    }
    let mut w = ArtifactWriter::new(&cli.common.out, &cfg)?;
    let mut lines = match &cli.command {
        Command::Simulate => simulate(&cfg, &mut w)?,
        Command::Classify => classify_cmd(&cfg, &mut w)?,
        Command::Basin => basin(&cfg, &mut w)?,
        Command::Market => market(&cfg, &mut w)?,
        Command::Arcsine => arcsine(&cfg, &mut w)?,
        Command::Example { name, .. } => run_example(name, &cfg, &mut w)?.summary_lines(),
    };
    lines.push(format!("config_sha256 {}", w.provenance().config_sha256));
    for p in w.written() {
        lines.push(format!("wrote {}", p.display()));
    }
    Ok(lines)
}

fn need_ifs(cfg: &RunConfig) -> Result<IFSystem, CliError> {
    match &cfg.ifs {
        Some(i) => Ok(i.build()?),
        None => {
            Err(Error::invalid("ifs", "this command needs an `ifs` section in the config").into())
        }
    }
}

#[derive(Serialize)]
struct LimitCounts {
    paths: usize,
    to_zero: usize,
    to_one: usize,
    to_interior: usize,
    oscillating: usize,
    undecided: usize,
}

fn simulate(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Vec<String>, CliError> {
    let ifs = need_ifs(cfg)?;
    let (r0, steps, paths, seed) = (
        cfg.r0.unwrap(),
        cfg.steps.unwrap(),
        cfg.paths.unwrap(),
        cfg.seed.unwrap(),
    );
    let (tail, eps) = (cfg.tail_fraction.unwrap(), cfg.eps.unwrap());
    let orbit = sample_orbit_stream(&ifs, r0, steps, seed, 0)?;
    let verdicts = ensemble_verdicts(&ifs, r0, steps, seed, paths, tail, eps)?;
    let mut csv = String::from("path,verdict,x,tail_mean,tail_range,occupation\n");
    let mut counts = LimitCounts {
        paths,
        to_zero: 0,
        to_one: 0,
        to_interior: 0,
        oscillating: 0,
        undecided: 0,
    };
    for (i, v) in verdicts.iter().enumerate() {
        let (name, x) = match v.limit {
            Limit::ConvergesTo(x) => {
                if x == 0.0 {
                    counts.to_zero += 1;
                } else if x == 1.0 {
                    counts.to_one += 1;
                } else {
                    counts.to_interior += 1;
                }
                ("converges_to", x.to_string())
            }
            Limit::Oscillating => {
                counts.oscillating += 1;
                ("oscillating", String::new())
            }
            Limit::Undecided => {
                counts.undecided += 1;
                ("undecided", String::new())
            }
        };
        csv.push_str(&format!(
            "{i},{name},{x},{},{},{}\n",
            v.tail_mean, v.tail_range, v.occupation
        ));
    }
    w.text("orbit.csv", &orbit.to_csv())?;
    w.text("verdicts.csv", &csv)?;
    w.json("simulate.json", &counts)?;
    Ok(vec![format!(
        "{paths} paths: {} -> 0, {} -> 1, {} interior, {} oscillating, {} undecided",
        counts.to_zero, counts.to_one, counts.to_interior, counts.oscillating, counts.undecided
    )])
}

fn classify_cmd(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Vec<String>, CliError> {
    let ifs = need_ifs(cfg)?;
    let report = classify_with_grid(&ifs, cfg.grid.unwrap())?;
    w.json("classification.json", &report)?;
    w.text("g_d.txt", &report.graphs.g_d.to_edge_list())?;
    w.text("g_u.txt", &report.graphs.g_u.to_edge_list())?;
    if let Some(d) = &report.drift {
        let mut csv = String::from("r,phi,variance\n");
        for ((r, f), v) in d.grid.iter().zip(&d.phi).zip(&d.var) {
            csv.push_str(&format!("{r},{f},{v}\n"));
        }
        w.text("drift.csv", &csv)?;
    }
    let mut lines = vec![format!("|BS| = {}", report.bs_bound)];
    for v in &report.candidates {
        lines.push(format!("{}: {:?} ({})", v.measure, v.status, v.rule));
    }
    Ok(lines)
}

fn basin(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Vec<String>, CliError> {
    let ifs = need_ifs(cfg)?;
    let targets = match cfg.target {
        Some(t) => vec![t],
        None => vec![0.0, 1.0],
    };
    let mut scans = Vec::new();
    let mut lines = Vec::new();
    for t in targets {
        let scan = scan_basin(
            &ifs,
            t,
            cfg.grid.unwrap(),
            cfg.seeds_per_point.unwrap(),
            cfg.steps.unwrap(),
            cfg.seed.unwrap(),
        )?;
        w.text(&format!("basin_{t}.csv"), &scan.to_csv())?;
        lines.push(format!(
            "target {t}: hull {:?} contiguous {}",
            scan.hull, scan.contiguous
        ));
        scans.push(scan);
    }
    w.json("basin.json", &scans)?;
    Ok(lines)
}

#[derive(Serialize)]
struct GradeCounts {
    investor: usize,
    extinction: usize,
    survival: usize,
    domination: usize,
    undecided: usize,
}

fn count_grades(runs: &[Vec<OutcomeGrade>], investors: usize) -> Vec<GradeCounts> {
    (0..investors)
        .map(|i| {
            let mut c = GradeCounts {
                investor: i + 1,
                extinction: 0,
                survival: 0,
                domination: 0,
                undecided: 0,
            };
            for run in runs {
                match run[i].grade {
                    Grade::Extinction => c.extinction += 1,
                    Grade::Survival => c.survival += 1,
                    Grade::Domination => c.domination += 1,
                    Grade::Undecided => c.undecided += 1,
                }
            }
            c
        })
        .collect()
}

fn market(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Vec<String>, CliError> {
    let mc = cfg
        .market
        .as_ref()
        .ok_or_else(|| Error::invalid("market", "this command needs a `market` section"))?;
    let model = mc.model()?;
    let (steps, paths, seed) = (cfg.steps.unwrap(), cfg.paths.unwrap(), cfg.seed.unwrap());
    let th = GradeThresholds::default();
    let traj = simulate_market(&model, &mc.strategies, &mc.w0, steps, seed)?;
    let grades = grade_run(&traj, &th)?;
    let counts = if paths > 1 {
        let runs = grade_ensemble(&model, &mc.strategies, &mc.w0, steps, seed, paths, &th)?;
        Some(count_grades(&runs, mc.strategies.len()))
    } else {
        None
    };
    let bridge = if mc.strategies.len() == 2 {
        Some(drift_bridge(
            &model,
            &mc.strategies[0],
            &mc.strategies[1],
            cfg.grid.unwrap(),
        )?)
    } else {
        None
    };
    let degenerate = if mc.strategies.len() == 2 {
        Some(build_market_ifs(&model, &mc.strategies[0], &mc.strategies[1])?.degenerate)
    } else {
        None
    };
    let report = serde_json::json!({
        "model": model,
        "kelly_rule": kelly_rule(&model),
        "expected_payoffs": model.expected_payoffs(),
        "payoffs_independent": model.payoffs_independent(),
        "grades": grades,
        "ensemble": counts,
        "two_investor": bridge,
        "degenerate": degenerate,
        "max_clearing_error": traj.max_clearing_error,
        "max_share_error": traj.max_share_error,
    });
    w.text("trajectory.csv", &traj.to_csv())?;
    w.json("market.json", &report)?;
    Ok(grades
        .iter()
        .enumerate()
        .map(|(i, g)| format!("investor {}: {:?} ({})", i + 1, g.grade, g.rule))
        .collect())
}

fn arcsine(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Vec<String>, CliError> {
    let (n, paths, seed, a) = (
        cfg.n.unwrap(),
        cfg.paths.unwrap(),
        cfg.seed.unwrap(),
        cfg.a.unwrap(),
    );
    let (ensemble, d, big_d) = match &cfg.ifs {
        None => (coin_flip_arcsine(paths, n, seed)?, 1.0, 1.0),
        Some(_) => {
            let ifs = need_ifs(cfg)?;
            let (ens, d, big_d) = ifs_arcsine(&ifs, cfg, n, paths, seed)?;
            (ens, d, big_d)
        }
    };
    let bound = positive_fraction_bound(&ensemble.pos_fractions(), a, d, big_d)?;
    w.text("arcsine.csv", &ensemble.to_csv())?;
    w.json(
        "arcsine.json",
        &serde_json::json!({
            "n": n,
            "paths": ensemble.paths.len(),
            "excluded": ensemble.excluded,
            "ks_distance": ensemble.ks_distance,
            "d": d,
            "D": big_d,
            "positive_fraction": bound,
        }),
    )?;
    Ok(vec![
        format!(
            "KS distance of L_n to arcsine law: {:.4}",
            ensemble.ks_distance
        ),
        format!(
            "Pr(Pos/n <= {a}) = {:.4} (bound {:.4})",
            bound.empirical, bound.bound
        ),
    ])
}

/// Exponent-process version: `d` is the drift variance floor and `D` bounds
/// `M_t²` through the exponent range.
fn ifs_arcsine(
    ifs: &IFSystem,
    cfg: &RunConfig,
    n: usize,
    paths: usize,
    seed: u64,
) -> Result<(ArcsineEnsemble, f64, f64), CliError> {
    let profile = drift_profile(ifs, DRIFT_GRID)?;
    let d = profile.variance_floor;
    if !(d > 0.0) {
        return Err(Error::invalid("ifs", "conditional variance vanishes somewhere").into());
    }
    let lo = profile
        .exponent_bounds
        .iter()
        .map(|b| b.b)
        .fold(f64::INFINITY, f64::min);
    let hi = profile
        .exponent_bounds
        .iter()
        .map(|b| b.big_b)
        .fold(0.0, f64::max);
    let big_d = (hi.ln() - lo.ln()).powi(2);
    let nf = n as f64;
    let steps = cfg.steps.unwrap_or((nf / d).ceil() as usize + n);
    let r0 = cfg.r0.unwrap_or(0.5);
    let results = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let orbit = sample_orbit_stream(ifs, r0, steps, seed, i)?;
            let s = exponent_series(&orbit, ifs)?;
            arcsine_path(
                s.m.iter().copied().zip(s.cond_var.iter().copied()),
                nf,
                d,
                big_d,
            )
        })
        .collect();
    Ok((ArcsineEnsemble::from_results(nf, results), d, big_d))
}
