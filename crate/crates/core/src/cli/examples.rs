//! Built-in worked examples with pinned parameters and self-checks.

use serde::Serialize;

use super::artifact::ArtifactWriter;
use super::config::RunConfig;
use super::CliError;
use crate::classifier::{classify, rules, Candidate, Status};
use crate::interval_maps::MonotoneMap;
use crate::market::{
    drift_bridge, generalized_kelly_check, grade_ensemble, kelly_rule, Grade, GradeThresholds,
    MarketModel, Strategy,
};
use crate::orbit_engine::{ensemble_verdicts, scan_basin, IFSystem};

pub const NAMES: [&str; 3] = ["ex3.4", "ex5.1", "kelly-demo"];

/// Two piecewise-quadratic maps fixing `{0, 1/3, 1}` and `{0, 2/3, 1}`.
pub fn example_3_4() -> IFSystem {
    IFSystem::new(
        vec![
            MonotoneMap::piecewise(
                &[1.0 / 3.0],
                vec![vec![0.0, 0.0, 3.0], vec![-0.5, 3.0, -1.5]],
            )
            .expect("valid pieces"),
            MonotoneMap::piecewise(
                &[2.0 / 3.0],
                vec![vec![0.0, 0.0, 1.5], vec![-2.0, 6.0, -3.0]],
            )
            .expect("valid pieces"),
        ],
        vec![0.5, 0.5],
    )
    .expect("valid system")
}

/// `{r², √r; p₁, 1 − p₁}`.
pub fn example_5_1(p1: f64) -> crate::Result<IFSystem> {
    IFSystem::new(
        vec![MonotoneMap::power(2.0)?, MonotoneMap::power(0.5)?],
        vec![p1, 1.0 - p1],
    )
}

/// Two Arrow securities, each paying in one of two equally likely states.
pub fn kelly_demo_model() -> MarketModel {
    MarketModel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.5]).expect("valid model")
}

/// One stated conclusion and whether the run reproduced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub claim: String,
    pub observed: String,
    pub pass: bool,
}

impl Check {
    fn new(claim: impl Into<String>, observed: impl Into<String>, pass: bool) -> Self {
        Check {
            claim: claim.into(),
            observed: observed.into(),
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleReport {
    pub name: String,
    pub checks: Vec<Check>,
}

impl ExampleReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let mut out = vec![format!("example {}", self.name)];
        for c in &self.checks {
            let tag = if c.pass { "ok  " } else { "MISS" };
            out.push(format!("  [{tag}] {} -- {}", c.claim, c.observed));
        }
        out
    }
}

pub fn run_example(
    name: &str,
    cfg: &RunConfig,
    w: &mut ArtifactWriter,
) -> Result<ExampleReport, CliError> {
    let checks = match name {
        "ex3.4" => ex34(cfg, w)?,
        "ex5.1" => ex51(cfg, w)?,
        "kelly-demo" => kelly_demo(cfg, w)?,
        other => {
            return Err(
                crate::Error::invalid("example", format!("unknown example `{other}`")).into(),
            )
        }
    };
    let report = ExampleReport {
        name: name.into(),
        checks,
    };
    w.json("summary.json", &report)?;
    w.text("summary.txt", &(report.summary_lines().join("\n") + "\n"))?;
    Ok(report)
}

fn ex34(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Vec<Check>, CliError> {
    let ifs = example_3_4();
    let report = classify(&ifs)?;
    w.json("classification.json", &report)?;
    let mut checks = Vec::new();
    for (x, rule, lo, hi) in [
        (0.0, rules::DOWN_INTERVALS_AT_ZERO, 0.0, 1.0 / 3.0),
        (1.0, rules::UP_INTERVALS_AT_ONE, 2.0 / 3.0, 1.0),
    ] {
        let v = report.verdict(Candidate::Dirac(x));
        let observed = v.map_or("no verdict".into(), |v| {
            format!("{:?} via {}", v.status, v.rule)
        });
        let pass = v.is_some_and(|v| v.status == Status::Srb && v.rule == rule);
        checks.push(Check::new(
            format!("delta_{x} is SRB ({rule})"),
            observed,
            pass,
        ));

        let grid = cfg.grid.unwrap();
        let scan = scan_basin(
            &ifs,
            x,
            grid,
            cfg.seeds_per_point.unwrap(),
            cfg.steps.unwrap(),
            cfg.seed.unwrap(),
        )?;
        w.text(&format!("basin_{x}.csv"), &scan.to_csv())?;
        let cell = 1.0 / (grid - 1) as f64;
        let pass = scan
            .hull
            .is_some_and(|(a, b)| (a - lo).abs() <= cell + 1e-12 && (b - hi).abs() <= cell + 1e-12);
        checks.push(Check::new(
            format!("basin hull of delta_{x} is [{lo:.4}, {hi:.4}] within one grid cell"),
            format!("{:?}", scan.hull),
            pass,
        ));
        if x == 0.0 {
            let middle: Vec<f64> = scan
                .grid
                .iter()
                .zip(&scan.freqs)
                .filter(|(r, _)| **r > 1.0 / 3.0 && **r < 2.0 / 3.0)
                .map(|(_, f)| *f)
                .collect();
            let outside = middle
                .iter()
                .filter(|f| !(**f > 0.01 && **f < 0.99))
                .count();
            checks.push(Check::new(
                "every start in (1/3, 2/3) reaches 0 with frequency in (0.01, 0.99)",
                format!("{outside} of {} points outside", middle.len()),
                outside == 0,
            ));
        }
    }
    Ok(checks)
}

fn ex51(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Vec<Check>, CliError> {
    let p1 = cfg.p1.unwrap();
    let ifs = example_5_1(p1)?;
    let report = classify(&ifs)?;
    w.json("classification.json", &report)?;
    let ln2 = std::f64::consts::LN_2;
    let phi = (2.0 * p1 - 1.0) * ln2;
    let mut checks = Vec::new();
    if let Some(d) = &report.drift {
        checks.push(Check::new(
            format!("drift is constant (2 p1 - 1) ln 2 = {phi:.6}"),
            format!("inf {:.6}, sup {:.6}", d.inf, d.sup),
            (d.inf - phi).abs() < 1e-12 && (d.sup - phi).abs() < 1e-12,
        ));
    }
    let (s0, s1) = (
        report.status(Candidate::Dirac(0.0)),
        report.status(Candidate::Dirac(1.0)),
    );
    let observed = format!("delta_0 {s0:?}, delta_1 {s1:?}");
    let expected = if p1 < 0.5 {
        (
            "delta_1 is the unique SRB measure",
            Status::NotSrb,
            Status::Srb,
        )
    } else if p1 > 0.5 {
        (
            "delta_0 is the unique SRB measure",
            Status::Srb,
            Status::NotSrb,
        )
    } else {
        ("neither endpoint is SRB", Status::NotSrb, Status::NotSrb)
    };
    checks.push(Check::new(
        expected.0,
        observed,
        (s0, s1) == (expected.1, expected.2),
    ));

    let paths = cfg.paths.unwrap();
    let verdicts = ensemble_verdicts(
        &ifs,
        cfg.r0.unwrap(),
        cfg.steps.unwrap(),
        cfg.seed.unwrap(),
        paths,
        0.5,
        1e-6,
    )?;
    let to0 = verdicts
        .iter()
        .filter(|v| v.converges_to(0.0, 1e-6))
        .count();
    let to1 = verdicts
        .iter()
        .filter(|v| v.converges_to(1.0, 1e-6))
        .count();
    let observed = format!("{to0} -> 0, {to1} -> 1 of {paths}");
    if p1 != 0.5 {
        let hits = if p1 < 0.5 { to1 } else { to0 };
        let target = if p1 < 0.5 { 1 } else { 0 };
        checks.push(Check::new(
            format!("at least 99% of orbits reach within 1e-6 of {target}"),
            observed,
            hits as f64 >= 0.99 * paths as f64,
        ));
    } else {
        checks.push(Check::new(
            "orbits are not captured by a single endpoint",
            observed,
            to0 < paths && to1 < paths,
        ));
    }
    Ok(checks)
}

fn kelly_demo(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Vec<Check>, CliError> {
    let model = kelly_demo_model();
    let kelly = kelly_rule(&model);
    let opponent = Strategy::new(&[0.3, 0.7])?;
    let between = Strategy::new(&[0.4, 0.6])?;
    let (steps, paths, seed) = (cfg.steps.unwrap(), cfg.paths.unwrap(), cfg.seed.unwrap());
    let th = GradeThresholds::default();
    let mut checks = Vec::new();

    let runs = grade_ensemble(
        &model,
        &[kelly.clone(), opponent.clone()],
        &[1.0, 1.0],
        steps,
        seed,
        paths,
        &th,
    )?;
    let dom = runs
        .iter()
        .filter(|r| r[0].grade == Grade::Domination)
        .count();
    checks.push(Check::new(
        "the Kelly investor dominates in at least 99% of runs",
        format!("{dom} of {paths}"),
        dom as f64 >= 0.99 * paths as f64,
    ));

    let runs_b = grade_ensemble(
        &model,
        &[between.clone(), opponent.clone()],
        &[1.0, 1.0],
        steps,
        seed,
        paths,
        &th,
    )?;
    let ext = runs_b
        .iter()
        .filter(|r| r[0].grade == Grade::Extinction)
        .count();
    let check = generalized_kelly_check(&between, &opponent, &model.expected_payoffs())?;
    checks.push(Check::new(
        "a strategy between Kelly and the opponent is not driven out (at most 1% extinct)",
        format!("{ext} of {paths} extinct; termwise {}", check.termwise_ok),
        check.termwise_ok && ext as f64 <= 0.01 * paths as f64,
    ));

    let bridge = drift_bridge(&model, &between, &opponent, cfg.grid.unwrap())?;
    checks.push(Check::new(
        "drift is non-positive when G'(1) <= 0",
        format!(
            "sup phi {:.3e}, G'(1) {:.3e}",
            bridge.sup_phi, bridge.kelly.g_prime_at_one
        ),
        bridge.kelly.aggregate_ok && bridge.sup_phi <= 0.0,
    ));
    w.json(
        "kelly.json",
        &serde_json::json!({
            "model": model,
            "kelly_rule": kelly,
            "opponent": opponent,
            "between": between,
            "kelly_vs_opponent_domination": dom,
            "between_vs_opponent_extinction": ext,
            "generalized_kelly": check,
            "drift_bridge": bridge,
        }),
    )?;
    Ok(checks)
}
