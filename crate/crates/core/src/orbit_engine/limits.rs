use rayon::prelude::*;
use serde::Serialize;

use super::{sample_orbit_stream, IFSystem, Orbit};
use crate::error::{Error, Result};
use crate::interval_maps::check_unit;
use crate::numeric::sigmoid;

/// A state below this (or above `1 -` this) counts as absorbed…
pub const ABSORB_THRESHOLD: f64 = 1e-9;
/// …once it has stayed there for this many consecutive steps.
pub const ABSORB_RUN: usize = 100;
/// Minimum convergence frequency for a grid point to join a basin hull.
pub const BASIN_THRESHOLD: f64 = 0.99;
/// Tail range above which an orbit is declared oscillating.
const OSCILLATION_RANGE: f64 = 0.1;
/// Tail settings used by basin scans when no early absorption happens.
const SCAN_TAIL: f64 = 0.5;
const SCAN_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "x", rename_all = "snake_case")]
pub enum Limit {
    ConvergesTo(f64),
    Oscillating,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitVerdict {
    pub limit: Limit,
    pub tail_mean: f64,
    pub tail_range: f64,
    /// Fraction of tail states within `eps` of the limit (or of the tail mean).
    pub occupation: f64,
    /// Steps actually simulated.
    pub steps: usize,
}

impl LimitVerdict {
    pub fn converges_to(&self, x: f64, eps: f64) -> bool {
        matches!(self.limit, Limit::ConvergesTo(y) if (y - x).abs() <= eps)
    }
}

/// Classifies the tail of a trajectory.
///
/// `ConvergesTo(x)` iff every state in the last `tail_fraction` of the orbit
/// lies within `eps` of `x` and the tail range is below `eps`; `Oscillating`
/// iff the tail range exceeds 0.1; `Undecided` otherwise.
pub fn detect_limit(orbit: &Orbit, tail_fraction: f64, eps: f64) -> Result<LimitVerdict> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::invalid("tail_fraction", "must lie in (0, 1]"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    Ok(tail_verdict(
        &orbit.states,
        tail_fraction,
        eps,
        orbit.steps(),
    ))
}

fn tail_verdict(states: &[f64], tail_fraction: f64, eps: f64, steps: usize) -> LimitVerdict {
    let n = states.len();
    let k = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let tail = &states[n - k..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let range = hi - lo;
    let mean = tail.iter().sum::<f64>() / k as f64;
    let limit = if range < eps {
        let x = if hi < eps {
            0.0
        } else if lo > 1.0 - eps {
            1.0
        } else {
            0.5 * (lo + hi)
        };
        Limit::ConvergesTo(x)
    } else if range > OSCILLATION_RANGE {
        Limit::Oscillating
    } else {
        Limit::Undecided
    };
    let centre = match limit {
        Limit::ConvergesTo(x) => x,
        _ => mean,
    };
    let occupation = tail.iter().filter(|&&x| (x - centre).abs() <= eps).count() as f64 / k as f64;
    LimitVerdict {
        limit,
        tail_mean: mean,
        tail_range: range,
        occupation,
        steps,
    }
}

/// Simulates one orbit and stops early once it is absorbed at an endpoint
/// (state within [`ABSORB_THRESHOLD`] of 0 or 1 for [`ABSORB_RUN`]
/// consecutive steps); otherwise applies [`detect_limit`] with tail
/// fraction 0.5 and `eps = 1e-6`.
pub fn run_to_verdict(
    ifs: &IFSystem,
    r0: f64,
    steps: usize,
    seed: u64,
    stream: u64,
) -> Result<LimitVerdict> {
    check_unit(r0)?;
    let mut sampler = ifs.sampler(seed, stream);
    let mut z = crate::numeric::logit(r0);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(r0);
    let (mut low_run, mut high_run) = (0usize, 0usize);
    for t in 1..=steps {
        z = ifs.maps()[sampler.next_symbol()].step_log_odds(z);
        let r = sigmoid(z);
        states.push(r);
        low_run = if r < ABSORB_THRESHOLD { low_run + 1 } else { 0 };
        high_run = if 1.0 - r < ABSORB_THRESHOLD {
            high_run + 1
        } else {
            0
        };
        if low_run >= ABSORB_RUN || high_run >= ABSORB_RUN {
            let x = if low_run >= ABSORB_RUN { 0.0 } else { 1.0 };
            return Ok(LimitVerdict {
                limit: Limit::ConvergesTo(x),
                tail_mean: r,
                tail_range: 0.0,
                occupation: 1.0,
                steps: t,
            });
        }
    }
    Ok(tail_verdict(&states, SCAN_TAIL, SCAN_EPS, steps))
}

/// Per-point convergence frequencies to `target` and the resulting hull.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinScan {
    pub target: f64,
    pub grid: Vec<f64>,
    pub freqs: Vec<f64>,
    /// Closed hull of grid points with frequency at least [`BASIN_THRESHOLD`];
    /// endpoint membership is not adjudicated.
    pub hull: Option<(f64, f64)>,
    /// Every grid point inside the hull qualifies on its own.
    pub contiguous: bool,
    pub seeds_per_point: usize,
    pub steps: usize,
}

impl BasinScan {
    pub fn hull_member(&self, i: usize) -> bool {
        self.freqs[i] >= BASIN_THRESHOLD
    }

    /// CSV with columns `r0,freq_to_target,hull_member`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r0,freq_to_target,hull_member\n");
        for (i, (r, f)) in self.grid.iter().zip(&self.freqs).enumerate() {
            out.push_str(&format!("{r},{f},{}\n", self.hull_member(i)));
        }
        out
    }
}

/// Convergence frequency to `target` on `grid` uniformly spaced initial
/// points, `seeds_per_point` orbits each. Orbit `j` from point `i` uses
/// stream `i * seeds_per_point + j` of `seed`.
pub fn scan_basin(
    ifs: &IFSystem,
    target: f64,
    grid: usize,
    seeds_per_point: usize,
    steps: usize,
    seed: u64,
) -> Result<BasinScan> {
    check_unit(target)?;
    if grid < 3 {
        return Err(Error::invalid(
            "grid",
            "at least three grid points are required",
        ));
    }
    if seeds_per_point == 0 {
        return Err(Error::invalid("seeds_per_point", "must be positive"));
    }
    let points: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    let freqs: Vec<f64> = points
        .par_iter()
        .enumerate()
        .map(|(i, &r0)| -> Result<f64> {
            let mut hits = 0usize;
            for j in 0..seeds_per_point {
                let stream = (i * seeds_per_point + j) as u64;
                let v = run_to_verdict(ifs, r0, steps, seed, stream)?;
                if v.converges_to(target, SCAN_EPS) {
                    hits += 1;
                }
            }
            Ok(hits as f64 / seeds_per_point as f64)
        })
        .collect::<Result<_>>()?;
    let members: Vec<usize> = (0..grid).filter(|&i| freqs[i] >= BASIN_THRESHOLD).collect();
    let (hull, contiguous) = match (members.first(), members.last()) {
        (Some(&a), Some(&b)) => (Some((points[a], points[b])), members.len() == b - a + 1),
        _ => (None, true),
    };
    Ok(BasinScan {
        target,
        grid: points,
        freqs,
        hull,
        contiguous,
        seeds_per_point,
        steps,
    })
}

/// Simulates `paths` orbits and classifies each tail.
pub fn ensemble_verdicts(
    ifs: &IFSystem,
    r0: f64,
    steps: usize,
    seed: u64,
    paths: usize,
    tail_fraction: f64,
    eps: f64,
) -> Result<Vec<LimitVerdict>> {
    (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let o = sample_orbit_stream(ifs, r0, steps, seed, i)?;
            detect_limit(&o, tail_fraction, eps)
        })
        .collect()
}
