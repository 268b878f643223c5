//! Seeded simulation of the Markov process `r_t = τ_{s_t}(r_{t-1})`.
//!
//! Symbols are drawn i.i.d. from `p` with a ChaCha8 generator keyed by a
//! master seed and a per-orbit stream number, so ensembles can be split across
//! threads and still replay bit-for-bit.

mod limits;
mod measure;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval_maps::{check_unit, MonotoneMap};
use crate::numeric::{logit, sigmoid};

pub use limits::{
    detect_limit, ensemble_verdicts, run_to_verdict, scan_basin, BasinScan, Limit, LimitVerdict,
    ABSORB_RUN, ABSORB_THRESHOLD, BASIN_THRESHOLD,
};
pub use measure::{
    empirical_measure, push_forward, weak_distance, EmpiricalMeasure, DEFAULT_BINS, MAX_ATOMS,
};

/// Probability vectors must sum to one within this tolerance.
pub const PROB_TOL: f64 = 1e-12;

/// `{τ_1, …, τ_L; p_1, …, p_L}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IFSystem {
    maps: Vec<MonotoneMap>,
    #[serde(rename = "p")]
    probs: Vec<f64>,
    #[serde(skip)]
    cdf: Vec<f64>,
    fixes_endpoints: bool,
}

impl IFSystem {
    pub fn new(maps: Vec<MonotoneMap>, probs: Vec<f64>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::invalid("maps", "at least one map is required"));
        }
        if maps.len() != probs.len() {
            return Err(Error::invalid(
                "p",
                format!("{} probabilities for {} maps", probs.len(), maps.len()),
            ));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::invalid(
                "p",
                "probabilities must be strictly positive",
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::invalid(
                "p",
                format!("probabilities sum to {sum}, expected 1"),
            ));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().expect("non-empty") = 1.0;
        let fixes_endpoints = maps.iter().all(MonotoneMap::fixes_endpoints);
        Ok(IFSystem {
            maps,
            probs,
            cdf,
            fixes_endpoints,
        })
    }

    pub fn maps(&self) -> &[MonotoneMap] {
        &self.maps
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Every map fixes both 0 and 1.
    pub fn fixes_endpoints(&self) -> bool {
        self.fixes_endpoints
    }

    pub fn sampler(&self, seed: u64, stream: u64) -> SymbolSampler<'_> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SymbolSampler {
            cdf: &self.cdf,
            rng,
        }
    }
}

/// I.i.d. symbols with law `p` from one generator stream.
pub struct SymbolSampler<'a> {
    cdf: &'a [f64],
    rng: ChaCha8Rng,
}

impl SymbolSampler<'_> {
    pub fn next_symbol(&mut self) -> usize {
        let u: f64 = self.rng.random();
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1)
    }
}

/// Builds a symbol sampler over an arbitrary probability vector (shared with
/// the market simulator so both draw identical streams).
pub(crate) fn symbol_stream(probs: &[f64], seed: u64, stream: u64) -> impl FnMut() -> usize {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    move || {
        let u: f64 = rng.random();
        cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
    }
}

/// A trajectory `r_0, …, r_T` with its (0-based) symbol history.
///
/// States are advanced in log-odds form; `log_odds[t]` is the exact working
/// value and `states[t]` its image in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Orbit {
    pub r0: f64,
    pub seed: Option<u64>,
    pub stream: u64,
    pub symbols: Vec<usize>,
    pub states: Vec<f64>,
    #[serde(skip)]
    pub log_odds: Vec<f64>,
}

impl Orbit {
    /// Number of steps `T`.
    pub fn steps(&self) -> usize {
        self.symbols.len()
    }

    /// CSV with columns `t,symbol,state` (no symbol at `t = 0`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,symbol,state\n");
        for (t, r) in self.states.iter().enumerate() {
            let sym = if t == 0 {
                String::new()
            } else {
                self.symbols[t - 1].to_string()
            };
            out.push_str(&format!("{t},{sym},{r:e}\n"));
        }
        out
    }
}

fn run_symbols(
    ifs: &IFSystem,
    r0: f64,
    steps: usize,
    mut next: impl FnMut() -> usize,
) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let mut symbols = Vec::with_capacity(steps);
    let mut states = Vec::with_capacity(steps + 1);
    let mut zs = Vec::with_capacity(steps + 1);
    let mut z = logit(r0);
    states.push(r0);
    zs.push(z);
    for _ in 0..steps {
        let s = next();
        z = ifs.maps[s].step_log_odds(z);
        symbols.push(s);
        states.push(sigmoid(z));
        zs.push(z);
    }
    (symbols, states, zs)
}

/// Random orbit from `r0` driven by stream 0 of `seed`.
pub fn sample_orbit(ifs: &IFSystem, r0: f64, steps: usize, seed: u64) -> Result<Orbit> {
    sample_orbit_stream(ifs, r0, steps, seed, 0)
}

pub fn sample_orbit_stream(
    ifs: &IFSystem,
    r0: f64,
    steps: usize,
    seed: u64,
    stream: u64,
) -> Result<Orbit> {
    check_unit(r0)?;
    if steps == 0 {
        return Err(Error::invalid("T", "at least one step is required"));
    }
    let mut sampler = ifs.sampler(seed, stream);
    let (symbols, states, log_odds) = run_symbols(ifs, r0, steps, || sampler.next_symbol());
    Ok(Orbit {
        r0,
        seed: Some(seed),
        stream,
        symbols,
        states,
        log_odds,
    })
}

/// Deterministic orbit along a prescribed 0-based symbol sequence.
pub fn orbit_from_symbols(ifs: &IFSystem, r0: f64, symbols: &[usize]) -> Result<Orbit> {
    check_unit(r0)?;
    if let Some(&s) = symbols.iter().find(|&&s| s >= ifs.len()) {
        return Err(Error::invalid(
            "symbols",
            format!("symbol {s} out of range"),
        ));
    }
    let mut it = symbols.iter().copied();
    let (symbols, states, log_odds) = run_symbols(ifs, r0, symbols.len(), || {
        it.next().expect("length checked")
    });
    Ok(Orbit {
        r0,
        seed: None,
        stream: 0,
        symbols,
        states,
        log_odds,
    })
}

/// `paths` orbits from `r0`, orbit `i` on stream `i`, computed in parallel.
pub fn sample_ensemble(
    ifs: &IFSystem,
    r0: f64,
    steps: usize,
    seed: u64,
    paths: usize,
) -> Result<Vec<Orbit>> {
    (0..paths as u64)
        .into_par_iter()
        .map(|i| sample_orbit_stream(ifs, r0, steps, seed, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex51(p1: f64) -> IFSystem {
        IFSystem::new(
            vec![
                MonotoneMap::power(2.0).unwrap(),
                MonotoneMap::power(0.5).unwrap(),
            ],
            vec![p1, 1.0 - p1],
        )
        .unwrap()
    }

    #[test]
    fn validates_probabilities() {
        let m = || MonotoneMap::power(2.0).unwrap();
        assert!(IFSystem::new(vec![m(), m()], vec![0.5, 0.4]).is_err());
        assert!(IFSystem::new(vec![m(), m()], vec![1.0, 0.0]).is_err());
        assert!(IFSystem::new(vec![m()], vec![0.5, 0.5]).is_err());
        assert!(IFSystem::new(vec![], vec![]).is_err());
        assert!(IFSystem::new(vec![m(), m()], vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn endpoints_are_absorbing() {
        let ifs = ex51(0.5);
        assert!(ifs.fixes_endpoints());
        for r0 in [0.0, 1.0] {
            let o = sample_orbit(&ifs, r0, 500, 9).unwrap();
            assert!(o.states.iter().all(|&r| r == r0));
        }
    }

    #[test]
    fn forced_square_then_root() {
        let o = orbit_from_symbols(&ex51(0.5), 0.25, &[0, 1]).unwrap();
        assert_eq!(o.states.len(), 3);
        assert!((o.states[1] - 0.0625).abs() < 1e-16);
        assert!((o.states[2] - 0.25).abs() < 1e-16);
    }

    #[test]
    fn replay_is_bit_identical() {
        let ifs = ex51(0.4);
        let a = sample_orbit_stream(&ifs, 0.3, 2000, 5, 7).unwrap();
        let b = sample_orbit_stream(&ifs, 0.3, 2000, 5, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_orbit_stream(&ifs, 0.3, 2000, 5, 8).unwrap();
        assert_ne!(a.symbols, c.symbols);
    }

    #[test]
    fn symbol_frequencies_follow_p() {
        let ifs = ex51(0.3);
        let mut s = ifs.sampler(1, 0);
        let n = 200_000;
        let ones = (0..n).filter(|_| s.next_symbol() == 0).count();
        assert!((ones as f64 / n as f64 - 0.3).abs() < 0.005);
    }

    #[test]
    fn states_follow_the_maps() {
        let ifs = ex51(0.5);
        let o = sample_orbit(&ifs, 0.6, 50, 3).unwrap();
        for t in 1..=o.steps() {
            let expected = ifs.maps()[o.symbols[t - 1]].apply(o.states[t - 1]);
            assert!((o.states[t] - expected).abs() <= 1e-12 * expected.max(1e-300));
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let o = orbit_from_symbols(&ex51(0.5), 0.25, &[0]).unwrap();
        let csv = o.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,symbol,state");
        assert!(lines[1].starts_with("0,,"));
        assert!(lines[2].starts_with("1,0,"));
    }
}
