//! Martingale diagnostics for the exponent process and the arcsine-law
//! statistics of centered partial sums.
//!
//! Along an orbit, `r_t = r_0^{α(t)}` with `α(t) = α_t ⋯ α_1` and
//! `α_t = β_{s_t}(r_{t-1})`. The increments `ln α_t` split into the drift
//! `φ(r_{t-1})` and martingale differences `M_t = ln α_t − φ(r_{t-1})`.

mod arcsine;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::orbit_engine::{IFSystem, Orbit};

pub use arcsine::{
    arcsine_cdf, arcsine_from_series, arcsine_path, coin_flip_arcsine, coin_flip_path,
    ks_to_arcsine, positive_fraction_bound, ArcsineEnsemble, ArcsinePath, FractionBound,
};

/// Exponent decomposition of one orbit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentSeries {
    pub r0: f64,
    /// `α_t` for `t = 1..=T'`.
    pub alpha: Vec<f64>,
    /// `ln α(t)` for `t = 0..=T'` (zero at `t = 0`).
    pub ln_alpha_cum: Vec<f64>,
    /// `φ(r_{t-1})`.
    pub phi: Vec<f64>,
    /// `E((ln α_t − φ)² | r_{t-1})`.
    pub cond_var: Vec<f64>,
    /// `M_t = ln α_t − φ(r_{t-1})`.
    pub m: Vec<f64>,
    /// Set to the step at which the orbit reached 0 or 1 exactly; the series
    /// stops there.
    pub truncated_at: Option<usize>,
}

impl ExponentSeries {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `(1/t) Σ_{i≤t} M_i` at each requested `t` within the series.
    pub fn cesaro_means(&self, checkpoints: &[usize]) -> Vec<f64> {
        cesaro_means(&self.m, checkpoints)
    }
}

/// `(φ, var)` of `ln β_s` at log-odds state `z` under the law `p`.
fn moments_log_odds(ifs: &IFSystem, z: f64) -> (f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (map, &p) in ifs.maps().iter().zip(ifs.probs()) {
        let l = map.beta_log_odds(z).ln();
        m1 += p * l;
        m2 += p * l * l;
    }
    (m1, (m2 - m1 * m1).max(0.0))
}

/// Builds the exponent series of an orbit generated by `ifs`.
pub fn exponent_series(orbit: &Orbit, ifs: &IFSystem) -> Result<ExponentSeries> {
    if !(orbit.r0 > 0.0 && orbit.r0 < 1.0) {
        return Err(Error::Domain { value: orbit.r0 });
    }
    if orbit.log_odds.len() != orbit.states.len() {
        return Err(Error::invalid("orbit", "log-odds states are missing"));
    }
    if let Some(&s) = orbit.symbols.iter().find(|&&s| s >= ifs.len()) {
        return Err(Error::invalid(
            "orbit",
            format!("symbol {s} is not a map of this system"),
        ));
    }
    let steps = orbit.steps();
    let mut out = ExponentSeries {
        r0: orbit.r0,
        alpha: Vec::with_capacity(steps),
        ln_alpha_cum: Vec::with_capacity(steps + 1),
        phi: Vec::with_capacity(steps),
        cond_var: Vec::with_capacity(steps),
        m: Vec::with_capacity(steps),
        truncated_at: None,
    };
    out.ln_alpha_cum.push(0.0);
    let mut acc = 0.0;
    for t in 1..=steps {
        let z = orbit.log_odds[t - 1];
        if !z.is_finite() || !orbit.log_odds[t].is_finite() {
            out.truncated_at = Some(t);
            break;
        }
        let a = ifs.maps()[orbit.symbols[t - 1]].beta_log_odds(z);
        let (phi, var) = moments_log_odds(ifs, z);
        let la = a.ln();
        acc += la;
        out.alpha.push(a);
        out.ln_alpha_cum.push(acc);
        out.phi.push(phi);
        out.cond_var.push(var);
        out.m.push(la - phi);
    }
    Ok(out)
}

/// Running means `(1/t) Σ_{i≤t} x_i` at the given (1-based) checkpoints;
/// checkpoints past the end of `xs` are dropped.
pub fn cesaro_means(xs: &[f64], checkpoints: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0;
    let mut done = 0;
    let mut cps: Vec<usize> = checkpoints
        .iter()
        .copied()
        .filter(|&c| c >= 1 && c <= xs.len())
        .collect();
    cps.sort_unstable();
    for c in cps {
        sum += xs[done..c].iter().sum::<f64>();
        done = c;
        out.push(sum / c as f64);
    }
    out
}

/// Cesàro means of `M_t` for every series in an ensemble.
pub fn slln_check(series: &[ExponentSeries], checkpoints: &[usize]) -> Vec<Vec<f64>> {
    series.iter().map(|s| s.cesaro_means(checkpoints)).collect()
}
