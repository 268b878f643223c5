//! Evolutionary asset market with short-lived assets.
//!
//! `I` investors split their wealth over `K` assets with fixed proportions
//! `λ^i`. Each period a state `s` is drawn with probability `p_s`, asset `k`
//! pays `D_k(s)` and the payoffs are shared according to holdings. Wealth
//! shares then evolve by
//!
//! `r^i_{t+1} = Σ_k R_k(s_{t+1}) λ^i_k r^i_t / Σ_j λ^j_k r^j_t`,
//!
//! which for two investors is the interval IFS built by [`build_market_ifs`].

mod grade;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval_maps::{normalize_simplex, MonotoneMap};
use crate::numeric::log_sum_exp;
use crate::orbit_engine::{symbol_stream, IFSystem, PROB_TOL};

pub use grade::{grade_outcome, grade_run, Grade, GradeThresholds, OutcomeGrade};

/// Tolerance on `Σ_i x^i_k = 1` at every step.
pub const CLEARING_TOL: f64 = 1e-9;
/// Slack allowed when checking the sign of `G'(1)` and the drift chain.
pub const KELLY_TOL: f64 = 1e-12;
/// Relative pivot threshold of the rank test on the payoff matrix.
const RANK_TOL: f64 = 1e-10;

/// Column-normalizes `D[k][s]` into relative payoffs `R_k(s) = D_k(s) / Σ_m D_m(s)`.
/// The last asset absorbs rounding so every column sums to 1.
pub fn relative_payoffs(d: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = d.len();
    if k == 0 {
        return Err(Error::invalid("D", "at least one asset is required"));
    }
    let l = d[0].len();
    if l == 0 || d.iter().any(|row| row.len() != l) {
        return Err(Error::invalid(
            "D",
            "payoff rows must be non-empty and of equal length",
        ));
    }
    if d.iter().flatten().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::invalid(
            "D",
            "payoffs must be finite and non-negative",
        ));
    }
    let mut r = vec![vec![0.0; l]; k];
    for s in 0..l {
        let total: f64 = d.iter().map(|row| row[s]).sum();
        if total <= 0.0 {
            return Err(Error::ZeroPayoffColumn { state: s });
        }
        let mut acc = 0.0;
        for m in 0..k - 1 {
            r[m][s] = d[m][s] / total;
            acc += r[m][s];
        }
        r[k - 1][s] = if d[k - 1][s] == 0.0 {
            0.0
        } else {
            (1.0 - acc).max(0.0)
        };
    }
    Ok(r)
}

/// A completely mixed fixed-proportion strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Strategy(Vec<f64>);

impl Strategy {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("strategy", "at least one asset is required"));
        }
        normalize_simplex("strategy", weights, true).map(Strategy)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for Strategy {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Strategy::new(&v)
    }
}

impl From<Strategy> for Vec<f64> {
    fn from(s: Strategy) -> Self {
        s.0
    }
}

/// Payoff matrix, state law and the derived relative payoffs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketModel {
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
    p: Vec<f64>,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
}

impl MarketModel {
    /// `d[k][s]` is the payoff of asset `k` in state `s`.
    pub fn new(d: Vec<Vec<f64>>, p: Vec<f64>) -> Result<Self> {
        let r = relative_payoffs(&d)?;
        let l = d[0].len();
        if p.len() != l {
            return Err(Error::invalid(
                "p",
                format!("{} probabilities for {l} states", p.len()),
            ));
        }
        if p.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::invalid(
                "p",
                "probabilities must be strictly positive",
            ));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::invalid(
                "p",
                format!("probabilities sum to {sum}, expected 1"),
            ));
        }
        for (k, row) in d.iter().enumerate() {
            let mean: f64 = row.iter().zip(&p).map(|(x, q)| x * q).sum();
            if mean <= 0.0 {
                return Err(Error::invalid(
                    "D",
                    format!("asset {k} has zero expected payoff"),
                ));
            }
        }
        Ok(MarketModel { d, p, r })
    }

    pub fn assets(&self) -> usize {
        self.d.len()
    }

    pub fn states(&self) -> usize {
        self.p.len()
    }

    pub fn payoffs(&self) -> &[Vec<f64>] {
        &self.d
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn relative(&self) -> &[Vec<f64>] {
        &self.r
    }

    /// `(R_1(s), …, R_K(s))`.
    pub fn payoff_row(&self, s: usize) -> Vec<f64> {
        self.r.iter().map(|row| row[s]).collect()
    }

    /// `v_k = Σ_s p_s R_k(s)`.
    pub fn expected_payoffs(&self) -> Vec<f64> {
        self.r
            .iter()
            .map(|row| row.iter().zip(&self.p).map(|(x, q)| x * q).sum())
            .collect()
    }

    /// Whether the functions `s ↦ R_k(s)` are linearly independent (no
    /// redundant assets). Reported, never enforced.
    pub fn payoffs_independent(&self) -> bool {
        numerical_rank(&self.r) == self.assets()
    }

    fn check_strategy(&self, s: &Strategy) -> Result<()> {
        if s.len() != self.assets() {
            return Err(Error::invalid(
                "strategy",
                format!("{} weights for {} assets", s.len(), self.assets()),
            ));
        }
        Ok(())
    }
}

/// Gaussian elimination with partial pivoting.
fn numerical_rank(rows: &[Vec<f64>]) -> usize {
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let n_cols = a.first().map_or(0, Vec::len);
    let scale = a.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for c in 0..n_cols {
        if rank == a.len() {
            break;
        }
        let piv = (rank..a.len())
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .expect("non-empty range");
        if a[piv][c].abs() <= RANK_TOL * scale {
            continue;
        }
        a.swap(rank, piv);
        let (top, below) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in below {
            let f = row[c] / pivot_row[c];
            for (x, y) in row[c..n_cols].iter_mut().zip(&pivot_row[c..n_cols]) {
                *x -= f * y;
            }
        }
        rank += 1;
    }
    rank
}

/// The Kelly rule `λ*_k = Σ_s p_s R_k(s)`.
pub fn kelly_rule(model: &MarketModel) -> Strategy {
    Strategy(normalize(model.expected_payoffs()))
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Share map of investor 1 against investor 2 in a state with relative
/// payoffs `row`. Collapses to the identity when the strategies agree on
/// every asset that pays.
pub fn market_map(row: &[f64], lambda1: &Strategy, lambda2: &Strategy) -> Result<MonotoneMap> {
    if row.len() != lambda1.len() || row.len() != lambda2.len() {
        return Err(Error::invalid(
            "strategy",
            "strategy and payoff lengths differ",
        ));
    }
    let same = row
        .iter()
        .zip(lambda1.weights().iter().zip(lambda2.weights()))
        .all(|(&rk, (a, b))| rk == 0.0 || a == b);
    if same {
        return Ok(MonotoneMap::identity());
    }
    MonotoneMap::market(row, lambda1.weights(), lambda2.weights())
}

/// The two-investor market as an IFS on investor 1's share.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketIfs {
    pub ifs: IFSystem,
    /// Every map is the identity: shares never move.
    pub degenerate: bool,
}

pub fn build_market_ifs(
    model: &MarketModel,
    lambda1: &Strategy,
    lambda2: &Strategy,
) -> Result<MarketIfs> {
    model.check_strategy(lambda1)?;
    model.check_strategy(lambda2)?;
    let maps = (0..model.states())
        .map(|s| market_map(&model.payoff_row(s), lambda1, lambda2))
        .collect::<Result<Vec<_>>>()?;
    let degenerate = maps.iter().all(MonotoneMap::is_identity);
    Ok(MarketIfs {
        ifs: IFSystem::new(maps, model.probs().to_vec())?,
        degenerate,
    })
}

/// Outcome of the survival test for investor 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KellyCheck {
    /// Each `λ¹_k` lies between `v_k` and `λ²_k`.
    pub termwise_ok: bool,
    /// `G'(1) ≤ 0`.
    pub aggregate_ok: bool,
    pub g_prime_at_one: f64,
}

/// Generalized Kelly test. The termwise condition makes every term of
/// `G'(1) = Σ (v_k/λ¹_k)(λ²_k − λ¹_k)` non-positive, so a termwise pass
/// without an aggregate pass is reported as an inconsistency.
pub fn generalized_kelly_check(
    lambda1: &Strategy,
    lambda2: &Strategy,
    v: &[f64],
) -> Result<KellyCheck> {
    if lambda1.len() != v.len() || lambda2.len() != v.len() {
        return Err(Error::invalid("v", "vector lengths differ"));
    }
    let v = normalize_simplex("v", v, true)?;
    let mut termwise_ok = true;
    let mut g1 = 0.0;
    for ((&a, &b), &vk) in lambda1.weights().iter().zip(lambda2.weights()).zip(&v) {
        let (lo, hi) = if vk <= b { (vk, b) } else { (b, vk) };
        if a < lo || a > hi {
            termwise_ok = false;
        }
        g1 += vk / a * (b - a);
    }
    let aggregate_ok = g1 <= KELLY_TOL;
    if termwise_ok && !aggregate_ok {
        return Err(Error::Inconsistent(format!(
            "termwise Kelly condition holds but G'(1) = {g1} > 0"
        )));
    }
    Ok(KellyCheck {
        termwise_ok,
        aggregate_ok,
        g_prime_at_one: g1,
    })
}

/// `G(r) = Σ v_k λ¹_k / Λ_k(r)` with `Λ_k(r) = λ¹_k r + λ²_k (1 − r)`.
pub fn g_function(lambda1: &Strategy, lambda2: &Strategy, v: &[f64], r: f64) -> Result<f64> {
    crate::interval_maps::check_unit(r)?;
    if lambda1.len() != v.len() || lambda2.len() != v.len() {
        return Err(Error::invalid("v", "vector lengths differ"));
    }
    Ok(lambda1
        .weights()
        .iter()
        .zip(lambda2.weights())
        .zip(v)
        .map(|((&a, &b), &vk)| vk * a / (a * r + b * (1.0 - r)))
        .sum())
}

/// Grid diagnostics of `G` and of the drift chain
/// `φ(r) ≤ ln Σ_s p_s β_s(r) ≤ ln(1 + ln G(r)/ln r) ≤ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftBridge {
    pub kelly: KellyCheck,
    pub g_at_one: f64,
    /// Smallest second difference of `G` on the grid.
    pub min_second_difference: f64,
    /// `max (φ − ln Σ p β)`: Jensen step.
    pub max_jensen_gap: f64,
    /// `max (ln Σ p β − ln(1 + ln G / ln r))`.
    pub max_middle_gap: f64,
    /// `max ln(1 + ln G / ln r)`.
    pub max_bound: f64,
    /// `sup φ` over the grid.
    pub sup_phi: f64,
    /// Every link of the chain holds within [`KELLY_TOL`] at every grid point.
    pub chain_holds: bool,
    /// Grid point with the largest violation, if any.
    pub worst_point: Option<f64>,
}

/// Evaluates the drift chain on the grid `i / (grid + 1)`.
pub fn drift_bridge(
    model: &MarketModel,
    lambda1: &Strategy,
    lambda2: &Strategy,
    grid: usize,
) -> Result<DriftBridge> {
    if grid < 3 {
        return Err(Error::invalid(
            "grid",
            "at least three grid points are required",
        ));
    }
    let v = model.expected_payoffs();
    let kelly = generalized_kelly_check(lambda1, lambda2, &v)?;
    let mi = build_market_ifs(model, lambda1, lambda2)?;
    let g_at_one = g_function(lambda1, lambda2, &v, 1.0)?;

    let h = 1.0 / (grid + 1) as f64;
    let pts: Vec<f64> = (1..=grid).map(|i| i as f64 * h).collect();
    let g: Vec<f64> = pts
        .iter()
        .map(|&r| g_function(lambda1, lambda2, &v, r))
        .collect::<Result<_>>()?;
    let min_second_difference = g
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min);

    let mut out = DriftBridge {
        kelly,
        g_at_one,
        min_second_difference,
        max_jensen_gap: f64::NEG_INFINITY,
        max_middle_gap: f64::NEG_INFINITY,
        max_bound: f64::NEG_INFINITY,
        sup_phi: f64::NEG_INFINITY,
        chain_holds: true,
        worst_point: None,
    };
    let mut worst = 0.0;
    for (&r, &gr) in pts.iter().zip(&g) {
        let mut phi = 0.0;
        let mut mean_beta = 0.0;
        for (map, &p) in mi.ifs.maps().iter().zip(mi.ifs.probs()) {
            let b = crate::interval_maps::beta(map, r)?;
            phi += p * b.ln();
            mean_beta += p * b;
        }
        let middle = mean_beta.ln();
        let bound = (1.0 + gr.ln() / r.ln()).ln();
        let gaps = [phi - middle, middle - bound, bound];
        out.max_jensen_gap = out.max_jensen_gap.max(gaps[0]);
        out.max_middle_gap = out.max_middle_gap.max(gaps[1]);
        out.max_bound = out.max_bound.max(gaps[2]);
        out.sup_phi = out.sup_phi.max(phi);
        let violation = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if violation > KELLY_TOL {
            out.chain_holds = false;
            if violation > worst {
                worst = violation;
                out.worst_point = Some(r);
            }
        }
    }
    Ok(out)
}

/// Share trajectories of a simulated market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketTrajectory {
    pub seed: u64,
    pub stream: u64,
    /// 0-based states `s_1, …, s_T`.
    pub symbols: Vec<usize>,
    /// `shares[t][i] = r^i_t`.
    pub shares: Vec<Vec<f64>>,
    /// Total wealth `w_t`; `w_0` is the initial endowment and afterwards
    /// `w_t = Σ_k D_k(s_t)`.
    pub total_wealth: Vec<f64>,
    /// Largest `|Σ_i x^i_k − 1|` seen.
    pub max_clearing_error: f64,
    /// Largest `|Σ_i r^i_t − 1|` seen.
    pub max_share_error: f64,
}

impl MarketTrajectory {
    pub fn investors(&self) -> usize {
        self.shares[0].len()
    }

    /// `r^i_0, …, r^i_T`.
    pub fn investor(&self, i: usize) -> Vec<f64> {
        self.shares.iter().map(|row| row[i]).collect()
    }

    /// Wealth `w^i_t = r^i_t w_t`.
    pub fn wealth(&self, t: usize, i: usize) -> f64 {
        self.shares[t][i] * self.total_wealth[t]
    }

    /// Prices `p_{t,k} = Σ_i λ^i_k w^i_t`.
    pub fn prices(&self, strategies: &[Strategy], t: usize) -> Vec<f64> {
        let k = strategies[0].len();
        (0..k)
            .map(|a| {
                strategies
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s.weights()[a] * self.wealth(t, i))
                    .sum()
            })
            .collect()
    }

    /// CSV with columns `t,s_t,r^1..r^I` (empty state at `t = 0`, states 1-based).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,s_t");
        for i in 1..=self.investors() {
            out.push_str(&format!(",r^{i}"));
        }
        out.push('\n');
        for (t, row) in self.shares.iter().enumerate() {
            out.push_str(&t.to_string());
            out.push(',');
            if t > 0 {
                out.push_str(&(self.symbols[t - 1] + 1).to_string());
            }
            for x in row {
                out.push_str(&format!(",{x:e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn validate_run(model: &MarketModel, strategies: &[Strategy], w0: &[f64]) -> Result<()> {
    if strategies.len() < 2 {
        return Err(Error::invalid(
            "strategies",
            "at least two investors are required",
        ));
    }
    for s in strategies {
        model.check_strategy(s)?;
    }
    if w0.len() != strategies.len() {
        return Err(Error::invalid(
            "w0",
            format!("{} wealths for {} investors", w0.len(), strategies.len()),
        ));
    }
    if w0.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
        return Err(Error::invalid("w0", "initial wealths must be positive"));
    }
    Ok(())
}

/// Simulates the general-`I` share dynamics on stream 0 of `seed`.
pub fn simulate_market(
    model: &MarketModel,
    strategies: &[Strategy],
    w0: &[f64],
    steps: usize,
    seed: u64,
) -> Result<MarketTrajectory> {
    simulate_market_stream(model, strategies, w0, steps, seed, 0)
}

/// Simulates on a given generator stream. States are drawn exactly as
/// [`IFSystem::sampler`] draws symbols, so for `I = 2` the share of investor 1
/// follows the orbit of [`build_market_ifs`] under the same seed and stream.
///
/// Shares are carried as logarithms and renormalized each step; they stay
/// positive without flooring.
pub fn simulate_market_stream(
    model: &MarketModel,
    strategies: &[Strategy],
    w0: &[f64],
    steps: usize,
    seed: u64,
    stream: u64,
) -> Result<MarketTrajectory> {
    validate_run(model, strategies, w0)?;
    if steps == 0 {
        return Err(Error::invalid("T", "at least one step is required"));
    }
    let n = strategies.len();
    let k = model.assets();
    let ln_lambda: Vec<Vec<f64>> = strategies
        .iter()
        .map(|s| s.weights().iter().map(|x| x.ln()).collect())
        .collect();
    let ln_r: Vec<Vec<f64>> = (0..model.states())
        .map(|s| model.payoff_row(s).iter().map(|x| x.ln()).collect())
        .collect();
    let w_total: f64 = w0.iter().sum();
    let mut ls: Vec<f64> = w0.iter().map(|w| (w / w_total).ln()).collect();

    let mut next = symbol_stream(model.probs(), seed, stream);
    let mut symbols = Vec::with_capacity(steps);
    let mut shares = Vec::with_capacity(steps + 1);
    let mut total_wealth = Vec::with_capacity(steps + 1);
    shares.push(ls.iter().map(|x| x.exp()).collect::<Vec<f64>>());
    total_wealth.push(w_total);
    let mut max_clearing_error = 0.0_f64;
    let mut max_share_error = (shares[0].iter().sum::<f64>() - 1.0).abs();

    // ln of each asset's price per unit of total wealth, and each investor's
    // log-holding ln x^i_k.
    let mut ln_price = vec![0.0; k];
    let mut next_ls = vec![0.0; n];
    let mut terms = vec![0.0; n.max(k)];
    for t in 1..=steps {
        for a in 0..k {
            for i in 0..n {
                terms[i] = ln_lambda[i][a] + ls[i];
            }
            ln_price[a] = log_sum_exp(terms[..n].iter().copied());
            let clearing: f64 = (0..n).map(|i| (terms[i] - ln_price[a]).exp()).sum();
            let err = (clearing - 1.0).abs();
            max_clearing_error = max_clearing_error.max(err);
            if err > CLEARING_TOL {
                return Err(Error::ClearingDrift {
                    step: t,
                    error: err,
                });
            }
        }
        let s = next();
        for i in 0..n {
            for a in 0..k {
                terms[a] = ln_r[s][a] + ln_lambda[i][a] + ls[i] - ln_price[a];
            }
            next_ls[i] = log_sum_exp(terms[..k].iter().copied());
        }
        let norm = log_sum_exp(next_ls.iter().copied());
        for x in next_ls.iter_mut() {
            *x -= norm;
        }
        std::mem::swap(&mut ls, &mut next_ls);
        let row: Vec<f64> = ls.iter().map(|x| x.exp()).collect();
        max_share_error = max_share_error.max((row.iter().sum::<f64>() - 1.0).abs());
        shares.push(row);
        symbols.push(s);
        total_wealth.push(model.payoffs().iter().map(|d| d[s]).sum());
    }
    Ok(MarketTrajectory {
        seed,
        stream,
        symbols,
        shares,
        total_wealth,
        max_clearing_error,
        max_share_error,
    })
}

/// `runs` independent simulations (run `j` on stream `j`), each graded.
pub fn grade_ensemble(
    model: &MarketModel,
    strategies: &[Strategy],
    w0: &[f64],
    steps: usize,
    seed: u64,
    runs: usize,
    thresholds: &GradeThresholds,
) -> Result<Vec<Vec<OutcomeGrade>>> {
    validate_run(model, strategies, w0)?;
    (0..runs as u64)
        .into_par_iter()
        .map(|j| {
            let traj = simulate_market_stream(model, strategies, w0, steps, seed, j)?;
            grade_run(&traj, thresholds)
        })
        .collect()
}

/// Market definition as read from a JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub w0: Vec<f64>,
}

impl MarketConfig {
    pub fn model(&self) -> Result<MarketModel> {
        if self.d.len() != self.k || self.d.iter().any(|row| row.len() != self.l) {
            return Err(Error::invalid(
                "D",
                format!("expected a {}×{} matrix", self.k, self.l),
            ));
        }
        MarketModel::new(self.d.clone(), self.p.clone())
    }
}
