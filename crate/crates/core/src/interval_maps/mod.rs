//! Strictly increasing maps of the unit interval.
//!
//! Every map can be written in exponent form `τ(r) = r^{β(r)}` on `(0, 1)`.
//! The orbit engine drives maps through [`MonotoneMap::step_log_odds`], which
//! works on `z = ln(r / (1 - r))` and never loses precision near the
//! endpoints; [`MonotoneMap::eval`] is the plain evaluation used everywhere
//! else.

mod exponent;
mod fixed_points;
mod piecewise;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{log1mexp, log_pair, log_sigmoid, log_sum_exp, sigmoid};

pub use exponent::{beta, beta_bounds, ExponentBounds, ExponentProfile, BETA_CLAMP};
pub use fixed_points::{
    fixed_points, FixedPoint, FixedPointSet, Sign, SignGap, FIXED_POINT_CELLS, FIXED_POINT_TOL,
};
pub use piecewise::PiecewisePolynomial;

/// Simplex weights must sum to one within this tolerance before renormalizing.
pub(crate) const SIMPLEX_TOL: f64 = 1e-9;

/// Parameters of the two-investor market map
/// `τ(r) = Σ_k R_k λ¹_k r / (λ¹_k r + λ²_k (1 - r))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketParams {
    #[serde(rename = "R")]
    payoff: Vec<f64>,
    lambda1: Vec<f64>,
    lambda2: Vec<f64>,
    #[serde(skip)]
    ln_payoff: Vec<f64>,
    #[serde(skip)]
    ln_ratio: Vec<f64>,
}

impl MarketParams {
    pub fn new(payoff: &[f64], lambda1: &[f64], lambda2: &[f64]) -> Result<Self> {
        let k = payoff.len();
        if k == 0 {
            return Err(Error::invalid("R", "payoff row must not be empty"));
        }
        if lambda1.len() != k || lambda2.len() != k {
            return Err(Error::invalid(
                "lambda",
                format!(
                    "strategy lengths {} and {} do not match {k} assets",
                    lambda1.len(),
                    lambda2.len()
                ),
            ));
        }
        let payoff = normalize_simplex("R", payoff, false)?;
        let lambda1 = normalize_simplex("lambda1", lambda1, true)?;
        let lambda2 = normalize_simplex("lambda2", lambda2, true)?;
        let ln_payoff = payoff.iter().map(|x| x.ln()).collect();
        let ln_ratio = lambda1
            .iter()
            .zip(&lambda2)
            .map(|(a, b)| (a / b).ln())
            .collect();
        Ok(MarketParams {
            payoff,
            lambda1,
            lambda2,
            ln_payoff,
            ln_ratio,
        })
    }

    pub fn payoff(&self) -> &[f64] {
        &self.payoff
    }

    pub fn lambda1(&self) -> &[f64] {
        &self.lambda1
    }

    pub fn lambda2(&self) -> &[f64] {
        &self.lambda2
    }

    fn value(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        if r == 1.0 {
            return 1.0;
        }
        let v: f64 = self
            .payoff
            .iter()
            .zip(self.lambda1.iter().zip(&self.lambda2))
            .map(|(&rk, (&a, &b))| rk * a * r / (a * r + b * (1.0 - r)))
            .sum();
        v.clamp(0.0, 1.0)
    }

    fn derivative(&self, r: f64) -> f64 {
        self.payoff
            .iter()
            .zip(self.lambda1.iter().zip(&self.lambda2))
            .map(|(&rk, (&a, &b))| {
                let d = a * r + b * (1.0 - r);
                rk * a * b / (d * d)
            })
            .sum()
    }

    fn log_image(&self, z: f64) -> (f64, f64) {
        let terms = self.ln_payoff.iter().zip(&self.ln_ratio);
        let ln_tau = log_sum_exp(terms.clone().map(|(lr, c)| lr + log_sigmoid(z + c)));
        let ln_one_minus = log_sum_exp(terms.map(|(lr, c)| lr + log_sigmoid(-(z + c))));
        (ln_tau.min(0.0), ln_one_minus.min(0.0))
    }

    /// `Σ_k R_k λ²_k / λ¹_k`, the exponent limit at 1.
    pub fn beta_at_one(&self) -> f64 {
        self.payoff
            .iter()
            .zip(self.lambda1.iter().zip(&self.lambda2))
            .map(|(&rk, (&a, &b))| rk * b / a)
            .sum()
    }

    /// The value `β` takes at any interior critical point of `β`:
    /// `Σ R_k λ¹λ²/Λ_k² / Σ R_k λ¹/Λ_k` with `Λ_k(r) = λ¹_k r + λ²_k (1 - r)`.
    pub fn critical_exponent(&self, r: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&rk, (&a, &b)) in self
            .payoff
            .iter()
            .zip(self.lambda1.iter().zip(&self.lambda2))
        {
            let l = a * r + b * (1.0 - r);
            num += rk * a * b / (l * l);
            den += rk * a / l;
        }
        num / den
    }
}

/// Validates a probability-like vector and rescales it to sum exactly-ish to 1.
pub(crate) fn normalize_simplex(field: &str, v: &[f64], strict: bool) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(field, "entries must be finite"));
    }
    if strict && v.iter().any(|&x| x <= 0.0) {
        return Err(Error::invalid(field, "weights must be strictly positive"));
    }
    if v.iter().any(|&x| x < 0.0) {
        return Err(Error::invalid(field, "weights must be non-negative"));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::invalid(
            field,
            format!("weights sum to {sum}, expected 1"),
        ));
    }
    Ok(v.iter().map(|x| x / sum).collect())
}

/// The closed-form families a [`MonotoneMap`] can take.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapKind {
    Power { beta: f64 },
    Piecewise(PiecewisePolynomial),
    Market(MarketParams),
    Identity,
}

/// A strictly increasing self-map of `[0, 1]`, with its fixed points
/// analysed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneMap {
    kind: MapKind,
    fixed: std::result::Result<FixedPointSet, Error>,
}

impl Serialize for MonotoneMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.kind.serialize(s)
    }
}

impl MonotoneMap {
    fn from_kind(kind: MapKind) -> Self {
        let mut map = MonotoneMap {
            kind,
            fixed: Err(Error::Inconsistent("fixed points not analysed".into())),
        };
        map.fixed = fixed_points(&map, FIXED_POINT_TOL);
        map
    }

    /// `r ↦ r^β`.
    pub fn power(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(
                "beta",
                format!("exponent must be positive, got {beta}"),
            ));
        }
        Ok(Self::from_kind(MapKind::Power { beta }))
    }

    pub fn piecewise(breaks: &[f64], coeffs: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Self::from_kind(MapKind::Piecewise(
            PiecewisePolynomial::new(breaks, coeffs)?,
        )))
    }

    /// The market map for one state. Use [`crate::market::market_map`] to get
    /// the identity collapse for equal strategies.
    pub fn market(payoff: &[f64], lambda1: &[f64], lambda2: &[f64]) -> Result<Self> {
        Ok(Self::from_kind(MapKind::Market(MarketParams::new(
            payoff, lambda1, lambda2,
        )?)))
    }

    pub fn identity() -> Self {
        Self::from_kind(MapKind::Identity)
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, MapKind::Identity)
    }

    /// Human-readable label used in diagnostics.
    pub fn label(&self) -> String {
        match &self.kind {
            MapKind::Power { beta } => format!("power(beta={beta})"),
            MapKind::Piecewise(p) => format!("piecewise({} pieces)", p.breaks().len() - 1),
            MapKind::Market(m) => format!("market(K={})", m.payoff.len()),
            MapKind::Identity => "identity".into(),
        }
    }

    /// Checked evaluation.
    pub fn eval(&self, r: f64) -> Result<f64> {
        check_unit(r)?;
        Ok(self.apply(r))
    }

    /// Unchecked evaluation for `r` already known to lie in `[0, 1]`.
    pub fn apply(&self, r: f64) -> f64 {
        match &self.kind {
            MapKind::Power { beta } => r.powf(*beta),
            MapKind::Piecewise(p) => p.value(r),
            MapKind::Market(m) => m.value(r),
            MapKind::Identity => r,
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match &self.kind {
            MapKind::Power { beta } => beta * r.powf(beta - 1.0),
            MapKind::Piecewise(p) => p.derivative(r),
            MapKind::Market(m) => m.derivative(r),
            MapKind::Identity => 1.0,
        }
    }

    /// `(ln τ(r), ln(1 - τ(r)))` for the state with log-odds `z`.
    pub fn log_image(&self, z: f64) -> (f64, f64) {
        match &self.kind {
            MapKind::Identity => log_pair(z),
            MapKind::Power { beta } => {
                let (ln_r, _) = log_pair(z);
                let ln_tau = beta * ln_r;
                (ln_tau, log1mexp(ln_tau))
            }
            MapKind::Market(m) => m.log_image(z),
            MapKind::Piecewise(p) => {
                let (ln_r, ln_u) = log_pair(z);
                p.log_image(sigmoid(z), sigmoid(-z), ln_r, ln_u)
            }
        }
    }

    /// One step of the map in log-odds coordinates.
    pub fn step_log_odds(&self, z: f64) -> f64 {
        match &self.kind {
            MapKind::Identity => z,
            _ => {
                let (a, b) = self.log_image(z);
                if a == b {
                    // both infinite cannot happen; equal finite values mean τ = 1/2
                    0.0
                } else {
                    a - b
                }
            }
        }
    }

    /// Exponent `β(r) = ln τ(r) / ln r` for the state with log-odds `z`,
    /// computed without clamping. Used along orbits.
    pub fn beta_log_odds(&self, z: f64) -> f64 {
        match &self.kind {
            MapKind::Power { beta } => *beta,
            MapKind::Identity => 1.0,
            _ => {
                let (ln_r, _) = log_pair(z);
                let (ln_tau, _) = self.log_image(z);
                ln_tau / ln_r
            }
        }
    }

    /// Analytic exponent limits `(β(0⁺), β(1⁻))`.
    pub fn endpoint_limits(&self) -> (Result<f64>, Result<f64>) {
        match &self.kind {
            MapKind::Power { beta } => (Ok(*beta), Ok(*beta)),
            MapKind::Identity => (Ok(1.0), Ok(1.0)),
            MapKind::Market(m) => (Ok(1.0), Ok(m.beta_at_one())),
            MapKind::Piecewise(p) => (p.beta_at_zero(), p.beta_at_one()),
        }
    }

    /// Whether `τ(0) = 0` and `τ(1) = 1` hold exactly.
    pub fn fixes_endpoints(&self) -> bool {
        self.apply(0.0) == 0.0 && self.apply(1.0) == 1.0
    }

    /// Cached fixed-point analysis at the default tolerance.
    pub fn fixed_point_set(&self) -> Result<&FixedPointSet> {
        self.fixed.as_ref().map_err(Clone::clone)
    }
}

pub(crate) fn check_unit(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::Domain { value: r })
    }
}

/// Evaluates `τ(r)`.
pub fn eval_map(map: &MonotoneMap, r: f64) -> Result<f64> {
    map.eval(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::logit;

    fn ex34_first() -> MonotoneMap {
        MonotoneMap::piecewise(
            &[1.0 / 3.0],
            vec![vec![0.0, 0.0, 3.0], vec![-0.5, 3.0, -1.5]],
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        assert!((ex34_first().eval(1.0 / 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(MonotoneMap::identity().eval(0.7).unwrap(), 0.7);
        let m = MonotoneMap::market(&[1.0, 0.0], &[0.5, 0.5], &[0.3, 0.7]).unwrap();
        assert!((m.eval(0.5).unwrap() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_out_of_domain() {
        let m = MonotoneMap::power(2.0).unwrap();
        assert_eq!(m.eval(1.5), Err(Error::Domain { value: 1.5 }));
        assert!(m.eval(-0.1).is_err());
        assert!(m.eval(f64::NAN).is_err());
    }

    #[test]
    fn market_parameters_are_validated() {
        assert!(MonotoneMap::market(&[1.0, 0.0], &[0.0, 1.0], &[0.3, 0.7]).is_err());
        assert!(MonotoneMap::market(&[1.0, 0.0], &[0.6, 0.6], &[0.3, 0.7]).is_err());
        assert!(MonotoneMap::market(&[1.0], &[0.5, 0.5], &[0.3, 0.7]).is_err());
        assert!(MonotoneMap::power(0.0).is_err());
        assert!(MonotoneMap::power(f64::INFINITY).is_err());
    }

    #[test]
    fn assumption_b_endpoints_are_exact() {
        let maps = [
            MonotoneMap::power(2.0).unwrap(),
            MonotoneMap::power(0.5).unwrap(),
            MonotoneMap::market(&[0.3, 0.7], &[0.2, 0.8], &[0.6, 0.4]).unwrap(),
            ex34_first(),
        ];
        for m in &maps {
            assert_eq!(m.apply(0.0), 0.0);
            assert_eq!(m.apply(1.0), 1.0);
            assert!(m.fixes_endpoints());
        }
    }

    #[test]
    fn log_odds_step_agrees_with_plain_evaluation() {
        let maps = [
            MonotoneMap::power(2.0).unwrap(),
            MonotoneMap::power(0.5).unwrap(),
            MonotoneMap::market(&[0.3, 0.7], &[0.2, 0.8], &[0.6, 0.4]).unwrap(),
            ex34_first(),
            MonotoneMap::identity(),
        ];
        for m in &maps {
            for i in 1..200 {
                let r = i as f64 / 200.0;
                let z = m.step_log_odds(logit(r));
                let direct = m.apply(r);
                assert!((sigmoid(z) - direct).abs() < 1e-13, "{} at {r}", m.label());
            }
        }
    }

    #[test]
    fn log_odds_step_keeps_precision_in_tails() {
        let sq = MonotoneMap::power(2.0).unwrap();
        assert!((sq.step_log_odds(-500.0) + 1000.0).abs() < 1e-9);
        let root = MonotoneMap::power(0.5).unwrap();
        // 1 - sqrt(1 - u) ≈ u / 2 for tiny u
        let z = root.step_log_odds(400.0);
        assert!((z - (400.0 + std::f64::consts::LN_2)).abs() < 1e-9);
        assert_eq!(sq.step_log_odds(f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert_eq!(root.step_log_odds(f64::INFINITY), f64::INFINITY);
        let m = MonotoneMap::market(&[1.0, 0.0], &[0.5, 0.5], &[0.3, 0.7]).unwrap();
        assert!((m.step_log_odds(-900.0) - (-900.0 + (0.5f64 / 0.3).ln())).abs() < 1e-9);
    }

    #[test]
    fn strictly_increasing_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let maps = [
            MonotoneMap::power(3.0).unwrap(),
            MonotoneMap::power(0.25).unwrap(),
            MonotoneMap::market(&[0.3, 0.7], &[0.2, 0.8], &[0.6, 0.4]).unwrap(),
            ex34_first(),
        ];
        for m in &maps {
            for _ in 0..10_000 {
                let a: f64 = rng.random();
                let b: f64 = rng.random();
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                if hi - lo < 1e-9 {
                    continue;
                }
                assert!(m.apply(lo) < m.apply(hi), "{} at {lo} < {hi}", m.label());
            }
        }
    }
}
