use serde::Serialize;

use super::{check_unit, MapKind, MonotoneMap};
use crate::error::{Error, Result};
use crate::numeric::logit;

/// Interior evaluation of `β` is clamped to `[BETA_CLAMP, 1 - BETA_CLAMP]`.
pub const BETA_CLAMP: f64 = 1e-12;

/// `β(r) = ln τ(r) / ln r`, with analytic limits at the endpoints.
pub fn beta(map: &MonotoneMap, r: f64) -> Result<f64> {
    check_unit(r)?;
    if r == 0.0 {
        return map.endpoint_limits().0;
    }
    if r == 1.0 {
        return map.endpoint_limits().1;
    }
    let r = r.clamp(BETA_CLAMP, 1.0 - BETA_CLAMP);
    match map.kind() {
        MapKind::Power { beta } => Ok(*beta),
        MapKind::Identity => Ok(1.0),
        _ => {
            let z = logit(r);
            let (ln_tau, ln_one_minus) = map.log_image(z);
            if ln_tau == f64::NEG_INFINITY || ln_one_minus == f64::NEG_INFINITY {
                return Err(Error::BadMap {
                    r,
                    image: if ln_tau == f64::NEG_INFINITY {
                        0.0
                    } else {
                        1.0
                    },
                });
            }
            let (ln_r, _) = crate::numeric::log_pair(z);
            Ok(ln_tau / ln_r)
        }
    }
}

/// Grid bounds `b ≤ β ≤ B` on a closed sub-interval. These are empirical:
/// they hold at the sampled points, the endpoint limits inside `U`, and any
/// interior critical points of `β` located by bisection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentBounds {
    pub lo: f64,
    pub hi: f64,
    pub b: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    pub critical_points: Vec<f64>,
    pub kind: &'static str,
}

pub fn beta_bounds(map: &MonotoneMap, u: (f64, f64), grid_size: usize) -> Result<ExponentBounds> {
    let (lo, hi) = u;
    check_unit(lo)?;
    check_unit(hi)?;
    if lo > hi {
        return Err(Error::invalid("U", format!("empty interval [{lo}, {hi}]")));
    }
    if grid_size < 2 {
        return Err(Error::invalid(
            "grid_size",
            "at least two grid points are required",
        ));
    }
    let pts: Vec<f64> = (0..grid_size)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_size - 1) as f64)
        .collect();
    let mut b = f64::INFINITY;
    let mut big_b = f64::NEG_INFINITY;
    for &r in &pts {
        let v = beta(map, r)?;
        b = b.min(v);
        big_b = big_b.max(v);
    }

    let mut critical_points = Vec::new();
    if !matches!(map.kind(), MapKind::Power { .. } | MapKind::Identity) {
        // β'(r) has the sign of q(r) = r τ'(r)/τ(r) - β(r) divided by r ln r < 0
        let q = |r: f64| -> Option<f64> {
            if r <= 0.0 || r >= 1.0 {
                return None;
            }
            let tau = map.apply(r);
            let v = beta(map, r).ok()?;
            Some(r * map.derivative(r) / tau - v)
        };
        let inner: Vec<(f64, f64)> = pts.iter().filter_map(|&r| q(r).map(|v| (r, v))).collect();
        for w in inner.windows(2) {
            let ((a, qa), (c, qc)) = (w[0], w[1]);
            if qa.signum() != qc.signum() && qa != 0.0 && qc != 0.0 {
                let (mut x0, mut x1, s0) = (a, c, qa.signum());
                for _ in 0..80 {
                    let m = 0.5 * (x0 + x1);
                    match q(m) {
                        Some(v) if v.signum() == s0 => x0 = m,
                        Some(_) => x1 = m,
                        None => break,
                    }
                }
                let rs = 0.5 * (x0 + x1);
                let value = match map.kind() {
                    MapKind::Market(m) => m.critical_exponent(rs),
                    _ => beta(map, rs)?,
                };
                critical_points.push(rs);
                b = b.min(value);
                big_b = big_b.max(value);
            }
        }
    }
    Ok(ExponentBounds {
        lo,
        hi,
        b,
        big_b,
        critical_points,
        kind: "empirical",
    })
}

/// `β` for one map together with its endpoint limits and bounds on `[0, 1]`.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentProfile {
    #[serde(skip)]
    map: MonotoneMap,
    pub at_zero: Option<f64>,
    pub at_one: Option<f64>,
    pub bounds: Option<ExponentBounds>,
}

impl ExponentProfile {
    pub fn new(map: &MonotoneMap, grid_size: usize) -> Self {
        let (z, o) = map.endpoint_limits();
        ExponentProfile {
            map: map.clone(),
            at_zero: z.ok(),
            at_one: o.ok(),
            bounds: beta_bounds(map, (0.0, 1.0), grid_size).ok(),
        }
    }

    pub fn beta(&self, r: f64) -> Result<f64> {
        beta(&self.map, r)
    }

    /// Whether `0 < b ≤ β ≤ B < ∞` was established on all of `[0, 1]`.
    pub fn is_bounded(&self) -> bool {
        self.bounds
            .as_ref()
            .is_some_and(|b| b.b > 0.0 && b.big_b.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_and_root_exponents() {
        let sq = MonotoneMap::power(2.0).unwrap();
        assert_eq!(beta(&sq, 0.3).unwrap(), 2.0);
        let root = MonotoneMap::power(0.5).unwrap();
        for &r in &[0.0, 1e-7, 0.4, 0.99, 1.0] {
            assert_eq!(beta(&root, r).unwrap(), 0.5);
        }
        let bb = beta_bounds(&sq, (0.0, 1.0), 100).unwrap();
        assert_eq!((bb.b, bb.big_b), (2.0, 2.0));
    }

    #[test]
    fn market_exponent_limits() {
        let m = MonotoneMap::market(&[1.0, 0.0], &[0.5, 0.5], &[0.3, 0.7]).unwrap();
        assert_eq!(beta(&m, 0.0).unwrap(), 1.0);
        assert!((beta(&m, 1.0).unwrap() - 0.6).abs() < 1e-15);
        let bb = beta_bounds(&m, (0.0, 1.0), 1000).unwrap();
        assert!(bb.b > 0.0 && bb.big_b.is_finite());
        assert!(bb.b <= 0.6 && 0.6 <= bb.big_b);
        assert!(bb.b <= 1.0 && 1.0 <= bb.big_b);
    }

    #[test]
    fn market_exponent_near_zero_follows_slope() {
        // β(r) - 1 ≈ ln τ'(0) / ln r for small r
        let m = MonotoneMap::market(&[1.0, 0.0], &[0.5, 0.5], &[0.3, 0.7]).unwrap();
        let slope0 = m.derivative(0.0);
        for &r in &[1e-6, 1e-9, 1e-12] {
            let got = beta(&m, r).unwrap();
            let predicted = 1.0 + slope0.ln() / f64::ln(r);
            assert!(
                (got - predicted).abs() < 1e-6,
                "r = {r}: {got} vs {predicted}"
            );
        }
        // along orbits the exponent is evaluated without the clamp
        let z = crate::numeric::logit(1e-200);
        let predicted = 1.0 + slope0.ln() / f64::ln(1e-200);
        assert!((m.beta_log_odds(z) - predicted).abs() < 1e-9);
    }

    #[test]
    fn piecewise_limit_rules() {
        let m = MonotoneMap::piecewise(
            &[1.0 / 3.0],
            vec![vec![0.0, 0.0, 3.0], vec![-0.5, 3.0, -1.5]],
        )
        .unwrap();
        assert_eq!(beta(&m, 0.0).unwrap(), 2.0);
        assert!(matches!(beta(&m, 1.0), Err(Error::UndefinedLimit { .. })));
        assert!(beta(&m, 1.5).is_err());
    }

    #[test]
    fn bounds_cover_dense_oracle() {
        let m = MonotoneMap::market(&[0.3, 0.7], &[0.2, 0.8], &[0.6, 0.4]).unwrap();
        let bb = beta_bounds(&m, (0.0, 1.0), 2000).unwrap();
        for i in 1..100_000 {
            let v = beta(&m, i as f64 / 100_000.0).unwrap();
            assert!(v >= bb.b - 1e-9 && v <= bb.big_b + 1e-9);
        }
    }
}
