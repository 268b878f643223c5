use serde::Serialize;

use super::graph::CanonicalPoints;
use crate::error::{Error, Result};
use crate::interval_maps::{beta, beta_bounds, ExponentBounds};
use crate::orbit_engine::IFSystem;

/// Default number of interior grid points.
pub const DRIFT_GRID: usize = 10_000;
/// Sign decisions on `φ` ignore magnitudes below this.
pub const DRIFT_TOL: f64 = 1e-12;
/// The variance rule needs a floor strictly above this.
pub const VARIANCE_FLOOR_MIN: f64 = 1e-8;
/// The variance floor is taken over `(VARIANCE_MARGIN, 1 - VARIANCE_MARGIN)`.
const VARIANCE_MARGIN: f64 = 1e-6;

/// Coarse constant-bound quantities `Σ p_s ln B_s` and `Σ p_s ln b_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantBoundDrift {
    pub sum_p_ln_upper: f64,
    pub sum_p_ln_lower: f64,
}

/// `φ(r) = Σ_s p_s ln β_s(r)` and the conditional variance of `ln α_t`,
/// tabulated on the open interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftProfile {
    #[serde(skip)]
    pub grid: Vec<f64>,
    #[serde(skip)]
    pub phi: Vec<f64>,
    #[serde(skip)]
    pub var: Vec<f64>,
    pub inf: f64,
    pub sup: f64,
    pub variance_floor: f64,
    pub constant_bounds: ConstantBoundDrift,
    pub exponent_bounds: Vec<ExponentBounds>,
}

/// `(φ(r), var(r))` at a single state.
pub fn drift_at(ifs: &IFSystem, r: f64) -> Result<(f64, f64)> {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (map, &p) in ifs.maps().iter().zip(ifs.probs()) {
        let l = beta(map, r)?.ln();
        m1 += p * l;
        m2 += p * l * l;
    }
    Ok((m1, (m2 - m1 * m1).max(0.0)))
}

/// Tabulates the drift on `grid` interior points `i / (grid + 1)` plus every
/// fixed point in `(0, 1)`. Requires every exponent to be bounded away from 0
/// and infinity on `[0, 1]`.
pub fn drift_profile(ifs: &IFSystem, grid: usize) -> Result<DriftProfile> {
    if grid < 2 {
        return Err(Error::invalid(
            "grid",
            "at least two grid points are required",
        ));
    }
    let mut exponent_bounds = Vec::with_capacity(ifs.len());
    for (s, map) in ifs.maps().iter().enumerate() {
        let bb = beta_bounds(map, (0.0, 1.0), grid).map_err(|e| Error::UnboundedExponent {
            map: s,
            reason: e.to_string(),
        })?;
        if !(bb.b > 0.0 && bb.big_b.is_finite()) {
            return Err(Error::UnboundedExponent {
                map: s,
                reason: format!("sampled range [{}, {}]", bb.b, bb.big_b),
            });
        }
        exponent_bounds.push(bb);
    }
    let constant_bounds = ConstantBoundDrift {
        sum_p_ln_upper: exponent_bounds
            .iter()
            .zip(ifs.probs())
            .map(|(b, p)| p * b.big_b.ln())
            .sum(),
        sum_p_ln_lower: exponent_bounds
            .iter()
            .zip(ifs.probs())
            .map(|(b, p)| p * b.b.ln())
            .sum(),
    };

    let mut pts: Vec<f64> = (1..=grid).map(|i| i as f64 / (grid + 1) as f64).collect();
    if let Ok(c) = CanonicalPoints::of(ifs) {
        pts.extend(c.0.iter().copied().filter(|&x| x > 0.0 && x < 1.0));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let mut phi = Vec::with_capacity(pts.len());
    let mut var = Vec::with_capacity(pts.len());
    for &r in &pts {
        let (f, v) = drift_at(ifs, r)?;
        phi.push(f);
        var.push(v);
    }
    let inf = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let sup = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut variance_floor = f64::INFINITY;
    for i in 0..=grid {
        let r = VARIANCE_MARGIN + (1.0 - 2.0 * VARIANCE_MARGIN) * i as f64 / grid as f64;
        variance_floor = variance_floor.min(drift_at(ifs, r)?.1);
    }
    for (&r, &v) in pts.iter().zip(&var) {
        if r > VARIANCE_MARGIN && r < 1.0 - VARIANCE_MARGIN {
            variance_floor = variance_floor.min(v);
        }
    }

    Ok(DriftProfile {
        grid: pts,
        phi,
        var,
        inf,
        sup,
        variance_floor,
        constant_bounds,
        exponent_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval_maps::MonotoneMap;

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
    fn example_drift_is_constant() {
        let ln2 = std::f64::consts::LN_2;
        for p1 in [0.3, 0.4, 0.5, 0.6] {
            let d = drift_profile(&ex51(p1), 1000).unwrap();
            let expected = (2.0 * p1 - 1.0) * ln2;
            assert!((d.sup - expected).abs() < 1e-15 && (d.inf - expected).abs() < 1e-15);
        }
        let d = drift_profile(&ex51(0.5), 1000).unwrap();
        assert!((d.variance_floor - ln2 * ln2).abs() < 1e-12);
        let d = drift_profile(&ex51(0.4), 1000).unwrap();
        assert!((d.sup + 0.2 * ln2).abs() < 1e-15);
        assert!((d.constant_bounds.sum_p_ln_upper + 0.2 * ln2).abs() < 1e-15);
    }

    #[test]
    fn unit_exponents_have_zero_drift() {
        let ifs = IFSystem::new(
            vec![MonotoneMap::power(1.0).unwrap(), MonotoneMap::identity()],
            vec![0.5, 0.5],
        )
        .unwrap();
        let d = drift_profile(&ifs, 500).unwrap();
        assert_eq!((d.inf, d.sup, d.variance_floor), (0.0, 0.0, 0.0));
    }

    #[test]
    fn vanishing_exponent_is_reported() {
        let ifs = IFSystem::new(
            vec![MonotoneMap::piecewise(
                &[1.0 / 3.0],
                vec![vec![0.0, 0.0, 3.0], vec![-0.5, 3.0, -1.5]],
            )
            .unwrap()],
            vec![1.0],
        )
        .unwrap();
        assert!(matches!(
            drift_profile(&ifs, 500),
            Err(Error::UnboundedExponent { map: 0, .. })
        ));
    }
}
