use serde::Serialize;

use super::{MapKind, MonotoneMap};
use crate::error::{Error, Result};

/// Default tolerance for `|τ(a) - a|` at a reported fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Number of uniform scan cells.
pub const FIXED_POINT_CELLS: usize = 10_000;
/// Grid points with `|τ(r) - r|` below this (and locally minimal) are refined
/// as possible tangential fixed points.
const TANGENT_SCAN: f64 = 1e-6;
/// Fixed points closer than this are merged.
const MERGE_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    /// `τ(r) > r`
    Up,
    /// `τ(r) < r`
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub value: f64,
    /// `τ - id` does not change sign across the point.
    pub tangent: bool,
}

/// Sign of `τ(r) - r` on the open interval between consecutive fixed points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignGap {
    pub lo: f64,
    pub hi: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointSet {
    pub points: Vec<FixedPoint>,
    pub gaps: Vec<SignGap>,
}

impl FixedPointSet {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn contains(&self, x: f64, radius: f64) -> bool {
        self.points.iter().any(|p| (p.value - x).abs() <= radius)
    }
}

/// Finds every fixed point of `map` on `[0, 1]`.
///
/// Scans `τ(r) - r` on a uniform grid, bisects each sign change to machine
/// precision, and refines near-zero local minima of `|τ(r) - r|` by
/// golden-section search to catch touching points.
pub fn fixed_points(map: &MonotoneMap, tol: f64) -> Result<FixedPointSet> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "tolerance must be positive"));
    }
    if matches!(map.kind(), MapKind::Identity) {
        return Err(Error::DegenerateFixedSet {
            map_label: map.label(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    let g = |r: f64| map.apply(r) - r;
    let n = FIXED_POINT_CELLS;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&r| g(r)).collect();

    let mut roots: Vec<(f64, f64, bool)> = Vec::new(); // (value, |g|, tangent)
    for i in 0..n {
        let (a, b) = (grid[i], grid[i + 1]);
        let (ga, gb) = (vals[i], vals[i + 1]);
        if ga.abs() <= tol && gb.abs() <= tol && g(0.5 * (a + b)).abs() <= tol {
            return Err(Error::DegenerateFixedSet {
                map_label: map.label(),
                lo: a,
                hi: b,
            });
        }
        if ga.abs() > tol && gb.abs() > tol && ga.signum() != gb.signum() {
            let x = bisect(&g, a, b, ga);
            roots.push((x, g(x).abs(), false));
        }
    }
    for i in 0..=n {
        let gi = vals[i].abs();
        if gi <= tol {
            roots.push((grid[i], gi, false));
            continue;
        }
        let left = if i > 0 {
            vals[i - 1].abs()
        } else {
            f64::INFINITY
        };
        let right = if i < n {
            vals[i + 1].abs()
        } else {
            f64::INFINITY
        };
        if gi < TANGENT_SCAN && gi <= left && gi <= right {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(n)];
            let x = golden_min(|r| g(r).abs(), lo, hi);
            let gx = g(x).abs();
            if gx <= tol {
                roots.push((x, gx, true));
            }
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut merged: Vec<(f64, f64, bool)> = Vec::new();
    for r in roots {
        match merged.last_mut() {
            Some(last) if r.0 - last.0 <= MERGE_RADIUS => {
                if r.1 < last.1 {
                    last.0 = r.0;
                    last.1 = r.1;
                }
                last.2 &= r.2;
            }
            _ => merged.push(r),
        }
    }

    let mut points: Vec<FixedPoint> = merged
        .iter()
        .map(|&(v, _, tangent)| FixedPoint {
            value: snap_endpoint(v),
            tangent,
        })
        .collect();

    let mut gaps = Vec::with_capacity(points.len().saturating_sub(1));
    for w in points.windows(2) {
        let (lo, hi) = (w[0].value, w[1].value);
        let sign = gap_sign(&g, lo, hi, &grid, &vals, map)?;
        gaps.push(SignGap { lo, hi, sign });
    }
    // a point is tangent exactly when the signs on both sides agree
    for (i, p) in points.iter_mut().enumerate() {
        if i > 0 && i < gaps.len() {
            p.tangent = gaps[i - 1].sign == gaps[i].sign;
        }
    }
    Ok(FixedPointSet { points, gaps })
}

fn snap_endpoint(x: f64) -> f64 {
    if x.abs() <= MERGE_RADIUS {
        0.0
    } else if (1.0 - x).abs() <= MERGE_RADIUS {
        1.0
    } else {
        x
    }
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, ga: f64) -> f64 {
    let sa = ga.signum();
    let mut best = (a, ga.abs());
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm.abs() < best.1 {
            best = (m, gm.abs());
        }
        if gm == 0.0 {
            return m;
        }
        if gm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    let gb = g(b).abs();
    if gb < best.1 {
        b
    } else {
        best.0
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-15 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

fn gap_sign(
    g: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid: &[f64],
    vals: &[f64],
    map: &MonotoneMap,
) -> Result<Sign> {
    let mid = 0.5 * (lo + hi);
    let gm = g(mid);
    // the strongest sampled value inside the gap decides if the midpoint is too flat
    let (mut pos, mut neg) = (0.0f64, 0.0f64);
    for (&r, &v) in grid.iter().zip(vals) {
        if r > lo + MERGE_RADIUS && r < hi - MERGE_RADIUS {
            pos = pos.max(v);
            neg = neg.min(v);
        }
    }
    pos = pos.max(gm);
    neg = neg.min(gm);
    if pos > FIXED_POINT_TOL && neg < -FIXED_POINT_TOL {
        return Err(Error::Inconsistent(format!(
            "{}: sign of tau(r) - r changes inside ({lo}, {hi}) without a detected fixed point",
            map.label()
        )));
    }
    if pos > 0.0 {
        Ok(Sign::Up)
    } else if neg < 0.0 {
        Ok(Sign::Down)
    } else {
        Err(Error::DegenerateFixedSet {
            map_label: map.label(),
            lo,
            hi,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex34(second: bool) -> MonotoneMap {
        if second {
            // 1.5 r^2 on [0, 2/3], 1 - 3 (r - 1)^2 on (2/3, 1]
            MonotoneMap::piecewise(
                &[2.0 / 3.0],
                vec![vec![0.0, 0.0, 1.5], vec![-2.0, 6.0, -3.0]],
            )
            .unwrap()
        } else {
            MonotoneMap::piecewise(
                &[1.0 / 3.0],
                vec![vec![0.0, 0.0, 3.0], vec![-0.5, 3.0, -1.5]],
            )
            .unwrap()
        }
    }

    #[test]
    fn example_maps_have_expected_fixed_points() {
        let fp = ex34(false).fixed_point_set().unwrap().clone();
        let v = fp.values();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(v[2], 1.0);
        assert_eq!(fp.gaps[0].sign, Sign::Down);
        assert_eq!(fp.gaps[1].sign, Sign::Up);

        let v2 = ex34(true).fixed_point_set().unwrap().values();
        assert!((v2[1] - 2.0 / 3.0).abs() < 1e-12);

        let sq = MonotoneMap::power(2.0).unwrap();
        assert_eq!(sq.fixed_point_set().unwrap().values(), vec![0.0, 1.0]);
    }

    #[test]
    fn identity_is_degenerate() {
        let id = MonotoneMap::identity();
        assert!(matches!(
            fixed_points(&id, FIXED_POINT_TOL),
            Err(Error::DegenerateFixedSet { .. })
        ));
        // identity on a sub-interval only
        let flat = MonotoneMap::piecewise(
            &[0.25, 0.75],
            vec![vec![0.0, 0.0, 4.0], vec![0.0, 1.0], vec![1.5, -2.5, 2.0]],
        );
        match flat {
            Ok(m) => assert!(matches!(
                m.fixed_point_set(),
                Err(Error::DegenerateFixedSet { .. })
            )),
            Err(e) => panic!("construction failed: {e}"),
        }
    }

    #[test]
    fn finds_tangential_fixed_point() {
        // τ(r) = r + c r (1 - r)(2r - 1)^2 fixes 0 and 1 and touches the diagonal at 1/2;
        // r (1 - r)(2r - 1)^2 = r - 5r^2 + 8r^3 - 4r^4
        let c = 0.5;
        let coeffs = vec![0.0, 1.0 + c, -5.0 * c, 8.0 * c, -4.0 * c];
        let m = MonotoneMap::piecewise(&[], vec![coeffs]).unwrap();
        let fp = m.fixed_point_set().unwrap();
        let v = fp.values();
        assert_eq!(v.len(), 3, "{v:?}");
        assert!((v[1] - 0.5).abs() < 1e-6);
        assert!(fp.points[1].tangent);
        assert!(fp.gaps.iter().all(|g| g.sign == Sign::Up));
    }

    #[test]
    fn reported_points_are_fixed_within_tolerance() {
        let m = MonotoneMap::market(&[0.3, 0.7], &[0.2, 0.8], &[0.6, 0.4]).unwrap();
        for p in &m.fixed_point_set().unwrap().points {
            assert!((m.apply(p.value) - p.value).abs() <= FIXED_POINT_TOL);
        }
    }
}
