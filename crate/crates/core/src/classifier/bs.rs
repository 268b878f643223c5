use serde::Serialize;

use crate::orbit_engine::IFSystem;

/// Equality tolerance for the endpoint tests.
pub const BS_TOL: f64 = 1e-9;

/// A pair `a < b` whose endpoints pass the basin-endpoint tests. Openness of
/// the ends is not determined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BSInterval {
    pub a: f64,
    pub b: f64,
    /// Maps with `τ_s(a) = a`.
    pub left_witnesses: Vec<usize>,
    /// Maps with `τ_s(b) = b`.
    pub right_witnesses: Vec<usize>,
}

/// `a` can be a left basin end: `τ_s(a) ≥ a` for all `s`, with equality for some.
fn left_witnesses(ifs: &IFSystem, a: f64) -> Option<Vec<usize>> {
    let mut eq = Vec::new();
    for (s, m) in ifs.maps().iter().enumerate() {
        let d = m.apply(a) - a;
        if d < -BS_TOL {
            return None;
        }
        if d.abs() <= BS_TOL {
            eq.push(s);
        }
    }
    (!eq.is_empty()).then_some(eq)
}

/// `b` can be a right basin end: `τ_s(b) ≤ b` for all `s`, with equality for some.
fn right_witnesses(ifs: &IFSystem, b: f64) -> Option<Vec<usize>> {
    let mut eq = Vec::new();
    for (s, m) in ifs.maps().iter().enumerate() {
        let d = m.apply(b) - b;
        if d > BS_TOL {
            return None;
        }
        if d.abs() <= BS_TOL {
            eq.push(s);
        }
    }
    (!eq.is_empty()).then_some(eq)
}

/// Every pair `a < b` from `candidates` passing both tests, nested pairs
/// included. The count bounds the number of SRB measures.
pub fn enumerate_bs(ifs: &IFSystem, candidates: &[f64]) -> Vec<BSInterval> {
    let lefts: Vec<(f64, Vec<usize>)> = candidates
        .iter()
        .filter_map(|&a| left_witnesses(ifs, a).map(|w| (a, w)))
        .collect();
    let rights: Vec<(f64, Vec<usize>)> = candidates
        .iter()
        .filter_map(|&b| right_witnesses(ifs, b).map(|w| (b, w)))
        .collect();
    let mut out = Vec::new();
    for (a, lw) in &lefts {
        for (b, rw) in &rights {
            if a < b {
                out.push(BSInterval {
                    a: *a,
                    b: *b,
                    left_witnesses: lw.clone(),
                    right_witnesses: rw.clone(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::graph::CanonicalPoints;
    use crate::interval_maps::MonotoneMap;

    #[test]
    fn example_bs_sets() {
        let ifs = IFSystem::new(
            vec![
                MonotoneMap::piecewise(
                    &[1.0 / 3.0],
                    vec![vec![0.0, 0.0, 3.0], vec![-0.5, 3.0, -1.5]],
                )
                .unwrap(),
                MonotoneMap::piecewise(
                    &[2.0 / 3.0],
                    vec![vec![0.0, 0.0, 1.5], vec![-2.0, 6.0, -3.0]],
                )
                .unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let c = CanonicalPoints::of(&ifs).unwrap();
        let bs = enumerate_bs(&ifs, &c.0);
        let pairs: Vec<(f64, f64)> = bs.iter().map(|i| (i.a, i.b)).collect();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].0, 0.0);
        assert!((pairs[0].1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(pairs[1], (0.0, 1.0));
        assert!((pairs[2].0 - 2.0 / 3.0).abs() < 1e-12 && pairs[2].1 == 1.0);

        let ex51 = IFSystem::new(
            vec![
                MonotoneMap::power(2.0).unwrap(),
                MonotoneMap::power(0.5).unwrap(),
            ],
            vec![0.4, 0.6],
        )
        .unwrap();
        let c = CanonicalPoints::of(&ex51).unwrap();
        let bs = enumerate_bs(&ex51, &c.0);
        assert_eq!(bs.len(), 1);
        assert_eq!((bs[0].a, bs[0].b), (0.0, 1.0));
        assert_eq!(bs[0].left_witnesses, vec![0, 1]);
    }
}
