use serde::Serialize;

use super::{IFSystem, Orbit};

/// Default histogram resolution.
pub const DEFAULT_BINS: usize = 2048;
/// Atom lists longer than this are binned.
pub const MAX_ATOMS: usize = 1_000_000;

/// A finite measure on `[0, 1]`: either exact atoms or a uniform-bin
/// histogram whose mass is spread evenly inside each bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "repr", rename_all = "lowercase")]
pub enum EmpiricalMeasure {
    /// Sorted, distinct locations with their weights.
    Atoms {
        xs: Vec<f64>,
        ws: Vec<f64>,
    },
    Histogram {
        mass: Vec<f64>,
    },
}

impl EmpiricalMeasure {
    /// Builds an atomic measure, merging equal locations.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut xs: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut ws: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            if xs.last() == Some(&x) {
                *ws.last_mut().expect("paired") += w;
            } else {
                xs.push(x);
                ws.push(w);
            }
        }
        EmpiricalMeasure::Atoms { xs, ws }
    }

    pub fn dirac(x: f64) -> Self {
        EmpiricalMeasure::Atoms {
            xs: vec![x],
            ws: vec![1.0],
        }
    }

    /// Lebesgue measure as a histogram.
    pub fn uniform(bins: usize) -> Self {
        EmpiricalMeasure::Histogram {
            mass: vec![1.0 / bins as f64; bins],
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            EmpiricalMeasure::Atoms { ws, .. } => ws.iter().sum(),
            EmpiricalMeasure::Histogram { mass } => mass.iter().sum(),
        }
    }

    /// Converts to a histogram with `bins` bins.
    pub fn to_histogram(&self, bins: usize) -> Self {
        match self {
            EmpiricalMeasure::Histogram { mass } if mass.len() == bins => self.clone(),
            _ => {
                let mut mass = vec![0.0; bins];
                match self {
                    EmpiricalMeasure::Atoms { xs, ws } => {
                        for (&x, &w) in xs.iter().zip(ws) {
                            mass[bin_of(x, bins)] += w;
                        }
                    }
                    EmpiricalMeasure::Histogram { mass: src } => {
                        let n = src.len();
                        for (j, &m) in src.iter().enumerate() {
                            mass[bin_of((j as f64 + 0.5) / n as f64, bins)] += m;
                        }
                    }
                }
                EmpiricalMeasure::Histogram { mass }
            }
        }
    }

    /// `μ([0, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_impl(x, false)
    }

    /// `μ([0, x))`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.cdf_impl(x, true)
    }

    fn cdf_impl(&self, x: f64, strict: bool) -> f64 {
        match self {
            EmpiricalMeasure::Atoms { xs, ws } => {
                let k = if strict {
                    xs.partition_point(|&a| a < x)
                } else {
                    xs.partition_point(|&a| a <= x)
                };
                ws[..k].iter().sum()
            }
            EmpiricalMeasure::Histogram { mass } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let n = mass.len();
                let pos = (x.min(1.0) * n as f64).min(n as f64);
                let i = (pos.floor() as usize).min(n);
                let full: f64 = mass[..i].iter().sum();
                if i < n {
                    full + mass[i] * (pos - i as f64)
                } else {
                    full
                }
            }
        }
    }

    /// `μ([x - radius, x + radius])`.
    pub fn mass_near(&self, x: f64, radius: f64) -> f64 {
        self.cdf(x + radius) - self.cdf_left(x - radius)
    }

    /// Weighted mixture `Σ w_i μ_i`. Atomic inputs stay atomic.
    pub fn mixture(parts: &[(f64, &EmpiricalMeasure)]) -> Self {
        let all_atoms = parts
            .iter()
            .all(|(_, m)| matches!(m, EmpiricalMeasure::Atoms { .. }));
        if all_atoms {
            let mut atoms = Vec::new();
            for (w, m) in parts {
                if let EmpiricalMeasure::Atoms { xs, ws } = m {
                    atoms.extend(xs.iter().zip(ws).map(|(&x, &v)| (x, w * v)));
                }
            }
            EmpiricalMeasure::from_atoms(atoms)
        } else {
            let mut mass = vec![0.0; DEFAULT_BINS];
            for (w, m) in parts {
                if let EmpiricalMeasure::Histogram { mass: h } = m.to_histogram(DEFAULT_BINS) {
                    for (a, b) in mass.iter_mut().zip(h) {
                        *a += w * b;
                    }
                }
            }
            EmpiricalMeasure::Histogram { mass }
        }
    }

    /// Points where the CDF may jump or change slope.
    fn events(&self) -> Vec<f64> {
        match self {
            EmpiricalMeasure::Atoms { xs, .. } => xs.clone(),
            EmpiricalMeasure::Histogram { mass } => {
                let n = mass.len();
                (0..=n).map(|i| i as f64 / n as f64).collect()
            }
        }
    }
}

fn bin_of(x: f64, bins: usize) -> usize {
    ((x * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Cesàro measure `(1/T) Σ_{t<T} δ_{r_t}`.
pub fn empirical_measure(orbit: &Orbit) -> EmpiricalMeasure {
    let t = orbit.steps().max(1);
    let n = t.min(orbit.states.len());
    let w = 1.0 / n as f64;
    let m = EmpiricalMeasure::from_atoms(orbit.states[..n].iter().map(|&x| (x, w)).collect());
    match &m {
        EmpiricalMeasure::Atoms { xs, .. } if xs.len() > MAX_ATOMS => m.to_histogram(DEFAULT_BINS),
        _ => m,
    }
}

/// Kolmogorov distance `sup_x |F₁(x) - F₂(x)|`.
///
/// Both CDFs are piecewise linear between the union of their event points,
/// so the supremum is attained at an event point from the left or the right.
pub fn weak_distance(m1: &EmpiricalMeasure, m2: &EmpiricalMeasure) -> f64 {
    let mut pts = m1.events();
    pts.extend(m2.events());
    pts.push(0.0);
    pts.push(1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.iter()
        .flat_map(|&x| {
            [
                (m1.cdf(x) - m2.cdf(x)).abs(),
                (m1.cdf_left(x) - m2.cdf_left(x)).abs(),
            ]
        })
        .fold(0.0, f64::max)
}

/// Transition operator `Pμ(A) = Σ_s p_s μ(τ_s⁻¹ A)`.
pub fn push_forward(ifs: &IFSystem, m: &EmpiricalMeasure) -> EmpiricalMeasure {
    match m {
        EmpiricalMeasure::Atoms { xs, ws } => {
            let mut atoms = Vec::with_capacity(xs.len() * ifs.len());
            for (&x, &w) in xs.iter().zip(ws) {
                for (map, &p) in ifs.maps().iter().zip(ifs.probs()) {
                    atoms.push((map.apply(x), p * w));
                }
            }
            EmpiricalMeasure::from_atoms(atoms)
        }
        EmpiricalMeasure::Histogram { mass } => {
            let n = mass.len();
            let mut out = vec![0.0; n];
            for (j, &w) in mass.iter().enumerate() {
                let c = (j as f64 + 0.5) / n as f64;
                for (map, &p) in ifs.maps().iter().zip(ifs.probs()) {
                    out[bin_of(map.apply(c), n)] += p * w;
                }
            }
            EmpiricalMeasure::Histogram { mass: out }
        }
    }
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
    fn distances_between_simple_measures() {
        let d0 = EmpiricalMeasure::dirac(0.0);
        let d1 = EmpiricalMeasure::dirac(1.0);
        assert_eq!(weak_distance(&d0, &d0), 0.0);
        assert_eq!(weak_distance(&d0, &d1), 1.0);
        let u = EmpiricalMeasure::uniform(DEFAULT_BINS);
        let half = EmpiricalMeasure::dirac(0.5);
        assert!((weak_distance(&u, &half) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn alternating_orbit_splits_mass() {
        let o = Orbit {
            r0: 0.2,
            seed: None,
            stream: 0,
            symbols: vec![0; 4],
            states: vec![0.2, 0.8, 0.2, 0.8, 0.2],
            log_odds: vec![],
        };
        let m = empirical_measure(&o);
        assert_eq!(
            m,
            EmpiricalMeasure::Atoms {
                xs: vec![0.2, 0.8],
                ws: vec![0.5, 0.5]
            }
        );
    }

    #[test]
    fn push_forward_of_point_mass() {
        let ifs = ex51(0.4);
        let p = push_forward(&ifs, &EmpiricalMeasure::dirac(0.25));
        match p {
            EmpiricalMeasure::Atoms { xs, ws } => {
                assert_eq!(xs, vec![0.0625, 0.5]);
                assert!((ws[0] - 0.4).abs() < 1e-15 && (ws[1] - 0.6).abs() < 1e-15);
            }
            _ => panic!("expected atoms"),
        }
        assert_eq!(
            push_forward(&ifs, &EmpiricalMeasure::dirac(0.0)),
            EmpiricalMeasure::dirac(0.0)
        );
        assert_eq!(
            push_forward(&ifs, &EmpiricalMeasure::dirac(1.0)),
            EmpiricalMeasure::dirac(1.0)
        );
        let h = push_forward(&ifs, &EmpiricalMeasure::uniform(DEFAULT_BINS));
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_cdf_is_piecewise_linear() {
        let h = EmpiricalMeasure::Histogram {
            mass: vec![0.5, 0.0, 0.5, 0.0],
        };
        assert!((h.cdf(0.125) - 0.25).abs() < 1e-15);
        assert!((h.cdf(0.5) - 0.5).abs() < 1e-15);
        assert!((h.cdf(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(h.cdf(0.0), 0.0);
    }

    #[test]
    fn binned_and_atomic_forms_agree_coarsely() {
        let atoms = EmpiricalMeasure::from_atoms(vec![(0.1, 0.3), (0.55, 0.7)]);
        let h = atoms.to_histogram(1000);
        assert!(weak_distance(&atoms, &h) <= 0.7 + 1e-12);
        assert!((h.mass_near(0.55, 0.01) - 0.7).abs() < 1e-12);
    }
}
