//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srb::interval_maps::MonotoneMap;
use srb::market::{MarketModel, Strategy};
use srb::orbit_engine::IFSystem;

/// Order check up to rounding: once two orbits merge at an attracting fixed
/// point, floating-point evaluation can swap them by an ulp or two.
pub fn ordered_up_to_rounding(x: f64, y: f64) -> bool {
    x <= y + 16.0 * f64::EPSILON * x.abs().max(y.abs())
}

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn sorted_interior(rng: &mut ChaCha8Rng, n: usize, gap: f64) -> Vec<f64> {
    loop {
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        xs.sort_by(f64::total_cmp);
        let ok = std::iter::once(0.0)
            .chain(xs.iter().copied())
            .chain(std::iter::once(1.0))
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] - w[0] > gap);
        if ok {
            return xs;
        }
    }
}

/// A strictly increasing spline with `τ(0) = 0`, `τ(1) = 1`: monotone
/// piecewise-linear interpolation of random knots, each piece bent by a
/// quadratic that vanishes at both knots and keeps the slope positive.
pub fn random_spline(rng: &mut ChaCha8Rng) -> MonotoneMap {
    loop {
        let pieces = rng.random_range(2..=5);
        let xs = sorted_interior(rng, pieces - 1, 0.05);
        let ys = sorted_interior(rng, pieces - 1, 0.05);
        let kx: Vec<f64> = std::iter::once(0.0)
            .chain(xs.iter().copied())
            .chain([1.0])
            .collect();
        let ky: Vec<f64> = std::iter::once(0.0)
            .chain(ys.iter().copied())
            .chain([1.0])
            .collect();
        let mut coeffs = Vec::with_capacity(pieces);
        for i in 0..pieces {
            let (x0, x1, y0, y1) = (kx[i], kx[i + 1], ky[i], ky[i + 1]);
            let b = (y1 - y0) / (x1 - x0);
            let a = y0 - b * x0;
            // Slope of the bent piece is b + c (2r − x0 − x1) ∈ b ± |c|(x1 − x0).
            let c = (rng.random::<f64>() * 1.6 - 0.8) * b / (x1 - x0);
            let mut p = vec![a + c * x0 * x1, b - c * (x0 + x1), c];
            if i == 0 {
                p[0] = 0.0;
            }
            coeffs.push(p);
        }
        if let Ok(m) = MonotoneMap::piecewise(&xs, coeffs) {
            if m.fixed_point_set().is_ok() {
                return m;
            }
        }
    }
}

/// An IFS of 1–3 random splines with random positive probabilities.
pub fn random_spline_ifs(rng: &mut ChaCha8Rng) -> IFSystem {
    let l = rng.random_range(1..=3);
    let maps = (0..l).map(|_| random_spline(rng)).collect();
    IFSystem::new(maps, random_simplex(rng, l, 0.1)).expect("valid system")
}

/// Uniform-ish point of the simplex with every entry at least `floor / n`.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| floor / n as f64 + rng.random::<f64>())
        .collect();
    let s: f64 = raw.iter().sum();
    let mut v: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let head: f64 = v[..n - 1].iter().sum();
    v[n - 1] = 1.0 - head;
    v
}

pub fn random_strategy(rng: &mut ChaCha8Rng, k: usize) -> Strategy {
    Strategy::new(&random_simplex(rng, k, 0.2)).expect("positive weights")
}

/// `K ≤ kmax` assets, `L ≤ lmax` states, nonnegative payoffs with some zeros.
pub fn random_market(rng: &mut ChaCha8Rng, kmax: usize, lmax: usize) -> MarketModel {
    loop {
        let k = rng.random_range(1..=kmax);
        let l = rng.random_range(1..=lmax);
        let d: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..l)
                    .map(|_| {
                        if rng.random::<f64>() < 0.2 {
                            0.0
                        } else {
                            rng.random::<f64>() * 3.0
                        }
                    })
                    .collect()
            })
            .collect();
        let p = random_simplex(rng, l, 0.2);
        if let Ok(m) = MarketModel::new(d, p) {
            return m;
        }
    }
}

/// A payoff row with all entries positive and a strategy pair, for market maps.
pub fn random_market_map(rng: &mut ChaCha8Rng, kmax: usize) -> (Vec<f64>, Strategy, Strategy) {
    let k = rng.random_range(2..=kmax);
    let row = random_simplex(rng, k, 0.0);
    (row, random_strategy(rng, k), random_strategy(rng, k))
}
