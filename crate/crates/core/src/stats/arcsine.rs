use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ExponentSeries;
use crate::error::{Error, Result};

/// `F(x) = (2/π) arcsin √x`, clamped to `[0, 1]` outside the unit interval.
pub fn arcsine_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        2.0 / PI * x.sqrt().asin()
    }
}

/// Statistics of one path of martingale differences `X_i` with conditional
/// second moments `c_i = E(X_i² | A_{i-1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcsinePath {
    pub n: f64,
    /// `T_n = inf{m : v_m ≥ n}`.
    pub t_n: usize,
    /// `v_{T_n}`.
    pub v_t_n: f64,
    /// `L_n = (1/n) Σ_{i ≤ T_n} c_i χ{S_i > 0}`.
    pub l_n: f64,
    /// `Pos_m / m` at `m = ⌈n⌉`.
    pub pos_fraction: f64,
    /// `(T_n − 1) d < n ≤ T_n D` and `m d ≤ v_m ≤ m D` held along the path.
    pub sandwich_ok: bool,
}

/// Runs one path until both `v_m ≥ n` and `m ≥ ⌈n⌉`. `d`, `big_d` are the
/// claimed bounds `d ≤ c_i` and `X_i² ≤ D`, used only for the sandwich flag.
/// A path that ends before `v_m` reaches `n` is a stopping-time failure.
pub fn arcsine_path(
    steps: impl IntoIterator<Item = (f64, f64)>,
    n: f64,
    d: f64,
    big_d: f64,
) -> Result<ArcsinePath> {
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::invalid(
            "n",
            "normalization level must be at least 1",
        ));
    }
    let m_pos = n.ceil() as usize;
    let (mut s, mut v, mut weighted) = (0.0, 0.0, 0.0);
    let mut pos = 0usize;
    let mut t_n = None;
    let mut l_n = 0.0;
    let mut pos_fraction = None;
    let mut sandwich_ok = true;
    for (m, (x, c)) in steps.into_iter().enumerate().map(|(i, xc)| (i + 1, xc)) {
        s += x;
        v += c;
        let positive = s > 0.0;
        if positive {
            pos += 1;
        }
        let mf = m as f64;
        if v < mf * d - 1e-9 * v.max(1.0) || v > mf * big_d + 1e-9 * v.max(1.0) {
            sandwich_ok = false;
        }
        if t_n.is_none() {
            if positive {
                weighted += c;
            }
            if v >= n {
                t_n = Some((m, v));
                l_n = weighted / n;
            }
        }
        if m == m_pos {
            pos_fraction = Some(pos as f64 / mf);
        }
        if t_n.is_some() && pos_fraction.is_some() {
            break;
        }
    }
    let (t_n, v_t_n) = t_n.ok_or_else(|| {
        Error::invalid("path", format!("quadratic variation never reached n = {n}"))
    })?;
    let pos_fraction = pos_fraction
        .ok_or_else(|| Error::invalid("path", format!("path shorter than {m_pos} steps")))?;
    let tf = t_n as f64;
    if !((tf - 1.0) * d < n && n <= tf * big_d) {
        sandwich_ok = false;
    }
    Ok(ArcsinePath {
        n,
        t_n,
        v_t_n,
        l_n,
        pos_fraction,
        sandwich_ok,
    })
}

/// Symmetric ±1 coin flips on stream `stream` of `seed`, `c_i ≡ 1`.
pub fn coin_flip_path(seed: u64, stream: u64) -> impl Iterator<Item = (f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    std::iter::repeat_with(move || (if rng.random::<bool>() { 1.0 } else { -1.0 }, 1.0))
}

/// Kolmogorov distance between the empirical law of `xs` and `F`, taking
/// both one-sided limits at every atom so ties are handled exactly.
pub fn ks_to_arcsine(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut dist = 0.0_f64;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let f = arcsine_cdf(v[i]);
        dist = dist
            .max((i as f64 / n - f).abs())
            .max((j as f64 / n - f).abs());
        i = j;
    }
    dist
}

/// Per-path statistics of an ensemble and the fit of `L_n` to the arcsine law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcsineEnsemble {
    pub n: f64,
    pub paths: Vec<ArcsinePath>,
    /// Paths whose quadratic variation never reached `n`.
    pub excluded: usize,
    pub ks_distance: f64,
}

impl ArcsineEnsemble {
    pub fn from_results(n: f64, results: Vec<Result<ArcsinePath>>) -> Self {
        let mut paths = Vec::with_capacity(results.len());
        let mut excluded = 0;
        for r in results {
            match r {
                Ok(p) => paths.push(p),
                Err(_) => excluded += 1,
            }
        }
        let ls: Vec<f64> = paths.iter().map(|p| p.l_n).collect();
        ArcsineEnsemble {
            n,
            ks_distance: ks_to_arcsine(&ls),
            paths,
            excluded,
        }
    }

    pub fn pos_fractions(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.pos_fraction).collect()
    }

    /// CSV with columns `path_id,n,L_n,pos_fraction`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path_id,n,L_n,pos_fraction\n");
        for (i, p) in self.paths.iter().enumerate() {
            out.push_str(&format!("{i},{},{},{}\n", self.n, p.l_n, p.pos_fraction));
        }
        out
    }
}

/// `paths` coin-flip paths (path `i` on stream `i`) at level `n`.
pub fn coin_flip_arcsine(paths: usize, n: usize, seed: u64) -> Result<ArcsineEnsemble> {
    if paths == 0 {
        return Err(Error::invalid("paths", "must be positive"));
    }
    let n = n as f64;
    let results = (0..paths as u64)
        .into_par_iter()
        .map(|i| arcsine_path(coin_flip_path(seed, i), n, 1.0, 1.0))
        .collect();
    Ok(ArcsineEnsemble::from_results(n, results))
}

/// Arcsine statistics of exponent series, using `M_t` and its conditional
/// variance. `d`, `big_d` are the assumed bounds on the conditional variance
/// and on `M_t²`.
pub fn arcsine_from_series(
    series: &[ExponentSeries],
    n: f64,
    d: f64,
    big_d: f64,
) -> ArcsineEnsemble {
    let results = series
        .par_iter()
        .map(|s| {
            arcsine_path(
                s.m.iter().copied().zip(s.cond_var.iter().copied()),
                n,
                d,
                big_d,
            )
        })
        .collect();
    ArcsineEnsemble::from_results(n, results)
}

/// Empirical `Pr(Pos_n/n ≤ a)` against the lower bound `(1/π) arcsin √(a d / D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FractionBound {
    pub a: f64,
    pub empirical: f64,
    pub bound: f64,
}

pub fn positive_fraction_bound(
    fractions: &[f64],
    a: f64,
    d: f64,
    big_d: f64,
) -> Result<FractionBound> {
    if fractions.is_empty() {
        return Err(Error::invalid("samples", "no samples"));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::invalid("a", "must lie in [0, 1]"));
    }
    if !(d > 0.0 && big_d >= d) {
        return Err(Error::invalid("d", "need 0 < d ≤ D"));
    }
    let empirical = fractions.iter().filter(|&&f| f <= a).count() as f64 / fractions.len() as f64;
    let bound = (a * d / big_d).sqrt().min(1.0).asin() / PI;
    Ok(FractionBound {
        a,
        empirical,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_anchors() {
        assert_eq!(arcsine_cdf(0.0), 0.0);
        assert!((arcsine_cdf(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(arcsine_cdf(1.0), 1.0);
        assert!((arcsine_cdf(0.25) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn one_signed_paths() {
        let up = arcsine_path(std::iter::repeat((1.0, 1.0)), 50.0, 1.0, 1.0).unwrap();
        assert_eq!((up.t_n, up.l_n, up.pos_fraction), (50, 1.0, 1.0));
        assert!(up.sandwich_ok);
        let down = arcsine_path(std::iter::repeat((-1.0, 1.0)), 50.0, 1.0, 1.0).unwrap();
        assert_eq!((down.l_n, down.pos_fraction), (0.0, 0.0));
        assert!(arcsine_path(std::iter::repeat_n((1.0, 1.0), 10), 50.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ks_handles_atoms() {
        // Half the mass at 0, half at 1: the CDF jumps from 0 to 0.5 at 0.
        assert!((ks_to_arcsine(&[0.0, 1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fraction_bound_extremes() {
        let fr = [0.1, 0.5, 0.9];
        let b = positive_fraction_bound(&fr, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(b.empirical, 1.0);
        let b = positive_fraction_bound(&fr, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(b.bound, 0.0);
        let b = positive_fraction_bound(&fr, 0.25, 1.0, 1.0).unwrap();
        assert!((b.bound - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn coin_flips_replay() {
        let a: Vec<_> = coin_flip_path(7, 3).take(100).collect();
        let b: Vec<_> = coin_flip_path(7, 3).take(100).collect();
        assert_eq!(a, b);
        let e = coin_flip_arcsine(200, 400, 1).unwrap();
        assert_eq!((e.paths.len(), e.excluded), (200, 0));
        assert!(e.paths.iter().all(|p| p.t_n == 400 && p.sandwich_ok));
    }
}
