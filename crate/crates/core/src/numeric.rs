//! Log-space helpers shared by the maps and the simulators.
//!
//! Orbits are carried in log-odds form `z = ln(r / (1 - r))` so that states
//! arbitrarily close to 0 or 1 keep their relative precision. Only `z = ±inf`
//! corresponds to the endpoints themselves.

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x == f64::INFINITY {
        return x;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(sigmoid(x))`.
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

/// `sigmoid(x) = 1 / (1 + e^{-x})`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(r / (1 - r))`, with `±inf` at the endpoints.
pub fn logit(r: f64) -> f64 {
    if r <= 0.0 {
        f64::NEG_INFINITY
    } else if r >= 1.0 {
        f64::INFINITY
    } else {
        r.ln() - (-r).ln_1p()
    }
}

/// `ln(1 - e^x)` for `x <= 0`.
pub fn log1mexp(x: f64) -> f64 {
    if x >= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(sum_i e^{x_i})`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `(ln r, ln(1 - r))` recovered from log-odds.
pub fn log_pair(z: f64) -> (f64, f64) {
    (log_sigmoid(z), log_sigmoid(-z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logit_sigmoid_round_trip() {
        for &r in &[1e-300, 1e-12, 0.25, 0.5, 0.75, 1.0 - 1e-12] {
            let back = sigmoid(logit(r));
            // exp(z) carries a relative error of order |z| ulp
            let rel = 4.0 * f64::EPSILON * logit(r).abs().max(1.0);
            assert!((back - r).abs() <= rel * r, "{r} -> {back}");
        }
        assert_eq!(sigmoid(f64::NEG_INFINITY), 0.0);
        assert_eq!(sigmoid(f64::INFINITY), 1.0);
    }

    #[test]
    fn log_pair_is_accurate_in_both_tails() {
        let (lr, l1) = log_pair(-800.0);
        assert!((lr + 800.0).abs() < 1e-12);
        assert!(l1.abs() < 1e-300);
        let (lr, l1) = log_pair(40.0);
        assert!((lr + (-40f64).exp()).abs() < 1e-30);
        assert!((l1 + 40.0).abs() < 1e-12);
    }

    #[test]
    fn log1mexp_matches_naive_in_safe_range() {
        for &x in &[-1e-10, -0.1, -0.69, -0.7, -3.0, -50.0] {
            let naive = (1.0 - f64::exp(x)).ln();
            assert!((log1mexp(x) - naive).abs() <= 1e-6 * naive.abs().max(1e-12));
        }
    }

    #[test]
    fn log_sum_exp_handles_infinities() {
        assert_eq!(
            log_sum_exp([f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        assert!((log_sum_exp([0.0, 0.0]) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(
            (log_sum_exp([-1000.0, -1000.0]) - (-1000.0 + std::f64::consts::LN_2)).abs() < 1e-12
        );
    }
}
