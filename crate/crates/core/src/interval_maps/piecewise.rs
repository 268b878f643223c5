use serde::Serialize;

use crate::error::{Error, Result};

/// Snap radius for the endpoint coefficients `c_0 ≈ 0` and `τ(1) ≈ 1`.
const SNAP: f64 = 1e-12;
/// Allowed jump between adjacent pieces at a breakpoint.
const CONTINUITY_TOL: f64 = 1e-9;
/// Allowed overshoot outside `[0, 1]` before the map is rejected.
const RANGE_TOL: f64 = 1e-12;
const MONOTONE_GRID: usize = 10_000;

/// One polynomial piece, stored in powers of `r` and in powers of `u = 1 - r`.
#[derive(Debug, Clone, PartialEq)]
struct Piece {
    about_zero: Vec<f64>,
    about_one: Vec<f64>,
}

impl Piece {
    fn new(coeffs: Vec<f64>) -> Self {
        let about_one = shift_to_one(&coeffs);
        Piece {
            about_zero: coeffs,
            about_one,
        }
    }

    fn value(&self, r: f64) -> f64 {
        horner(&self.about_zero, r)
    }

    fn derivative(&self, r: f64) -> f64 {
        self.about_zero
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (j, c)| acc * r + j as f64 * c)
    }
}

/// Coefficients of `p(1 - u)` in powers of `u`.
fn shift_to_one(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n];
    for (j, &cj) in c.iter().enumerate() {
        let mut binom = 1.0;
        for (m, slot) in out.iter_mut().enumerate().take(j + 1) {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            *slot += sign * binom * cj;
            binom = binom * (j - m) as f64 / (m + 1) as f64;
        }
    }
    out
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn lowest_nonzero(c: &[f64]) -> Option<usize> {
    c.iter().position(|&x| x != 0.0)
}

/// A continuous, strictly increasing piecewise polynomial on `[0, 1]`.
///
/// Piece `i` covers `(breaks[i], breaks[i + 1]]` (the first piece also owns 0).
/// Coefficients are given in ascending powers of `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewisePolynomial {
    breaks: Vec<f64>,
    #[serde(rename = "coeffs", serialize_with = "serialize_pieces")]
    pieces: Vec<Piece>,
}

fn serialize_pieces<S: serde::Serializer>(
    pieces: &[Piece],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(pieces.len()))?;
    for p in pieces {
        seq.serialize_element(&p.about_zero)?;
    }
    seq.end()
}

impl PiecewisePolynomial {
    /// Builds the map from breakpoints and per-piece coefficients.
    ///
    /// `breaks` may list either the interior breakpoints only (`pieces - 1`
    /// values) or the full partition including 0 and 1 (`pieces + 1` values).
    pub fn new(breaks: &[f64], coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let n = coeffs.len();
        if n == 0 {
            return Err(Error::invalid(
                "coeffs",
                "at least one polynomial piece is required",
            ));
        }
        if coeffs
            .iter()
            .any(|c| c.is_empty() || c.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::invalid(
                "coeffs",
                "every piece needs finite coefficients",
            ));
        }
        let full: Vec<f64> = if breaks.len() + 1 == n {
            std::iter::once(0.0)
                .chain(breaks.iter().copied())
                .chain(std::iter::once(1.0))
                .collect()
        } else if breaks.len() == n + 1 {
            breaks.to_vec()
        } else {
            return Err(Error::invalid(
                "breaks",
                format!(
                    "{} pieces need {} interior or {} total breakpoints, got {}",
                    n,
                    n - 1,
                    n + 1,
                    breaks.len()
                ),
            ));
        };
        if full[0] != 0.0 || full[n] != 1.0 {
            return Err(Error::invalid(
                "breaks",
                "partition must start at 0 and end at 1",
            ));
        }
        if full.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(
                "breaks",
                "breakpoints must be strictly increasing",
            ));
        }

        let mut coeffs = coeffs;
        if coeffs[0][0].abs() <= SNAP {
            coeffs[0][0] = 0.0;
        }
        let mut pieces: Vec<Piece> = coeffs.into_iter().map(Piece::new).collect();
        let last = pieces.last_mut().expect("non-empty");
        if (last.about_one[0] - 1.0).abs() <= SNAP {
            last.about_one[0] = 1.0;
        }

        let map = PiecewisePolynomial {
            breaks: full,
            pieces,
        };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        for (i, b) in self.breaks[1..self.breaks.len() - 1].iter().enumerate() {
            let left = self.pieces[i].value(*b);
            let right = self.pieces[i + 1].value(*b);
            if (left - right).abs() > CONTINUITY_TOL {
                return Err(Error::invalid(
                    "coeffs",
                    format!(
                        "pieces {i} and {} disagree at breakpoint {b}: {left} vs {right}",
                        i + 1
                    ),
                ));
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=MONOTONE_GRID {
            let r = i as f64 / MONOTONE_GRID as f64;
            let v = self.raw_value(r);
            if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&v) {
                return Err(Error::invalid(
                    "coeffs",
                    format!("map leaves [0, 1]: value {v} at r = {r}"),
                ));
            }
            if !(v > prev) {
                return Err(Error::invalid(
                    "coeffs",
                    format!("map is not strictly increasing near r = {r}"),
                ));
            }
            prev = v;
        }
        Ok(())
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn coefficients(&self) -> impl Iterator<Item = &[f64]> {
        self.pieces.iter().map(|p| p.about_zero.as_slice())
    }

    fn piece_index(&self, r: f64) -> usize {
        let interior = &self.breaks[1..self.breaks.len() - 1];
        interior.partition_point(|&b| b < r)
    }

    fn raw_value(&self, r: f64) -> f64 {
        let idx = self.piece_index(r);
        let piece = &self.pieces[idx];
        if r <= 0.5 {
            piece.value(r)
        } else {
            let u = 1.0 - r;
            1.0 - self.one_minus(piece, u)
        }
    }

    fn one_minus(&self, piece: &Piece, u: f64) -> f64 {
        let e = &piece.about_one;
        (1.0 - e[0]) - u * horner(&e[1..], u)
    }

    pub(crate) fn value(&self, r: f64) -> f64 {
        self.raw_value(r).clamp(0.0, 1.0)
    }

    pub(crate) fn derivative(&self, r: f64) -> f64 {
        self.pieces[self.piece_index(r)].derivative(r)
    }

    /// `(ln τ, ln(1 - τ))` evaluated from `(r, u = 1 - r)` and their logs.
    pub(crate) fn log_image(&self, r: f64, u: f64, ln_r: f64, ln_u: f64) -> (f64, f64) {
        let idx = self.piece_index(r);
        let piece = &self.pieces[idx];
        let last = idx + 1 == self.pieces.len();
        if r <= 0.5 {
            let c = &piece.about_zero;
            let ln_tau = match (idx, lowest_nonzero(c)) {
                (0, Some(m)) if m > 0 => {
                    let rest = horner(&c[m..], r);
                    if rest > 0.0 {
                        m as f64 * ln_r + rest.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                }
                _ => {
                    let v = piece.value(r);
                    if v > 0.0 {
                        v.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                }
            };
            let one_minus = -ln_tau.exp_m1();
            let ln_one_minus = if one_minus > 0.0 {
                one_minus.ln()
            } else {
                f64::NEG_INFINITY
            };
            (ln_tau, ln_one_minus.min(0.0))
        } else {
            let e = &piece.about_one;
            let ln_one_minus = if last && e[0] == 1.0 {
                match lowest_nonzero(&e[1..]) {
                    Some(m0) => {
                        let m = m0 + 1;
                        let rest = -horner(&e[m..], u);
                        if rest > 0.0 {
                            m as f64 * ln_u + rest.ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    }
                    None => f64::NEG_INFINITY,
                }
            } else {
                let v = self.one_minus(piece, u);
                if v > 0.0 {
                    v.ln()
                } else {
                    f64::NEG_INFINITY
                }
            };
            let ln_tau = if ln_one_minus == f64::NEG_INFINITY {
                0.0
            } else {
                (-ln_one_minus.exp()).ln_1p()
            };
            (ln_tau.min(0.0), ln_one_minus)
        }
    }

    /// Exponent limit at 0: the lowest power present in the first piece.
    pub(crate) fn beta_at_zero(&self) -> Result<f64> {
        let c = &self.pieces[0].about_zero;
        if c[0] != 0.0 {
            return Err(Error::UndefinedLimit {
                r: 0.0,
                reason: "map does not fix 0".into(),
            });
        }
        match lowest_nonzero(c) {
            Some(m) if c[m] > 0.0 => Ok(m as f64),
            _ => Err(Error::UndefinedLimit {
                r: 0.0,
                reason: "first piece has no positive leading term".into(),
            }),
        }
    }

    /// Exponent limit at 1: the left derivative of the last piece at 1.
    pub(crate) fn beta_at_one(&self) -> Result<f64> {
        let last = self.pieces.last().expect("non-empty");
        if last.about_one[0] != 1.0 {
            return Err(Error::UndefinedLimit {
                r: 1.0,
                reason: "map does not fix 1".into(),
            });
        }
        let slope = last.derivative(1.0);
        if slope > 0.0 {
            Ok(slope)
        } else {
            Err(Error::UndefinedLimit {
                r: 1.0,
                reason: format!("exponent tends to {slope} (map is tangent to the diagonal at 1)"),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_to_one_reproduces_values() {
        let c = vec![-0.5, 3.0, -1.5];
        let e = shift_to_one(&c);
        for &r in &[0.0, 0.2, 0.7, 1.0] {
            assert!((horner(&c, r) - horner(&e, 1.0 - r)).abs() < 1e-14);
        }
        assert_eq!(e, vec![1.0, 0.0, -1.5]);
    }

    #[test]
    fn accepts_interior_or_full_breaks() {
        let a = PiecewisePolynomial::new(&[0.5], vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let b = PiecewisePolynomial::new(&[0.0, 0.5, 1.0], vec![vec![0.0, 1.0], vec![0.0, 1.0]])
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_discontinuous_and_decreasing_maps() {
        let jump = PiecewisePolynomial::new(&[0.5], vec![vec![0.0, 1.0], vec![0.1, 0.9]]);
        assert!(matches!(jump, Err(Error::InvalidParameter { .. })));
        let dec = PiecewisePolynomial::new(&[], vec![vec![1.0, -1.0]]);
        assert!(dec.is_err());
        let outside = PiecewisePolynomial::new(&[], vec![vec![0.0, 2.0]]);
        assert!(outside.is_err());
        let bad_breaks = PiecewisePolynomial::new(&[0.6, 0.4], vec![vec![0.0, 1.0]; 3]);
        assert!(bad_breaks.is_err());
    }

    #[test]
    fn endpoint_exponent_limits() {
        // 3r^2 on [0, 1/3], 1 - 1.5 (r - 1)^2 on (1/3, 1]
        let p = PiecewisePolynomial::new(
            &[1.0 / 3.0],
            vec![vec![0.0, 0.0, 3.0], vec![-0.5, 3.0, -1.5]],
        )
        .unwrap();
        assert_eq!(p.beta_at_zero().unwrap(), 2.0);
        assert!(matches!(p.beta_at_one(), Err(Error::UndefinedLimit { .. })));
        let lin = PiecewisePolynomial::new(&[], vec![vec![0.0, 0.5, 0.5]]).unwrap();
        assert_eq!(lin.beta_at_zero().unwrap(), 1.0);
        assert!((lin.beta_at_one().unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn log_image_matches_direct_evaluation() {
        let p = PiecewisePolynomial::new(
            &[1.0 / 3.0],
            vec![vec![0.0, 0.0, 3.0], vec![-0.5, 3.0, -1.5]],
        )
        .unwrap();
        for &r in &[1e-5, 0.1, 0.3, 0.4, 0.6, 0.9, 1.0 - 1e-6] {
            let u = 1.0 - r;
            let (lt, lo) = p.log_image(r, u, r.ln(), u.ln());
            let v = p.value(r);
            assert!((lt.exp() - v).abs() < 1e-14, "r = {r}");
            assert!((lo.exp() - (1.0 - v)).abs() < 1e-12, "r = {r}");
        }
        // deep tails keep relative precision
        let (lt, _) = p.log_image(1e-200, 1.0, 1e-200f64.ln(), 0.0);
        assert!((lt - (3f64.ln() + 2.0 * 1e-200f64.ln())).abs() < 1e-10);
        let u = 1e-200;
        let (_, lo) = p.log_image(1.0, u, 0.0, u.ln());
        assert!((lo - (1.5f64.ln() + 2.0 * u.ln())).abs() < 1e-10);
    }
}
