use serde::{Deserialize, Serialize};

use super::MarketTrajectory;
use crate::error::{Error, Result};

/// Finite-horizon stand-ins for the almost-sure share limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradeThresholds {
    /// Tail maximum below this means extinction.
    pub extinction: f64,
    /// Tail minimum above this means domination.
    pub domination: f64,
    /// Tail maximum above this (without domination) means survival.
    pub survival: f64,
    /// Fraction of the trajectory discarded before the tail starts.
    pub burn_in: f64,
}

impl Default for GradeThresholds {
    fn default() -> Self {
        GradeThresholds {
            extinction: 1e-6,
            domination: 1.0 - 1e-6,
            survival: 1e-3,
            burn_in: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Grade {
    Extinction,
    Survival,
    Domination,
    Undecided,
}

/// A grade together with the tail statistics it was read from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeGrade {
    pub grade: Grade,
    /// Which threshold decided the grade.
    pub rule: &'static str,
    pub tail_min: f64,
    pub tail_max: f64,
    pub tail_mean: f64,
    pub final_share: f64,
    pub tail_len: usize,
}

/// Grades one investor's share trajectory `r_0, …, r_T` on its tail after
/// the burn-in.
pub fn grade_outcome(shares: &[f64], thresholds: &GradeThresholds) -> Result<OutcomeGrade> {
    if !(0.0..1.0).contains(&thresholds.burn_in) {
        return Err(Error::invalid("burn_in", "must lie in [0, 1)"));
    }
    let skip = (shares.len() as f64 * thresholds.burn_in).floor() as usize;
    if shares.is_empty() || skip >= shares.len() {
        return Err(Error::invalid(
            "trajectory",
            "no states left after the burn-in",
        ));
    }
    let tail = &shares[skip..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let (grade, rule) = if hi < thresholds.extinction {
        (Grade::Extinction, "tail_max_below_extinction")
    } else if lo > thresholds.domination {
        (Grade::Domination, "tail_min_above_domination")
    } else if hi > thresholds.survival {
        (Grade::Survival, "tail_max_above_survival")
    } else {
        (Grade::Undecided, "no_threshold_met")
    };
    Ok(OutcomeGrade {
        grade,
        rule,
        tail_min: lo,
        tail_max: hi,
        tail_mean: mean,
        final_share: tail[tail.len() - 1],
        tail_len: tail.len(),
    })
}

/// Grades every investor of a run and checks that a dominating investor is
/// alone and leaves everyone else extinct.
pub fn grade_run(
    traj: &MarketTrajectory,
    thresholds: &GradeThresholds,
) -> Result<Vec<OutcomeGrade>> {
    let grades = (0..traj.investors())
        .map(|i| grade_outcome(&traj.investor(i), thresholds))
        .collect::<Result<Vec<_>>>()?;
    let dominant: Vec<usize> = grades
        .iter()
        .enumerate()
        .filter(|(_, g)| g.grade == Grade::Domination)
        .map(|(i, _)| i)
        .collect();
    if dominant.len() > 1 {
        return Err(Error::Inconsistent(format!(
            "investors {dominant:?} all dominate"
        )));
    }
    if let Some(&d) = dominant.first() {
        if let Some((i, _)) = grades
            .iter()
            .enumerate()
            .find(|&(i, g)| i != d && g.grade != Grade::Extinction)
        {
            return Err(Error::Inconsistent(format!(
                "investor {d} dominates but investor {i} is not extinct"
            )));
        }
    }
    Ok(grades)
}
