//! SRB classification of an IFS with finitely many fixed points per map.
//!
//! Three independent sources of verdicts are combined: the drift of the
//! exponent process (sign of `φ` and a variance floor), the interval graphs
//! `G_d`/`G_u`, and the basin-endpoint set that bounds how many SRB measures
//! can exist. Rules that contradict each other abort with
//! [`Error::Inconsistent`].

mod bs;
mod drift;
mod graph;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::orbit_engine::IFSystem;

pub use bs::{enumerate_bs, BSInterval, BS_TOL};
pub use drift::{
    drift_at, drift_profile, ConstantBoundDrift, DriftProfile, DRIFT_GRID, DRIFT_TOL,
    VARIANCE_FLOOR_MIN,
};
pub use graph::{
    build_graph, build_vertices, CanonicalPoints, Direction, IntervalVertex, Orientation,
    VertexGraph, CANONICAL_RADIUS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "SRB")]
    Srb,
    #[serde(rename = "NotSRB")]
    NotSrb,
    ExistsInvariantSeparated,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Openness {
    Open,
    Closed,
    Unspecified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasinRelation {
    /// The basin is exactly this interval.
    Equal,
    /// The basin contains this interval.
    Contains,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasinHint {
    pub lo: f64,
    pub hi: f64,
    pub lo_end: Openness,
    pub hi_end: Openness,
    pub relation: BasinRelation,
}

impl BasinHint {
    fn new(lo: f64, lo_end: Openness, hi: f64, hi_end: Openness, relation: BasinRelation) -> Self {
        BasinHint {
            lo,
            hi,
            lo_end,
            hi_end,
            relation,
        }
    }
}

/// Which measure a verdict is about.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum Candidate {
    /// Point mass at a common fixed point.
    Dirac(f64),
    /// Some invariant measure with `μ([0, η]) = 0` for an `η > 0`.
    SeparatedFromZero,
    /// Some invariant measure with `μ([1 - η, 1]) = 0` for an `η > 0`.
    SeparatedFromOne,
}

impl Candidate {
    pub fn name(&self) -> String {
        match self {
            Candidate::Dirac(x) => format!("delta({x})"),
            Candidate::SeparatedFromZero => "separated_from_0".into(),
            Candidate::SeparatedFromOne => "separated_from_1".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateVerdict {
    pub measure: String,
    pub candidate: Candidate,
    pub status: Status,
    /// The first rule that decided the status.
    pub rule: String,
    /// Later rules that reached the same status.
    pub supporting_rules: Vec<String>,
    pub basin_hint: Option<BasinHint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Graphs {
    pub g_d: VertexGraph,
    pub g_u: VertexGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    /// Number of basin-endpoint intervals: an upper bound on the SRB count.
    pub bs_bound: usize,
    pub bs: Vec<BSInterval>,
    /// Some map fixes only 0 and 1, so at most one SRB measure exists.
    pub at_most_one_srb: bool,
    pub fixed_points: Vec<f64>,
    pub candidates: Vec<CandidateVerdict>,
    pub graphs: Graphs,
    pub drift: Option<DriftProfile>,
    pub drift_unavailable: Option<String>,
    pub variance_floor: Option<f64>,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn verdict(&self, c: Candidate) -> Option<&CandidateVerdict> {
        self.candidates.iter().find(|v| v.candidate == c)
    }

    pub fn status(&self, c: Candidate) -> Status {
        self.verdict(c).map_or(Status::Unknown, |v| v.status)
    }

    pub fn srb_measures(&self) -> Vec<&CandidateVerdict> {
        self.candidates
            .iter()
            .filter(|v| v.status == Status::Srb)
            .collect()
    }
}

/// Rule tags.
pub mod rules {
    pub const NEGATIVE_DRIFT_UNIQUE: &str = "negative_drift_unique";
    pub const POSITIVE_DRIFT_UNIQUE: &str = "positive_drift_unique";
    pub const NONPOSITIVE_DRIFT_WITH_VARIANCE: &str = "nonpositive_drift_with_variance";
    pub const NONNEGATIVE_DRIFT_WITH_VARIANCE: &str = "nonnegative_drift_with_variance";
    pub const DOWN_INTERVALS_AT_ZERO: &str = "down_intervals_at_zero";
    pub const UP_INTERVALS_AT_ONE: &str = "up_intervals_at_one";
    pub const DOWN_GRAPH_SOURCE: &str = "down_graph_source";
    pub const UP_GRAPH_SOURCE: &str = "up_graph_source";
    pub const ESCAPE_FROM_ZERO: &str = "escape_from_zero";
    pub const ESCAPE_FROM_ONE: &str = "escape_from_one";
    pub const UP_INTERVALS_SHARE_RIGHT_END: &str = "up_intervals_share_right_end";
    pub const DOWN_INTERVALS_SHARE_LEFT_END: &str = "down_intervals_share_left_end";
    pub const NO_RULE: &str = "no_rule_fired";
}

struct Ledger {
    verdicts: Vec<CandidateVerdict>,
}

impl Ledger {
    fn record(
        &mut self,
        candidate: Candidate,
        status: Status,
        rule: &str,
        hint: Option<BasinHint>,
    ) -> Result<()> {
        let same = |a: &Candidate, b: &Candidate| match (a, b) {
            (Candidate::Dirac(x), Candidate::Dirac(y)) => (x - y).abs() <= 2.0 * CANONICAL_RADIUS,
            _ => a == b,
        };
        if let Some(v) = self
            .verdicts
            .iter_mut()
            .find(|v| same(&v.candidate, &candidate))
        {
            if v.status != status {
                return Err(Error::Inconsistent(format!(
                    "{}: rule {} says {:?} but rule {} says {:?}",
                    v.measure, v.rule, v.status, rule, status
                )));
            }
            v.supporting_rules.push(rule.to_string());
            if v.basin_hint.is_none() {
                v.basin_hint = hint;
            }
            return Ok(());
        }
        self.verdicts.push(CandidateVerdict {
            measure: candidate.name(),
            candidate,
            status,
            rule: rule.to_string(),
            supporting_rules: Vec::new(),
            basin_hint: hint,
        });
        Ok(())
    }
}

/// Runs every applicable criterion and merges the verdicts.
pub fn classify(ifs: &IFSystem) -> Result<ClassificationReport> {
    classify_with_grid(ifs, DRIFT_GRID)
}

pub fn classify_with_grid(ifs: &IFSystem, grid: usize) -> Result<ClassificationReport> {
    use rules::*;
    use Openness::{Closed, Open, Unspecified};

    if !ifs.fixes_endpoints() {
        return Err(Error::invalid(
            "maps",
            "classification requires every map to fix both 0 and 1",
        ));
    }
    let vertices = build_vertices(ifs)?;
    let canon = CanonicalPoints::of(ifs)?;
    let g_d = build_graph(&vertices, Direction::Down)?;
    let g_u = build_graph(&vertices, Direction::Up)?;
    let bs = enumerate_bs(ifs, &canon.0);
    let interior = canon.common_interior(ifs)?;
    let at_most_one_srb = ifs
        .maps()
        .iter()
        .map(|m| m.fixed_point_set().map(|f| f.points.len() == 2))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .any(|x| x);

    let mut ledger = Ledger {
        verdicts: Vec::new(),
    };
    let mut notes = Vec::new();
    let (drift, drift_unavailable) = match drift_profile(ifs, grid) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };

    // (i) strict drift sign ⇒ unique SRB at an endpoint
    // (ii) weak drift sign with a variance floor ⇒ that endpoint is not SRB
    if let Some(d) = &drift {
        if d.sup < -DRIFT_TOL {
            ledger.record(
                Candidate::Dirac(1.0),
                Status::Srb,
                NEGATIVE_DRIFT_UNIQUE,
                Some(BasinHint::new(0.0, Open, 1.0, Closed, BasinRelation::Equal)),
            )?;
            ledger.record(
                Candidate::Dirac(0.0),
                Status::NotSrb,
                NEGATIVE_DRIFT_UNIQUE,
                None,
            )?;
            for &x in &interior {
                ledger.record(
                    Candidate::Dirac(x),
                    Status::NotSrb,
                    NEGATIVE_DRIFT_UNIQUE,
                    None,
                )?;
            }
        }
        if d.inf > DRIFT_TOL {
            ledger.record(
                Candidate::Dirac(0.0),
                Status::Srb,
                POSITIVE_DRIFT_UNIQUE,
                Some(BasinHint::new(0.0, Closed, 1.0, Open, BasinRelation::Equal)),
            )?;
            ledger.record(
                Candidate::Dirac(1.0),
                Status::NotSrb,
                POSITIVE_DRIFT_UNIQUE,
                None,
            )?;
            for &x in &interior {
                ledger.record(
                    Candidate::Dirac(x),
                    Status::NotSrb,
                    POSITIVE_DRIFT_UNIQUE,
                    None,
                )?;
            }
        }
        let varied = d.variance_floor > VARIANCE_FLOOR_MIN;
        if d.sup <= DRIFT_TOL && varied {
            ledger.record(
                Candidate::Dirac(0.0),
                Status::NotSrb,
                NONPOSITIVE_DRIFT_WITH_VARIANCE,
                None,
            )?;
        }
        if d.inf >= -DRIFT_TOL && varied {
            ledger.record(
                Candidate::Dirac(1.0),
                Status::NotSrb,
                NONNEGATIVE_DRIFT_WITH_VARIANCE,
                None,
            )?;
        }
    }

    // (iii) graph rules
    let l = ifs.len();
    let starting_at_zero: Vec<&IntervalVertex> = vertices.iter().filter(|v| v.lo == 0.0).collect();
    let ending_at_one: Vec<&IntervalVertex> = vertices.iter().filter(|v| v.hi == 1.0).collect();
    let per_map = |set: &[&IntervalVertex], o: Orientation| -> Option<Vec<IntervalVertex>> {
        (0..l)
            .map(|s| {
                set.iter()
                    .find(|v| v.map == s && v.orientation == o)
                    .map(|v| **v)
            })
            .collect()
    };

    if let Some(vs) = per_map(&starting_at_zero, Orientation::Down) {
        let a = vs.iter().map(|v| v.hi).fold(f64::INFINITY, f64::min);
        ledger.record(
            Candidate::Dirac(0.0),
            Status::Srb,
            DOWN_INTERVALS_AT_ZERO,
            Some(BasinHint::new(
                0.0,
                Closed,
                a,
                Open,
                BasinRelation::Contains,
            )),
        )?;
    }
    if let Some(vs) = per_map(&ending_at_one, Orientation::Up) {
        let b = vs.iter().map(|v| v.lo).fold(f64::NEG_INFINITY, f64::max);
        ledger.record(
            Candidate::Dirac(1.0),
            Status::Srb,
            UP_INTERVALS_AT_ONE,
            Some(BasinHint::new(
                b,
                Open,
                1.0,
                Closed,
                BasinRelation::Contains,
            )),
        )?;
    }
    if let Some(v) = g_d.sources().find(|v| v.hi != 1.0) {
        ledger.record(
            Candidate::SeparatedFromZero,
            Status::ExistsInvariantSeparated,
            DOWN_GRAPH_SOURCE,
            Some(BasinHint::new(
                v.hi,
                Unspecified,
                1.0,
                Unspecified,
                BasinRelation::Contains,
            )),
        )?;
    }
    if let Some(v) = g_u.sources().find(|v| v.lo != 0.0) {
        ledger.record(
            Candidate::SeparatedFromOne,
            Status::ExistsInvariantSeparated,
            UP_GRAPH_SOURCE,
            Some(BasinHint::new(
                0.0,
                Unspecified,
                v.lo,
                Unspecified,
                BasinRelation::Contains,
            )),
        )?;
    }
    let escape_zero = starting_at_zero.iter().any(|u| {
        u.orientation == Orientation::Up
            && g_u.out_degree(u.id) >= 1
            && starting_at_zero
                .iter()
                .any(|w| w.hi < u.hi && g_d.is_source(w.id))
    });
    if escape_zero {
        ledger.record(
            Candidate::Dirac(0.0),
            Status::NotSrb,
            ESCAPE_FROM_ZERO,
            None,
        )?;
        notes.push(
            "escape_from_zero: the threshold a_{s0,m+1} is read as the right end of the G_d source interval"
                .into(),
        );
    }
    let escape_one = ending_at_one.iter().any(|d| {
        d.orientation == Orientation::Down
            && g_d.out_degree(d.id) >= 1
            && ending_at_one
                .iter()
                .any(|w| w.lo > d.lo && g_u.is_source(w.id))
    });
    if escape_one {
        ledger.record(Candidate::Dirac(1.0), Status::NotSrb, ESCAPE_FROM_ONE, None)?;
    }
    if let Some(vs) = per_map(&starting_at_zero, Orientation::Up) {
        let a = vs[0].hi;
        if vs.iter().all(|v| v.hi == a) {
            ledger.record(
                Candidate::Dirac(a),
                Status::Srb,
                UP_INTERVALS_SHARE_RIGHT_END,
                Some(BasinHint::new(0.0, Open, a, Closed, BasinRelation::Equal)),
            )?;
            ledger.record(
                Candidate::Dirac(0.0),
                Status::NotSrb,
                UP_INTERVALS_SHARE_RIGHT_END,
                None,
            )?;
        }
    }
    if let Some(vs) = per_map(&ending_at_one, Orientation::Down) {
        let b = vs[0].lo;
        if vs.iter().all(|v| v.lo == b) {
            ledger.record(
                Candidate::Dirac(b),
                Status::Srb,
                DOWN_INTERVALS_SHARE_LEFT_END,
                Some(BasinHint::new(b, Closed, 1.0, Open, BasinRelation::Equal)),
            )?;
            ledger.record(
                Candidate::Dirac(1.0),
                Status::NotSrb,
                DOWN_INTERVALS_SHARE_LEFT_END,
                None,
            )?;
        }
    }

    // (iv) counting bounds
    let mut candidates = ledger.verdicts;
    let all: Vec<Candidate> = [Candidate::Dirac(0.0), Candidate::Dirac(1.0)]
        .into_iter()
        .chain(interior.iter().map(|&x| Candidate::Dirac(x)))
        .chain([Candidate::SeparatedFromZero, Candidate::SeparatedFromOne])
        .collect();
    for c in all {
        if !candidates.iter().any(|v| v.candidate == c) {
            candidates.push(CandidateVerdict {
                measure: c.name(),
                candidate: c,
                status: Status::Unknown,
                rule: NO_RULE.into(),
                supporting_rules: Vec::new(),
                basin_hint: None,
            });
        }
    }
    let srb_count = candidates
        .iter()
        .filter(|v| v.status == Status::Srb)
        .count();
    if srb_count > bs.len() || (at_most_one_srb && srb_count > 1) {
        return Err(Error::Inconsistent(format!(
            "{srb_count} SRB verdicts exceed the endpoint bound {} (single-SRB bound: {at_most_one_srb})",
            bs.len()
        )));
    }
    if bs.len() > srb_count {
        notes.push(format!(
            "the endpoint bound counts nested intervals and may exceed the number of SRB measures ({} intervals)",
            bs.len()
        ));
    }
    notes.push("basin hints summarize the interval named by the firing rule; endpoint openness is as stated by the rule or unspecified".into());

    let variance_floor = drift.as_ref().map(|d| d.variance_floor);
    Ok(ClassificationReport {
        bs_bound: bs.len(),
        bs,
        at_most_one_srb,
        fixed_points: canon.0,
        candidates,
        graphs: Graphs { g_d, g_u },
        drift,
        drift_unavailable,
        variance_floor,
        notes,
    })
}
