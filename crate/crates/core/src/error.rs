use thiserror::Error;

/// Errors raised by map construction, simulation and classification.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} lies outside the unit interval")]
    Domain { value: f64 },

    #[error("invalid `{field}`: {message}")]
    InvalidParameter { field: String, message: String },

    #[error("degenerate fixed set: map {map_label} is (numerically) the identity on [{lo}, {hi}]")]
    DegenerateFixedSet { map_label: String, lo: f64, hi: f64 },

    #[error("exponent limit at r = {r} is undefined: {reason}")]
    UndefinedLimit { r: f64, reason: String },

    #[error("map sends interior point {r} to the boundary value {image}")]
    BadMap { r: f64, image: f64 },

    #[error("exponent of map {map} is not bounded away from 0 and infinity: {reason}")]
    UnboundedExponent { map: usize, reason: String },

    #[error("payoff column for state {state} sums to zero")]
    ZeroPayoffColumn { state: usize },

    #[error("market clearing drifted by {error:e} at step {step}")]
    ClearingDrift { step: usize, error: f64 },

    #[error("internal consistency violated: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in structured diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DegenerateFixedSet { .. } => "degenerate_fixed_set",
            Error::UndefinedLimit { .. } => "undefined_limit",
            Error::BadMap { .. } => "bad_map",
            Error::UnboundedExponent { .. } => "unbounded_exponent",
            Error::ZeroPayoffColumn { .. } => "zero_payoff_column",
            Error::ClearingDrift { .. } => "clearing_drift",
            Error::Inconsistent(_) => "inconsistent",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
