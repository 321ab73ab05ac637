// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use thiserror::Error;

/// Factor whose vanishing makes the weak-drive closed form singular.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularFactor {
    /// `Y = g² − (χ + Δ_p)Δ_m`
    Y,
    /// `Z + g²X`
    ZPlusG2X,
    /// Denominator of a back-substituted amplitude (`4Δ_p + 12χ`).
    BackSubstitution,
}

impl fmt::Display for SingularFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularFactor::Y => f.write_str("Y = g^2 - (chi + delta_p) delta_m"),
            SingularFactor::ZPlusG2X => f.write_str("Z + g^2 X"),
            SingularFactor::BackSubstitution => f.write_str("4 delta_p + 12 chi"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("no unique steady state: {0}")]
    NoUniqueSteadyState(String),

    #[error("g2(0) undefined for mode `{mode}`: occupation {occupation:e} is below the guard")]
    UndefinedCorrelation { mode: String, occupation: f64 },

    #[error("singular weak-drive solution: {0} vanishes")]
    SingularCondition(SingularFactor),

    #[error("analytic g2(0) diverges: Z + g^2 X vanishes")]
    DivergingCorrelation,

    #[error("conventional blockade root undefined: delta_m is zero")]
    YRootUndefined,

    #[error("integration needs {0} steps, above the limit of 1e8")]
    StepOverflow(u64),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("sweep point {index} {values:?}: {source}")]
    SweepPoint {
        index: usize,
        values: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
