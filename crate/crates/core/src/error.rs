//! Crate-wide error type.
//!
//! Errors are grouped by origin: domain construction, data validation,
//! expression parsing, assembly/solve failures, and verification driver
//! misuse. Solver errors carry the time step and level indices at which they
//! occurred so a failed backward run can be located in the `(k, p)` grid.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Geometry or grid construction violated an invariant.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// A grid was requested below an admissibility threshold.
    #[error("{quantity} below admissibility threshold: rate {rate} < {floor} = {formula}")]
    BelowThreshold {
        /// Which scheme parameter is too small (e.g. `n_t`).
        quantity: &'static str,
        /// The offered reciprocal step.
        rate: f64,
        /// The required floor.
        floor: f64,
        /// Human-readable formula the floor was computed from.
        formula: String,
    },

    /// Problem data are structurally unusable (wrong arity, missing field).
    #[error("invalid problem data: {0}")]
    InvalidData(String),

    /// An expression failed to parse.
    #[error("expression error at byte {position}: {message} in `{source_text}`")]
    Expression {
        position: usize,
        message: String,
        source_text: String,
    },

    /// A sampled coefficient evaluated to a non-finite value.
    #[error("non-finite coefficient: {name} = {value} at (t={t}, x={x}, l={l})")]
    NonFiniteCoefficient {
        name: String,
        value: f64,
        t: f64,
        x: f64,
        l: f64,
    },

    /// Direct solve hit a vanishing pivot inside a ray block.
    #[error("degenerate ray elimination: ray {ray}, row {row} (time step {time_index})")]
    DegenerateRay {
        ray: usize,
        row: usize,
        time_index: usize,
    },

    /// The junction reduction produced a vanishing scalar pivot.
    #[error("degenerate junction reduction at time step {time_index}")]
    DegenerateJunction { time_index: usize },

    /// A solver failure, tagged with the level it occurred in.
    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    /// Misuse of a verification or norm helper.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A problem document could not be read or decoded.
    #[error("problem document: {0}")]
    Document(String),
}

impl Error {
    /// Tag an error with the level index of the backward recursion it
    /// occurred in.
    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::AtLevel {
            level,
            source: Box::new(self),
        }
    }
}
