use thiserror::Error;

/// Errors produced by constructors and computations in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: dimension mismatches, out-of-range coefficients,
    /// empty families, bad probability vectors, unparseable data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An enumeration, convolution, or grid allocation would exceed the
    /// configured budget. The message states what was requested and the cap.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// The per-map contraction-rate vectors are not positive scalar multiples
    /// of the Lyapunov vector, so stopping-word enumeration is undefined.
    #[error("contraction vectors are not scalar multiples of the Lyapunov vector")]
    SubgroupViolation,

    /// An operation requiring atoms on a dyadic lattice received a measure
    /// with off-lattice coordinates.
    #[error("measure is not supported on the requested lattice: {0}")]
    NotOnLattice(String),

    /// A computed quantity violated a property the implementation guarantees;
    /// reported instead of being silently clamped.
    #[error("property violation: {0}")]
    PropertyViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
