use thiserror::Error;

/// Errors raised by the arithmetic kernels and the module-level operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("element is not a unit (valuation {valuation})")]
    NotAUnit { valuation: u32 },

    #[error("incompatible precision: {left} vs {right}")]
    IncompatiblePrecision { left: String, right: String },

    #[error("element vanishes at working precision")]
    ZeroAtPrecision,

    #[error("no unit coefficient below T-degree {cap}")]
    DegreeCapExceeded { cap: usize },

    #[error("iteration did not converge within {iterations} steps")]
    NoConvergence { iterations: u32 },

    #[error("not a distinguished polynomial: {0}")]
    NotDistinguished(String),

    #[error("factorization incomplete; unsplit residual of degree {residual_degree}")]
    PartialFactorization { residual_degree: usize },

    #[error("polynomial is not irreducible: {0}")]
    NotIrreducible(String),

    #[error("presentation matrix is singular at working precision (module not torsion)")]
    NotTorsionAtPrecision,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("degenerate specialization at n = {n}: {reason}")]
    DegenerateSpecialization { n: u32, reason: String },

    #[error("prime avoidance impossible: target also listed in the avoid set")]
    AvoidanceImpossible,

    #[error("specialization lies in a support prime of the module: {0}")]
    PrimeNotAvoided(String),

    #[error("extension is inseparable at working precision (ramification resultant vanishes)")]
    InseparableAtPrecision,

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
