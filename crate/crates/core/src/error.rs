use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("matrix is not Hermitian: entry ({row}, {col}) deviates by {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("vector norm is {norm}, expected 1")]
    NotNormalized { norm: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("operation needs a bipartite state with a second factor of dimension >= 2")]
    SingleParty,

    #[error("operation needs equal factor dimensions, got ({a}, {b})")]
    UnequalFactors { a: usize, b: usize },

    #[error("state is not a product of its reduced states (trace-norm gap {gap:e})")]
    NotProduct { gap: f64 },

    #[error("state is rank deficient (min eigenvalue {min_eigenvalue:e}); regularize first")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("K = {k} violates the positivity bound (K+1)n >= 1/p0 for n = {n}, p0 = {p0:e}")]
    KTooSmall { k: u64, n: usize, p0: f64 },

    #[error("smeared density overflows the float range (ln mu = {ln_mu:.3}); K = {k} is too large")]
    DensityOverflow { k: u64, ln_mu: f64 },

    #[error("exponent <phi|X|phi> = {max_exponent:.3} exceeds the safe float range")]
    ExponentOverflow { max_exponent: f64 },

    #[error("step size underflows: ln(lambda) = {ln_lambda:.3} is below the smallest normal float")]
    LambdaUnderflow { ln_lambda: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate random draw after {attempts} attempts")]
    DegenerateDraw { attempts: usize },

    #[error("trace sink failed")]
    Sink(#[from] std::io::Error),
}
