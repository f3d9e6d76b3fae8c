use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (relative deviation {deviation:.3e})")]
    Asymmetric { deviation: f64 },

    #[error("system must contain at least one constraint in dimension at least one")]
    EmptySystem,

    #[error("aggregation weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("aggregation weights are all zero")]
    ZeroWeights,

    #[error("basis matrix is rank deficient")]
    RankDeficient,

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("Jacobi iteration did not converge within {sweeps} sweeps (off-diagonal {off:.3e})")]
    EigenNonConvergence { sweeps: usize, off: f64 },

    #[error("pencil singular everywhere: det(αQ1+(1−α)Q2) vanishes identically")]
    PencilSingular,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("input vectors are linearly dependent")]
    DependentVectors,

    #[error("operation requires {required} constraints")]
    StrictnessMismatch { required: &'static str },

    #[error("post-condition check failed: {0}")]
    PostCheckFailed(String),

    #[error("system is not of sphere type (each A must be I, 0 or −I)")]
    NotSphereType,

    #[error("system is not diagonal")]
    NotDiagonal,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("Fourier–Motzkin elimination exceeded {rows} intermediate rows")]
    EliminationBlowup { rows: usize },

    #[error("sampling found no point of the set after {draws} draws")]
    SamplingFailed { draws: usize },

    #[error("a nonzero nonnegative aggregation vanishes: {lambda:?}")]
    ZeroAggregation { lambda: Vec<f64> },

    #[error("the interior of the closed convex hull is empty")]
    EmptyInterior,

    #[error("operation requires a form with exactly one negative eigenvalue")]
    WrongKind,

    #[error("no triple witness available for support {support:?}")]
    MissingTripleWitness { support: Vec<usize> },

    #[error("improved weights leave the nonnegative orthant at index {index}")]
    LeavesOrthant { index: usize },

    #[error("improving direction is not positive semidefinite (λ_min = {min_eig:.3e})")]
    NotPsdDirection { min_eig: f64 },

    #[error("negative eigenvalue count increased from {before} to {after} after a PSD update")]
    WeylViolation { before: usize, after: usize },

    #[error("point is off the image variety (residual {residual:.3e})")]
    OffVariety { residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}
