use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("row sums total {rows} but column sums total {cols}")]
    UnequalSums { rows: u64, cols: u64 },

    #[error("all marginal entries are zero")]
    Empty,

    #[error("degree sequence has odd sum {0}")]
    OddSum(u64),

    #[error("marginals are not bi-graphical (no simple bipartite realization)")]
    NotBigraphical,

    #[error("degree sequence has no realization of the required kind")]
    NotGraphical,

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(String),

    #[error("probabilities sum to {0}, which exceeds 1")]
    InvalidDistribution(String),

    #[error("no table with the requested key exists")]
    Infeasible,

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("gave up after {0} restarts (approximate mode)")]
    ApproximateCutoff(u64),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("expected count {0} is below 5; chi-square is unreliable")]
    InsufficientSamples(String),

    #[error("fixture refused: {0}")]
    FixtureInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
