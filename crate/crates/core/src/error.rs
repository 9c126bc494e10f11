use thiserror::Error;

/// Failure modes shared by every scheme in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("rank-deficient matrix (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("degenerate sampling distribution: {0}")]
    DegenerateDistribution(String),
    #[error("cannot reach {target} distinct indices, support has only {support}")]
    UnreachableTarget { target: usize, support: usize },
    #[error("evaluation point failure: polynomial {column} vanishes at zero")]
    EvaluationPoint { column: usize },
    #[error("degree overflow: {stragglers} stragglers need degree > k-1 = {max_degree}")]
    DegreeOverflow { stragglers: usize, max_degree: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),
    #[error("insufficient responses: need {needed}, got {got}")]
    InsufficientResponses { needed: usize, got: usize },
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),
    #[error("combinatorial budget exceeded: {count} sets > {budget}")]
    BudgetExceeded { count: u128, budget: u128 },
    #[error("unrecoverable round: {0}")]
    UnrecoverableRound(String),
}

pub type Result<T> = std::result::Result<T, Error>;
