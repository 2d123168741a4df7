use crate::csp::VarId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("variable '{var}' (index {index}) has an empty domain")]
    EmptyDomain { var: String, index: usize },
    #[error("constraint {constraint} references undeclared variable index {var}")]
    UnknownVariable { constraint: usize, var: usize },
    #[error("constraint {constraint} has {coeffs} coefficients for {vars} variables")]
    CoefficientMismatch {
        constraint: usize,
        coeffs: usize,
        vars: usize,
    },
    #[error("constraint {constraint} has an empty scope")]
    EmptyScope { constraint: usize },
    #[error("objective references undeclared variable index {var}")]
    UnknownObjective { var: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CspError {
    #[error("value {value} is not in the domain of {var}")]
    ValueOutsideDomain { var: VarId, value: i32 },
    #[error("subproblem assignment is inconsistent with propagation")]
    InconsistentSubproblem,
    #[error("optimization requested on a model without objective")]
    NoObjective,
    #[error("root problem is inconsistent with propagation")]
    InconsistentRoot,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error("cannot draw {k} subproblems from a population of {population}")]
    TooLarge { k: usize, population: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("no non-zero differences to rank")]
    EmptySample,
    #[error("exact distribution is limited to n <= {max} (got {n})")]
    ExactTooLarge { n: usize, max: usize },
    #[error("degenerate variance")]
    DegenerateVariance,
    #[error("paired samples differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("need at least {need} pairs, got {got}")]
    TooFewPairs { need: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BanditError {
    #[error("solving time must be positive (got {0})")]
    NonPositiveTime(f64),
    #[error("mean solving time must be positive (got {0})")]
    NonPositiveMean(f64),
    #[error("bandit needs at least one arm")]
    NoArms,
}

/// Errors surfaced by the end-to-end drivers.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("decomposition produced no subproblems")]
    NoSubproblems,
    #[error("no candidate strategies given")]
    NoStrategies,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("task {task} failed twice: {message}")]
    TaskFailed { task: usize, message: String },
}
