use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("router {0} is outside the grid")]
    UnknownRouter(usize),
    #[error("self loop at router {0}")]
    SelfLoop(usize),
    #[error("link {a}-{b} is neither planar nor a regular vertical link")]
    IllegalLink { a: usize, b: usize },
    #[error("parallel link {a}-{b}")]
    ParallelLink { a: usize, b: usize },
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("malformed topology file: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrafficError {
    #[error("expected {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("entry ({i},{j}) = {value} is negative or not finite")]
    BadEntry { i: usize, j: usize, value: f64 },
    #[error("diagonal entry {0} is nonzero")]
    Diagonal(usize),
    #[error("traffic matrix has no positive entry")]
    Silent,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerationError {
    #[error("no connected design satisfying the constraints after {retries} attempts")]
    GenerationFailed { retries: usize },
    #[error("planar budget {budget} not reachable under k_max {k_max}")]
    Infeasible { budget: usize, k_max: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}
