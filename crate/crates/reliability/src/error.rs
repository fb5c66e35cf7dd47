use num_bigint::BigUint;
use swnoc_netsim::SimError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgingError {
    #[error("invalid aging parameters: {0}")]
    InvalidParams(String),
    #[error("every live vertical link is idle")]
    NoFailurePossible,
    #[error("bad spares file: {0}")]
    Parse(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvlError {
    #[error("search space has {count} candidates, above the cap of {cap}")]
    SearchSpaceTooLarge { count: BigUint, cap: u64 },
    #[error("cannot pick {n} spares from a pool of {pool}")]
    PoolTooSmall { n: usize, pool: usize },
    #[error(transparent)]
    Aging(#[from] AgingError),
}
