use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("dimension-order routing needs a full mesh")]
    NotAMesh,
    #[error("no route from {src} to {dst}")]
    RoutingUnreachable { src: usize, dst: usize },
    #[error("no flit moved for {stalled} cycles at cycle {cycle} with {in_network} flits buffered")]
    Deadlock { cycle: u64, stalled: u64, in_network: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("traffic has {traffic} nodes, topology has {topology}")]
    SizeMismatch { traffic: usize, topology: usize },
}
