//! Cycle-level wormhole network simulator with virtual channels, credit flow
//! control and deadlock-free source routing.

pub mod error;
pub mod routing;
pub mod sim;

pub use error::SimError;
pub use routing::{RouteTable, RoutingFamily};
pub use sim::{edp, simulate, simulate_with_routes, EnergyParams, SimConfig, SimResult, Simulator};
