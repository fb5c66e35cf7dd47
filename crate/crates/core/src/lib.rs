//! Small-world 3D network-on-chip design: topology model, generators, the
//! analytic communication cost, regression-tree evaluation functions and the
//! STAGE optimizer with hill-climbing and annealing baselines.

pub mod cost;
pub mod error;
pub mod learner;
pub mod model;
pub mod rng;
pub mod stage;
pub mod topogen;
pub mod traffic;

pub use cost::{comm_cost, feature_vector, CostParams, FeatureVector};
pub use error::{GenerationError, ModelError, TrafficError};
pub use learner::{RegressionTree, TrainingSet, TreeParams};
pub use model::{GridDims, Geometry, HopMatrix, Link, LinkKind, NetworkConstraints, Position, RouterId, Topology};
pub use topogen::{build_mesh, build_mrrm, build_rrrr, build_3d_sw, SwGenConfig};
pub use traffic::{synth_traffic, SyntheticTrafficSpec, TrafficProfile};
