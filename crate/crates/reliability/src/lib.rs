//! Vertical-link aging and spare allocation.

pub mod aging;
pub mod error;
pub mod svl;

pub use aging::{
    critical_set, effective_life, lifetime, AgingContext, AgingParams, BundleModel, DamageState, FailureTimeline,
    Lifetime, SpareAllocation, TimelineConfig,
};
pub use error::{AgingError, SvlError};
pub use svl::{
    exhaustive_allocate, greedy_allocate, prune_equivalence_check, saturation_sweep, static_allocate,
    AgingEvaluator, Evaluation, Evaluator, Memoized, SearchResult, SearchStats,
};
