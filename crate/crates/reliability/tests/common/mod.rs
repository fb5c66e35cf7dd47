#![allow(dead_code)]

use swnoc_core::stage::{stage_optimize, StageConfig};
use swnoc_core::{build_mesh, synth_traffic, Geometry, GridDims, NetworkConstraints, SwGenConfig, SyntheticTrafficSpec};
use swnoc_netsim::{simulate, EnergyParams, SimConfig};
use swnoc_reliability::{AgingContext, AgingParams, TimelineConfig};

pub fn toy_dims() -> GridDims {
    GridDims::new(4, 2, 2)
}

pub fn toy_sim(seed: u64) -> SimConfig {
    SimConfig {
        injection_rate: 0.2,
        warmup_cycles: 1000,
        measure_cycles: 10_000,
        seed,
        ..SimConfig::default()
    }
}

/// 16-node two-die chip with an optimized small-world topology, normalized
/// against the fault-free mesh on the same traffic.
pub fn toy_context(seed: u64) -> AgingContext {
    let dims = toy_dims();
    let constraints = NetworkConstraints::mesh_equivalent(dims);
    let traffic = synth_traffic(SyntheticTrafficSpec::SkewedMiddle { gap: 1, share: 0.5 }, dims, seed);
    let cfg = StageConfig {
        seed,
        budget: Some(1000),
        start: SwGenConfig {
            dims,
            constraints,
            ..SwGenConfig::default()
        },
        ..StageConfig::default()
    };
    let topo = stage_optimize(&traffic, &constraints, &cfg).unwrap().best;
    let sim = toy_sim(seed);
    let mesh = simulate(&build_mesh(dims, Geometry::default()), &traffic, &sim, &EnergyParams::default()).unwrap();
    AgingContext::new(topo, traffic, sim, EnergyParams::default(), AgingParams::default(), mesh.edp.unwrap())
        .unwrap()
        .with_timeline(TimelineConfig {
            stop_at_threshold: true,
            ..TimelineConfig::default()
        })
}
