//! Building blocks shared by commands and recipes.

use swnoc_core::stage::{
    hill_climb_optimize, simulated_annealing, stage_optimize, start_design, AnnealSchedule, MoveSpace, Objective,
    OptimizationReport,
};
use swnoc_core::{
    build_3d_sw, build_mesh, build_mrrm, build_rrrr, synth_traffic, SwGenConfig, Topology, TrafficProfile,
};
use swnoc_netsim::{simulate, SimResult};
use swnoc_reliability::{AgingContext, BundleModel, TimelineConfig};

use crate::config::{Algo, ExperimentConfig, Family, TrafficSource};
use crate::error::HarnessError;

pub fn traffic(cfg: &ExperimentConfig) -> Result<TrafficProfile, HarnessError> {
    let dims = cfg.topology.dims;
    let t = match &cfg.traffic {
        TrafficSource::File { path } => {
            let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
            TrafficProfile::parse(&text)?
        }
        other => synth_traffic(other.synthetic().expect("synthetic source"), dims, cfg.seed),
    };
    if t.n() != dims.nodes() {
        return Err(HarnessError::Config(format!(
            "traffic has {} nodes but the grid has {}",
            t.n(),
            dims.nodes()
        )));
    }
    Ok(t)
}

pub fn optimize(
    cfg: &ExperimentConfig,
    traffic: &TrafficProfile,
    algo: Algo,
    alpha: f64,
) -> Result<OptimizationReport, HarnessError> {
    let constraints = cfg.topology.constraints();
    let stage = cfg.stage(cfg.seed, alpha);
    Ok(match algo {
        Algo::Stage => stage_optimize(traffic, &constraints, &stage)?,
        Algo::Hc => hill_climb_optimize(start_design(traffic, &constraints, &stage)?, traffic, &constraints, &stage),
        Algo::Sa => {
            let d0 = start_design(traffic, &constraints, &stage)?;
            let space = MoveSpace::new(&d0, &constraints);
            let mut objective = Objective::new(&d0, traffic, stage.cost);
            let schedule = AnnealSchedule {
                budget: cfg.search.budget,
                ..cfg.search.anneal
            };
            simulated_annealing(d0, |d| objective.eval(d), &space, &schedule, cfg.seed)
        }
    })
}

/// Builds one family on the configured grid. `SwOpt` runs the configured optimizer.
pub fn build(
    cfg: &ExperimentConfig,
    family: Family,
    alpha: f64,
    traffic: &TrafficProfile,
) -> Result<Topology, HarnessError> {
    let t = &cfg.topology;
    let topo = match family {
        Family::Mesh => build_mesh(t.dims, t.geometry),
        Family::Mrrm => build_mrrm(t.dims, t.geometry, cfg.seed)?,
        Family::Rrrr => build_rrrr(t.dims, t.geometry, cfg.seed)?,
        Family::Sw => build_3d_sw(&SwGenConfig {
            alpha,
            seed: cfg.seed,
            dims: t.dims,
            geometry: t.geometry,
            constraints: t.constraints(),
            ..SwGenConfig::default()
        })?,
        Family::SwOpt => optimize(cfg, traffic, cfg.search.algo, alpha)?.best,
    };
    Ok(topo)
}

/// The configured topology: the file if one is named, otherwise a generated design.
pub fn topology(cfg: &ExperimentConfig, traffic: &TrafficProfile) -> Result<Topology, HarnessError> {
    match &cfg.topology.file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
            let topo = Topology::from_toml(&text)?;
            if topo.dims() != cfg.topology.dims {
                return Err(HarnessError::Config(format!("{} does not match the configured grid", path.display())));
            }
            Ok(topo)
        }
        None => build(cfg, cfg.topology.family, cfg.topology.alpha, traffic),
    }
}

pub fn run_sim(cfg: &ExperimentConfig, topo: &Topology, traffic: &TrafficProfile) -> Result<SimResult, HarnessError> {
    Ok(simulate(topo, traffic, &cfg.sim, &cfg.energy)?)
}

/// Fault-free mesh EDP on the same traffic, the lifetime threshold.
pub fn mesh_edp(cfg: &ExperimentConfig, traffic: &TrafficProfile) -> Result<f64, HarnessError> {
    let mesh = build_mesh(cfg.topology.dims, cfg.topology.geometry);
    run_sim(cfg, &mesh, traffic)?
        .edp
        .ok_or_else(|| HarnessError::Config("mesh delivered no packets; raise the measurement window".into()))
}

pub fn aging_context(
    cfg: &ExperimentConfig,
    topo: Topology,
    traffic: TrafficProfile,
    threshold: f64,
    stop_at_threshold: bool,
) -> Result<AgingContext, HarnessError> {
    let bundle = cfg.svl.bundle_side.map_or_else(BundleModel::default, BundleModel::graded);
    Ok(AgingContext::new(topo, traffic, cfg.sim, cfg.energy, cfg.aging, threshold)?
        .with_bundle(bundle)
        .with_timeline(TimelineConfig {
            stop_at_threshold: stop_at_threshold || cfg.timeline.stop_at_threshold,
            ..cfg.timeline
        }))
}

/// VLs present in the topology.
pub fn functional_vls(topo: &Topology) -> Vec<usize> {
    topo.vl_links()
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_some())
        .map(|(i, _)| i)
        .collect()
}
