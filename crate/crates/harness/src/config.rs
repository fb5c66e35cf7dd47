//! One TOML file per run. Every table is optional and falls back to defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use swnoc_core::stage::{AnnealSchedule, StageConfig};
use swnoc_core::{GridDims, Geometry, NetworkConstraints, SyntheticTrafficSpec};
use swnoc_netsim::{EnergyParams, SimConfig};
use swnoc_reliability::{AgingParams, TimelineConfig};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Mesh,
    Mrrm,
    Rrrr,
    Sw,
    /// STAGE-optimized small world.
    SwOpt,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Mesh => "mesh",
            Family::Mrrm => "mrrm",
            Family::Rrrr => "rrrr",
            Family::Sw => "sw_rand",
            Family::SwOpt => "sw_opt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub family: Family,
    pub alpha: f64,
    pub dims: GridDims,
    pub geometry: Geometry,
    /// Defaults to the mesh-equivalent budget for `dims`.
    pub constraints: Option<NetworkConstraints>,
    /// Load this topology file instead of generating one.
    pub file: Option<PathBuf>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            family: Family::SwOpt,
            alpha: 2.4,
            dims: GridDims::default(),
            geometry: Geometry::default(),
            constraints: None,
            file: None,
        }
    }
}

impl TopologyConfig {
    pub fn constraints(&self) -> NetworkConstraints {
        self.constraints.unwrap_or_else(|| NetworkConstraints::mesh_equivalent(self.dims))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrafficSource {
    File { path: PathBuf },
    Uniform,
    Hotspot { pairs: usize, ratio: f64 },
    SkewedMiddle { gap: usize, share: f64 },
}

impl Default for TrafficSource {
    fn default() -> Self {
        TrafficSource::SkewedMiddle { gap: 2, share: 0.5 }
    }
}

impl TrafficSource {
    pub fn synthetic(&self) -> Option<SyntheticTrafficSpec> {
        match *self {
            TrafficSource::File { .. } => None,
            TrafficSource::Uniform => Some(SyntheticTrafficSpec::Uniform),
            TrafficSource::Hotspot { pairs, ratio } => Some(SyntheticTrafficSpec::Hotspot { pairs, ratio }),
            TrafficSource::SkewedMiddle { gap, share } => Some(SyntheticTrafficSpec::SkewedMiddle { gap, share }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Stage,
    Sa,
    Hc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub algo: Algo,
    /// Objective evaluations per optimization run.
    pub budget: usize,
    pub stage: StageConfig,
    pub anneal: AnnealSchedule,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            algo: Algo::Stage,
            budget: 5000,
            stage: StageConfig::default(),
            anneal: AnnealSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Greedy,
    Exhaustive,
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvlConfig {
    pub n: usize,
    pub method: Method,
    /// Share of TSVs spared per chosen VL.
    pub fraction: f64,
    /// TSV grid side of the bundle model; one TSV per VL when absent.
    pub bundle_side: Option<usize>,
    /// Restrict candidates to the `h` highest-utilization VLs.
    pub critical: Option<usize>,
    pub exhaustive_cap: u64,
    pub n_max: usize,
}

impl Default for SvlConfig {
    fn default() -> Self {
        Self {
            n: 8,
            method: Method::Greedy,
            fraction: 1.0,
            bundle_side: None,
            critical: None,
            exhaustive_cap: swnoc_reliability::svl::EXHAUSTIVE_CAP,
            n_max: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecipeConfig {
    pub alphas: Vec<f64>,
    pub families: Vec<Family>,
    pub fractions: Vec<f64>,
}

impl Default for RecipeConfig {
    fn default() -> Self {
        Self {
            alphas: vec![1.2, 1.6, 2.0, 2.4, 2.8, 3.2],
            families: vec![Family::Mesh, Family::Mrrm, Family::Rrrr, Family::Sw, Family::SwOpt],
            fractions: vec![0.0, 0.5, 0.75, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Replicate seeds for recipes; `[seed]` when empty.
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub topology: TopologyConfig,
    pub traffic: TrafficSource,
    pub sim: SimConfig,
    pub energy: EnergyParams,
    pub aging: AgingParams,
    pub timeline: TimelineConfig,
    pub search: SearchConfig,
    pub svl: SvlConfig,
    pub recipes: RecipeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            seeds: Vec::new(),
            output_dir: PathBuf::from("out"),
            topology: TopologyConfig::default(),
            traffic: TrafficSource::default(),
            sim: SimConfig {
                injection_rate: 0.25,
                warmup_cycles: 2000,
                measure_cycles: 20_000,
                ..SimConfig::default()
            },
            energy: EnergyParams::default(),
            aging: AgingParams::default(),
            timeline: TimelineConfig::default(),
            search: SearchConfig::default(),
            svl: SvlConfig::default(),
            recipes: RecipeConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sets the run seed and the simulator seed together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sim.seed = seed;
        self
    }

    pub fn replicate_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn stage(&self, seed: u64, alpha: f64) -> StageConfig {
        let t = &self.topology;
        StageConfig {
            seed,
            budget: Some(self.search.budget),
            start: swnoc_core::SwGenConfig {
                alpha,
                seed,
                dims: t.dims,
                geometry: t.geometry,
                constraints: t.constraints(),
                ..self.search.stage.start
            },
            ..self.search.stage
        }
    }
}
