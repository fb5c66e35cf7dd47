//! Topology families: power-law small-world, nearest-neighbour mesh and the
//! partially random mrrm / rrrr references, plus greedy core placement.

use rand::Rng as _;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::GenerationError;
use crate::model::{GridDims, Geometry, NetworkConstraints, Position, RouterId, Topology};
use crate::rng::{seeded, Rng};
use crate::traffic::TrafficProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwGenConfig {
    pub alpha: f64,
    pub seed: u64,
    pub dims: GridDims,
    pub geometry: Geometry,
    pub constraints: NetworkConstraints,
    pub max_retries: usize,
}

impl Default for SwGenConfig {
    fn default() -> Self {
        let dims = GridDims::default();
        Self {
            alpha: 2.4,
            seed: 0,
            dims,
            geometry: Geometry::default(),
            constraints: NetworkConstraints::mesh_equivalent(dims),
            max_retries: 200,
        }
    }
}

impl SwGenConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// Topology with only the regular vertical links, in serial VL order.
pub fn vertical_skeleton(dims: GridDims, geometry: Geometry) -> Topology {
    let mut t = Topology::empty(dims, geometry);
    for vl in 0..dims.vertical_links() {
        let (a, b) = t.vl_endpoints(vl);
        t.add_link(a, b).expect("regular vertical link");
    }
    t
}

/// Unit-length planar pairs of one die, x-direction first.
pub fn mesh_die_pairs(dims: GridDims, z: usize) -> Vec<(RouterId, RouterId)> {
    let mut pairs = Vec::with_capacity(dims.mesh_links_per_die());
    let id = |x, y| dims.router(Position { x, y, z });
    for y in 0..dims.y {
        for x in 0..dims.x.saturating_sub(1) {
            pairs.push((id(x, y), id(x + 1, y)));
        }
    }
    for y in 0..dims.y.saturating_sub(1) {
        for x in 0..dims.x {
            pairs.push((id(x, y), id(x, y + 1)));
        }
    }
    pairs
}

pub fn build_mesh(dims: GridDims, geometry: Geometry) -> Topology {
    let mut t = Topology::empty(dims, geometry);
    for z in 0..dims.z {
        for (a, b) in mesh_die_pairs(dims, z) {
            t.add_link(a, b).expect("mesh link");
        }
    }
    for vl in 0..dims.vertical_links() {
        let (a, b) = t.vl_endpoints(vl);
        t.add_link(a, b).expect("regular vertical link");
    }
    t
}

/// All unordered same-die pairs with their squared grid distance.
pub fn same_die_pairs(dims: GridDims) -> Vec<(RouterId, RouterId, u32)> {
    let mut out = Vec::new();
    for z in 0..dims.z {
        let base = z * dims.nodes_per_die();
        for a in 0..dims.nodes_per_die() {
            for b in a + 1..dims.nodes_per_die() {
                let (pa, pb) = (dims.position(base + a), dims.position(base + b));
                let dx = pa.x.abs_diff(pb.x) as u32;
                let dy = pa.y.abs_diff(pb.y) as u32;
                out.push((base + a, base + b, dx * dx + dy * dy));
            }
        }
    }
    out
}

/// Draws `budget` pairs sequentially without replacement with probability
/// proportional to `weights`, skipping pairs with an endpoint at `k_max`.
/// Returns `None` if the candidates run out first.
fn draw_pairs(
    candidates: &[(RouterId, RouterId)],
    weights: &[f64],
    degree: &mut [usize],
    k_max: usize,
    budget: usize,
    rng: &mut Rng,
) -> Option<Vec<(RouterId, RouterId)>> {
    let mut live: Vec<bool> = candidates
        .iter()
        .map(|&(a, b)| degree[a] < k_max && degree[b] < k_max)
        .collect();
    let mut picked = Vec::with_capacity(budget);
    while picked.len() < budget {
        let total: f64 = (0..candidates.len()).filter(|&c| live[c]).map(|c| weights[c]).sum();
        if total <= 0.0 {
            return None;
        }
        let mut target = rng.random::<f64>() * total;
        let mut chosen = None;
        for c in 0..candidates.len() {
            if !live[c] {
                continue;
            }
            chosen = Some(c);
            target -= weights[c];
            if target < 0.0 {
                break;
            }
        }
        let c = chosen?;
        let (a, b) = candidates[c];
        live[c] = false;
        degree[a] += 1;
        degree[b] += 1;
        picked.push((a, b));
        for v in [a, b] {
            if degree[v] >= k_max {
                for (k, &(x, y)) in candidates.iter().enumerate() {
                    if x == v || y == v {
                        live[k] = false;
                    }
                }
            }
        }
    }
    Some(picked)
}

fn vertical_degrees(dims: GridDims) -> Vec<usize> {
    (0..dims.nodes())
        .map(|v| {
            let z = dims.position(v).z;
            usize::from(z > 0) + usize::from(z + 1 < dims.z)
        })
        .collect()
}

fn check_budget(dims: GridDims, c: &NetworkConstraints) -> Result<(), GenerationError> {
    let spare: usize = vertical_degrees(dims).iter().map(|&d| c.k_max.saturating_sub(d)).sum();
    if c.planar_link_budget > spare / 2 {
        return Err(GenerationError::Infeasible {
            budget: c.planar_link_budget,
            k_max: c.k_max,
        });
    }
    Ok(())
}

/// Power-law planar link set: `p(i, j) ∝ d_ij^−α` over same-die pairs.
pub fn sample_sw_planar_links(config: &SwGenConfig) -> Result<Vec<(RouterId, RouterId)>, GenerationError> {
    let dims = config.dims;
    check_budget(dims, &config.constraints)?;
    let pairs = same_die_pairs(dims);
    let candidates: Vec<_> = pairs.iter().map(|&(a, b, _)| (a, b)).collect();
    let weights: Vec<f64> = pairs
        .iter()
        .map(|&(_, _, d2)| (d2 as f64).sqrt().powf(-config.alpha))
        .collect();
    let skeleton = vertical_skeleton(dims, config.geometry);
    let mut rng = seeded(config.seed);
    for _ in 0..config.max_retries.max(1) {
        let mut degree = vertical_degrees(dims);
        let Some(picked) = draw_pairs(
            &candidates,
            &weights,
            &mut degree,
            config.constraints.k_max,
            config.constraints.planar_link_budget,
            &mut rng,
        ) else {
            continue;
        };
        let mut topo = skeleton.clone();
        for &(a, b) in &picked {
            topo.add_link(a, b)?;
        }
        if topo.is_connected(&[]) {
            return Ok(picked);
        }
    }
    Err(GenerationError::GenerationFailed {
        retries: config.max_retries,
    })
}

/// Sampled planar links plus every regular vertical link.
pub fn build_3d_sw(config: &SwGenConfig) -> Result<Topology, GenerationError> {
    let planar = sample_sw_planar_links(config)?;
    let mut topo = vertical_skeleton(config.dims, config.geometry);
    for (a, b) in planar {
        topo.add_link(a, b)?;
    }
    Ok(topo)
}

/// Dies flagged in `random` get as many uniformly drawn planar links as a mesh
/// die; the others keep the mesh pattern.
pub fn build_partially_random(
    dims: GridDims,
    geometry: Geometry,
    random: &[bool],
    constraints: &NetworkConstraints,
    seed: u64,
    max_retries: usize,
) -> Result<Topology, GenerationError> {
    let per_die = dims.mesh_links_per_die();
    let mut rng = seeded(seed);
    let all_pairs = same_die_pairs(dims);
    'attempt: for _ in 0..max_retries.max(1) {
        let mut degree = vertical_degrees(dims);
        let mut planar = Vec::new();
        for z in 0..dims.z {
            if !random[z] {
                for (a, b) in mesh_die_pairs(dims, z) {
                    degree[a] += 1;
                    degree[b] += 1;
                    planar.push((a, b));
                }
            }
        }
        for z in 0..dims.z {
            if random[z] {
                let cands: Vec<_> = all_pairs
                    .iter()
                    .filter(|&&(a, _, _)| dims.position(a).z == z)
                    .map(|&(a, b, _)| (a, b))
                    .collect();
                let weights = vec![1.0; cands.len()];
                match draw_pairs(&cands, &weights, &mut degree, constraints.k_max, per_die, &mut rng) {
                    Some(p) => planar.extend(p),
                    None => continue 'attempt,
                }
            }
        }
        let mut topo = vertical_skeleton(dims, geometry);
        for (a, b) in planar {
            topo.add_link(a, b)?;
        }
        if topo.is_connected(&[]) {
            return Ok(topo);
        }
    }
    Err(GenerationError::GenerationFailed { retries: max_retries })
}

/// Mesh outer dies, random inner dies.
pub fn build_mrrm(dims: GridDims, geometry: Geometry, seed: u64) -> Result<Topology, GenerationError> {
    let random: Vec<bool> = (0..dims.z).map(|z| z > 0 && z + 1 < dims.z).collect();
    build_partially_random(dims, geometry, &random, &NetworkConstraints::mesh_equivalent(dims), seed, 200)
}

/// Every die random.
pub fn build_rrrr(dims: GridDims, geometry: Geometry, seed: u64) -> Result<Topology, GenerationError> {
    let random = vec![true; dims.z];
    build_partially_random(dims, geometry, &random, &NetworkConstraints::mesh_equivalent(dims), seed, 200)
}

/// Core-to-router assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub core_to_router: Vec<RouterId>,
}

impl Placement {
    pub fn identity(n: usize) -> Self {
        Self {
            core_to_router: (0..n).collect(),
        }
    }

    /// Traffic expressed between routers.
    pub fn apply(&self, core_traffic: &TrafficProfile) -> TrafficProfile {
        core_traffic.permuted(&self.core_to_router)
    }
}

/// Greedy placement minimising `Σ f·d` against already placed partners.
/// Core order is by descending interaction with placed cores; a seeded random
/// rank breaks every tie.
pub fn place_cores(traffic: &TrafficProfile, dims: GridDims, geometry: Geometry, seed: u64) -> Placement {
    let n = traffic.n();
    assert_eq!(n, dims.nodes(), "traffic size must match the grid");
    let skeleton = Topology::empty(dims, geometry);
    let mut rng = seeded(seed);
    let mut core_rank: Vec<usize> = (0..n).collect();
    core_rank.shuffle(&mut rng);
    let mut slot_rank: Vec<usize> = (0..n).collect();
    slot_rank.shuffle(&mut rng);

    let mut slot_of = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut attach = vec![0.0; n];
    let mut placed: Vec<usize> = Vec::with_capacity(n);

    let total: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| traffic.symmetric(i, j)).sum())
        .collect();
    for step in 0..n {
        let key = |c: usize| if step == 0 { total[c] } else { attach[c] };
        let core = (0..n)
            .filter(|&c| slot_of[c] == usize::MAX)
            .max_by(|&a, &b| key(a).total_cmp(&key(b)).then(core_rank[b].cmp(&core_rank[a])))
            .expect("unplaced core");
        let cost = |s: usize| -> f64 {
            placed
                .iter()
                .map(|&p| traffic.symmetric(core, p) * skeleton.pair_distance(s, slot_of[p]))
                .sum()
        };
        let slot = (0..n)
            .filter(|&s| !used[s])
            .min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(slot_rank[a].cmp(&slot_rank[b])))
            .expect("free slot");
        slot_of[core] = slot;
        used[slot] = true;
        placed.push(core);
        for c in 0..n {
            attach[c] += traffic.symmetric(c, core);
        }
    }
    Placement { core_to_router: slot_of }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_mesh_has_twelve_links() {
        let t = build_mesh(GridDims::new(2, 2, 2), Geometry::default());
        assert_eq!(t.links().len(), 12);
    }

    #[test]
    fn mesh_corner_to_corner_is_nine_hops() {
        let t = build_mesh(GridDims::default(), Geometry::default());
        assert_eq!(t.all_pairs_hops().get(0, 63), 9);
    }

    #[test]
    fn budget_check_detects_infeasible() {
        let mut cfg = SwGenConfig::default();
        cfg.constraints.k_max = 3;
        assert!(matches!(build_3d_sw(&cfg), Err(GenerationError::Infeasible { .. })));
    }

    #[test]
    fn sampling_is_reproducible() {
        let cfg = SwGenConfig::default().with_seed(17);
        assert_eq!(sample_sw_planar_links(&cfg).unwrap(), sample_sw_planar_links(&cfg).unwrap());
    }

    #[test]
    fn mrrm_outer_dies_are_mesh() {
        let dims = GridDims::default();
        let t = build_mrrm(dims, Geometry::default(), 4).unwrap();
        let mesh = build_mesh(dims, Geometry::default());
        for z in [0, 3] {
            let die = |t: &Topology| {
                t.edge_set()
                    .into_iter()
                    .filter(|&(a, b)| dims.position(a).z == z && dims.position(b).z == z)
                    .collect::<Vec<_>>()
            };
            assert_eq!(die(&t), die(&mesh));
        }
    }
}
