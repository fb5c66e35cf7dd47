//! Communication cost `O = Σ_i Σ_{j≠i} (r·h_ij + d_ij)·f_ij` and the design
//! feature vector used to train evaluation functions.

use serde::{Deserialize, Serialize};

use crate::model::{HopMatrix, LinkKind, Topology, UNREACHABLE};
use crate::traffic::TrafficProfile;

/// Hop distances at or above this value share the last weighted-communication bin.
pub const HOP_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostParams {
    /// Router pipeline stages per hop.
    pub r: u32,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { r: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommCost {
    pub raw: f64,
    /// `raw / Σf`; zero for silent traffic.
    pub normalized: f64,
}

/// Precomputed pairwise distances so repeated cost evaluations only need a BFS.
#[derive(Debug, Clone)]
pub struct CostModel {
    n: usize,
    distance: Vec<f64>,
    params: CostParams,
    /// Σ f_ij·d_ij, independent of the topology.
    wire_term: f64,
    total: f64,
}

impl CostModel {
    pub fn new(topology: &Topology, traffic: &TrafficProfile, params: CostParams) -> Self {
        let n = topology.n_nodes();
        let distance = topology.distance_matrix();
        let wire_term = traffic.as_slice().iter().zip(&distance).map(|(f, d)| f * d).sum();
        Self {
            n,
            distance,
            params,
            wire_term,
            total: traffic.total(),
        }
    }

    pub fn params(&self) -> CostParams {
        self.params
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distance[i * self.n + j]
    }

    pub fn cost(&self, hops: &HopMatrix, traffic: &TrafficProfile) -> CommCost {
        let r = self.params.r as f64;
        let mut hop_term = 0.0;
        for i in 0..self.n {
            let row = hops.row(i);
            for (j, &f) in traffic.row(i).iter().enumerate() {
                if f > 0.0 {
                    if row[j] == UNREACHABLE {
                        return CommCost {
                            raw: f64::INFINITY,
                            normalized: f64::INFINITY,
                        };
                    }
                    hop_term += f * row[j] as f64;
                }
            }
        }
        let raw = r * hop_term + self.wire_term;
        CommCost {
            raw,
            normalized: if self.total > 0.0 { raw / self.total } else { 0.0 },
        }
    }
}

pub fn comm_cost(topology: &Topology, traffic: &TrafficProfile, params: CostParams) -> CommCost {
    CostModel::new(topology, traffic, params).cost(&topology.all_pairs_hops(), traffic)
}

/// Mean local clustering of the planar subgraph of die `die`.
pub fn clustering_coefficient(topology: &Topology, die: usize) -> f64 {
    let dims = topology.dims();
    let per_die = dims.nodes_per_die();
    let base = die * per_die;
    let mut sum = 0.0;
    for v in base..base + per_die {
        let nbrs: Vec<usize> = topology
            .neighbors(v)
            .iter()
            .filter(|&&(_, l)| topology.link(l).kind == LinkKind::Planar)
            .map(|&(u, _)| u)
            .collect();
        let k = nbrs.len();
        if k < 2 {
            continue;
        }
        let mut closed = 0usize;
        for (a, &u) in nbrs.iter().enumerate() {
            for &w in &nbrs[a + 1..] {
                if topology.has_link(u, w) {
                    closed += 1;
                }
            }
        }
        sum += closed as f64 / (k * (k - 1) / 2) as f64;
    }
    sum / per_die as f64
}

/// `bin_k = Σ_{h_ij = k} f_ij·k` for `k = 1..8`; longer paths land in bin 8
/// with their own hop weight.
pub fn weighted_comm_bins(hops: &HopMatrix, traffic: &TrafficProfile) -> [f64; HOP_BINS] {
    let mut bins = [0.0; HOP_BINS];
    let n = hops.n();
    for i in 0..n {
        let row = hops.row(i);
        for (j, &f) in traffic.row(i).iter().enumerate() {
            if i == j || f == 0.0 {
                continue;
            }
            let h = row[j];
            let idx = (h as usize).clamp(1, HOP_BINS) - 1;
            bins[idx] += f * if h == UNREACHABLE { f64::INFINITY } else { h as f64 };
        }
    }
    bins
}

pub fn normalize_bins(bins: &[f64; HOP_BINS]) -> [f64; HOP_BINS] {
    let total: f64 = bins.iter().sum();
    if total > 0.0 && total.is_finite() {
        bins.map(|b| b / total)
    } else {
        [0.0; HOP_BINS]
    }
}

/// Planar windows of width `max(1, side − 2)`, stride one, row-major.
pub fn region_windows(topology: &Topology) -> Vec<Vec<usize>> {
    let dims = topology.dims();
    let wx = dims.x.saturating_sub(2).max(1);
    let wy = dims.y.saturating_sub(2).max(1);
    let mut regions = Vec::new();
    for oy in 0..=dims.y - wy {
        for ox in 0..=dims.x - wx {
            let members = (0..dims.nodes())
                .filter(|&v| {
                    let p = dims.position(v);
                    (ox..ox + wx).contains(&p.x) && (oy..oy + wy).contains(&p.y)
                })
                .collect();
            regions.push(members);
        }
    }
    regions
}

pub fn region_hop_features(topology: &Topology, hops: &HopMatrix) -> Vec<f64> {
    region_windows(topology)
        .iter()
        .map(|members| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for &i in members {
                for &j in members {
                    if i != j {
                        sum += hops.hops(i, j);
                        count += 1;
                    }
                }
            }
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub region_hops: Vec<f64>,
    pub weighted_comm: [f64; HOP_BINS],
    pub weighted_comm_normalized: [f64; HOP_BINS],
    pub die_cc: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.region_hops.len() + HOP_BINS + self.die_cc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat learner input: region hops, normalized bins, clustering.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.region_hops);
        v.extend_from_slice(&self.weighted_comm_normalized);
        v.extend_from_slice(&self.die_cc);
        v
    }

    /// Same layout with raw bins.
    pub fn to_raw_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.region_hops);
        v.extend_from_slice(&self.weighted_comm);
        v.extend_from_slice(&self.die_cc);
        v
    }
}

pub fn feature_vector_with(topology: &Topology, hops: &HopMatrix, traffic: &TrafficProfile) -> FeatureVector {
    let weighted_comm = weighted_comm_bins(hops, traffic);
    FeatureVector {
        region_hops: region_hop_features(topology, hops),
        weighted_comm,
        weighted_comm_normalized: normalize_bins(&weighted_comm),
        die_cc: (0..topology.dies()).map(|z| clustering_coefficient(topology, z)).collect(),
    }
}

pub fn feature_vector(topology: &Topology, traffic: &TrafficProfile) -> FeatureVector {
    feature_vector_with(topology, &topology.all_pairs_hops(), traffic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GridDims, Geometry};
    use crate::topogen::build_mesh;

    #[test]
    fn single_link_cost() {
        let g = Geometry {
            planar_pitch_mm: 1.5,
            die_pitch_mm: 0.05,
        };
        let t = Topology::from_pairs(GridDims::new(2, 1, 1), g, [(0, 1)]).unwrap();
        let f = TrafficProfile::new(2, vec![0.0, 4.0, 0.0, 0.0]).unwrap();
        let c = comm_cost(&t, &f, CostParams { r: 3 });
        assert_eq!(c.raw, (3.0 + 1.5) * 4.0);
        assert_eq!(c.normalized, 4.5);
    }

    #[test]
    fn silent_traffic_costs_nothing() {
        let t = build_mesh(GridDims::new(2, 2, 2), Geometry::default());
        assert_eq!(comm_cost(&t, &TrafficProfile::zeros(8), CostParams::default()).raw, 0.0);
    }

    #[test]
    fn triangle_and_star_clustering() {
        let dims = GridDims::new(2, 2, 1);
        let tri = Topology::from_pairs(dims, Geometry::default(), [(0, 1), (1, 2), (0, 2)]).unwrap();
        // three of four nodes are fully clustered, the isolated fourth contributes 0
        assert_eq!(clustering_coefficient(&tri, 0), 0.75);
        let star = Topology::from_pairs(dims, Geometry::default(), [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(clustering_coefficient(&star, 0), 0.0);
    }

    #[test]
    fn mesh_die_has_no_triangles() {
        let t = build_mesh(GridDims::default(), Geometry::default());
        for z in 0..4 {
            assert_eq!(clustering_coefficient(&t, z), 0.0);
        }
    }

    #[test]
    fn single_pair_bin() {
        let t = Topology::from_pairs(GridDims::new(4, 1, 1), Geometry::default(), [(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut f = vec![0.0; 16];
        f[3] = 2.0;
        let f = TrafficProfile::new(4, f).unwrap();
        let bins = weighted_comm_bins(&t.all_pairs_hops(), &f);
        assert_eq!(bins[2], 6.0);
        assert_eq!(bins.iter().sum::<f64>(), 6.0);
    }

    #[test]
    fn default_grid_has_21_features() {
        let t = build_mesh(GridDims::default(), Geometry::default());
        let f = crate::traffic::synth_traffic(Default::default(), GridDims::default(), 0);
        let fv = feature_vector(&t, &f);
        assert_eq!(fv.len(), 21);
        assert_eq!(fv.to_vec().len(), 21);
        assert_eq!(region_windows(&t).len(), 9);
        assert!(region_windows(&t).iter().all(|r| r.len() == 16));
    }
}
