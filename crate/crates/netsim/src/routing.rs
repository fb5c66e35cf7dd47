//! Source routes over directed channels.
//!
//! Channel `2·l` runs from `link(l).a` to `link(l).b`, channel `2·l + 1` the
//! other way. Full meshes use X→Y→Z dimension order on any virtual channel.
//! Other graphs use layered routing: the escape layer on VC 0 carries
//! up*/down* paths over a breadth-first spanning tree, layers `1..V` carry
//! shortest paths admitted only while the layer's channel dependency graph
//! stays acyclic. A pair whose shortest path fits no layer falls back to its
//! up*/down* path on VC 0.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use swnoc_core::model::{RouterId, Topology, UNREACHABLE};
use swnoc_core::topogen::build_mesh;

use crate::error::SimError;

pub type ChannelId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoutingFamily {
    /// Dimension order; requires a full mesh.
    Mesh,
    Layered,
    /// Mesh when the topology is a full mesh, layered otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub channels: Vec<ChannelId>,
    /// Bit `k` set if the packet may occupy VC `k`.
    pub vc_mask: u8,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.channels.len()
    }
}

#[derive(Debug, Clone)]
pub struct RouteTable {
    n: usize,
    routes: Vec<Route>,
    family: RoutingFamily,
    layers: usize,
}

pub fn channel(link: usize, reverse: bool) -> ChannelId {
    2 * link + usize::from(reverse)
}

/// Directed channel from `u` to its neighbour `v`.
pub fn channel_between(topology: &Topology, u: RouterId, v: RouterId) -> Option<ChannelId> {
    topology
        .link_between(u, v)
        .map(|l| channel(l, topology.link(l).a != u))
}

pub fn channel_endpoints(topology: &Topology, c: ChannelId) -> (RouterId, RouterId) {
    let l = topology.link(c / 2);
    if c % 2 == 0 {
        (l.a, l.b)
    } else {
        (l.b, l.a)
    }
}

pub fn is_full_mesh(topology: &Topology) -> bool {
    topology.edge_set() == build_mesh(topology.dims(), topology.geometry()).edge_set()
}

fn sorted_neighbors(topology: &Topology) -> Vec<Vec<RouterId>> {
    (0..topology.n_nodes())
        .map(|v| {
            let mut ns: Vec<_> = topology.neighbors(v).iter().map(|&(u, _)| u).collect();
            ns.sort_unstable();
            ns
        })
        .collect()
}

/// Up*/down* orientation: `up(u, v)` holds when `v` is closer to the root
/// (lower BFS level, then lower id).
struct UpDown {
    level: Vec<usize>,
}

impl UpDown {
    fn new(neighbors: &[Vec<RouterId>]) -> Self {
        let n = neighbors.len();
        let mut level = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        level[0] = 0;
        queue.push_back(0);
        while let Some(u) = queue.pop_front() {
            for &v in &neighbors[u] {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        Self { level }
    }

    fn up(&self, u: RouterId, v: RouterId) -> bool {
        (self.level[v], v) < (self.level[u], u)
    }

    /// Shortest legal path from every node to `dst`: some up hops, then only
    /// down hops. Returns node sequences indexed by source.
    fn paths_to(&self, neighbors: &[Vec<RouterId>], dst: RouterId) -> Vec<Option<Vec<RouterId>>> {
        let n = neighbors.len();
        // state (v, 0): v may still go up; (v, 1): v only goes down. Search backwards from dst.
        let idx = |v: usize, s: usize| 2 * v + s;
        let mut dist = vec![usize::MAX; 2 * n];
        let mut next = vec![usize::MAX; 2 * n];
        let mut queue = VecDeque::new();
        for s in 0..2 {
            dist[idx(dst, s)] = 0;
            queue.push_back(idx(dst, s));
        }
        while let Some(state) = queue.pop_front() {
            let (w, s) = (state / 2, state % 2);
            // predecessors u with a legal hop u -> w arriving in state s
            for &u in &neighbors[w] {
                let up = self.up(u, w);
                let preds: &[usize] = match (up, s) {
                    (true, 0) => &[0],
                    (false, 1) => &[0, 1],
                    _ => &[],
                };
                for &ps in preds {
                    let p = idx(u, ps);
                    if dist[p] == usize::MAX {
                        dist[p] = dist[state] + 1;
                        next[p] = state;
                        queue.push_back(p);
                    }
                }
            }
        }
        (0..n)
            .map(|src| {
                let mut state = idx(src, 0);
                if dist[state] == usize::MAX {
                    return None;
                }
                let mut path = vec![src];
                while state / 2 != dst {
                    state = next[state];
                    path.push(state / 2);
                }
                Some(path)
            })
            .collect()
    }
}

/// Incremental acyclicity check for one layer's dependency graph.
struct LayerGraph {
    succ: Vec<Vec<ChannelId>>,
}

impl LayerGraph {
    fn new(channels: usize) -> Self {
        Self {
            succ: vec![Vec::new(); channels],
        }
    }

    fn has_edge(&self, a: ChannelId, b: ChannelId) -> bool {
        self.succ[a].contains(&b)
    }

    fn reaches(&self, from: ChannelId, to: ChannelId, extra: &[(ChannelId, ChannelId)], seen: &mut Vec<bool>) -> bool {
        seen.fill(false);
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(c) = stack.pop() {
            if c == to {
                return true;
            }
            let more = extra.iter().filter(|e| e.0 == c).map(|e| e.1);
            for d in self.succ[c].iter().copied().chain(more) {
                if !seen[d] {
                    seen[d] = true;
                    stack.push(d);
                }
            }
        }
        false
    }

    /// Adds the dependencies of `path` if that keeps the graph acyclic.
    fn try_admit(&mut self, path: &[ChannelId], seen: &mut Vec<bool>) -> bool {
        let mut added: Vec<(ChannelId, ChannelId)> = Vec::new();
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if self.has_edge(a, b) || added.contains(&(a, b)) {
                continue;
            }
            if a == b || self.reaches(b, a, &added, seen) {
                return false;
            }
            added.push((a, b));
        }
        for (a, b) in added {
            self.succ[a].push(b);
        }
        true
    }
}

fn nodes_to_channels(topology: &Topology, nodes: &[RouterId]) -> Vec<ChannelId> {
    nodes
        .windows(2)
        .map(|w| channel_between(topology, w[0], w[1]).expect("consecutive path nodes are adjacent"))
        .collect()
}

fn dor_path(topology: &Topology, src: RouterId, dst: RouterId) -> Vec<RouterId> {
    let dims = topology.dims();
    let mut p = dims.position(src);
    let q = dims.position(dst);
    let mut nodes = vec![src];
    let step = |a: usize, b: usize| if a < b { a + 1 } else { a - 1 };
    while p.x != q.x {
        p.x = step(p.x, q.x);
        nodes.push(dims.router(p));
    }
    while p.y != q.y {
        p.y = step(p.y, q.y);
        nodes.push(dims.router(p));
    }
    while p.z != q.z {
        p.z = step(p.z, q.z);
        nodes.push(dims.router(p));
    }
    nodes
}

impl RouteTable {
    pub fn build(topology: &Topology, family: RoutingFamily, virtual_channels: usize) -> Result<Self, SimError> {
        let family = match family {
            RoutingFamily::Auto if is_full_mesh(topology) => RoutingFamily::Mesh,
            RoutingFamily::Auto => RoutingFamily::Layered,
            f => f,
        };
        if family == RoutingFamily::Mesh && !is_full_mesh(topology) {
            return Err(SimError::NotAMesh);
        }
        let n = topology.n_nodes();
        let hops = topology.all_pairs_hops();
        for i in 0..n {
            for j in 0..n {
                if hops.get(i, j) == UNREACHABLE {
                    return Err(SimError::RoutingUnreachable { src: i, dst: j });
                }
            }
        }
        let all_vcs = ((1u16 << virtual_channels.min(8)) - 1) as u8;
        let mut routes = vec![
            Route {
                channels: Vec::new(),
                vc_mask: all_vcs,
            };
            n * n
        ];
        if family == RoutingFamily::Mesh {
            for s in 0..n {
                for d in 0..n {
                    routes[s * n + d].channels = nodes_to_channels(topology, &dor_path(topology, s, d));
                }
            }
            return Ok(Self {
                n,
                routes,
                family,
                layers: 1,
            });
        }

        let neighbors = sorted_neighbors(topology);
        let updown = UpDown::new(&neighbors);
        let n_channels = 2 * topology.links().len();
        let mut layers: Vec<LayerGraph> = (1..virtual_channels).map(|_| LayerGraph::new(n_channels)).collect();
        let mut seen = vec![false; n_channels];
        for d in 0..n {
            let escape = updown.paths_to(&neighbors, d);
            for s in 0..n {
                if s == d {
                    routes[s * n + d].vc_mask = 1;
                    continue;
                }
                let ud = escape[s].as_ref().ok_or(SimError::RoutingUnreachable { src: s, dst: d })?;
                let minimal = hops.get(s, d) as usize;
                let ud_channels = nodes_to_channels(topology, ud);
                let mut chosen = (ud_channels.clone(), 1u8);
                if ud_channels.len() != minimal {
                    let mut nodes = vec![s];
                    let mut cur = s;
                    while cur != d {
                        cur = *neighbors[cur]
                            .iter()
                            .find(|&&w| hops.get(w, d) + 1 == hops.get(cur, d))
                            .expect("shortest-path successor");
                        nodes.push(cur);
                    }
                    let sp = nodes_to_channels(topology, &nodes);
                    for (k, layer) in layers.iter_mut().enumerate() {
                        if layer.try_admit(&sp, &mut seen) {
                            chosen = (sp, 1u8 << (k + 1));
                            break;
                        }
                    }
                }
                routes[s * n + d] = Route {
                    channels: chosen.0,
                    vc_mask: chosen.1,
                };
            }
        }
        Ok(Self {
            n,
            routes,
            family,
            layers: virtual_channels,
        })
    }

    pub fn family(&self) -> RoutingFamily {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn route(&self, src: RouterId, dst: RouterId) -> &Route {
        &self.routes[src * self.n + dst]
    }

    pub fn routes(&self) -> impl Iterator<Item = (RouterId, RouterId, &Route)> {
        self.routes
            .iter()
            .enumerate()
            .map(move |(k, r)| (k / self.n, k % self.n, r))
    }

    /// Number of VC layers in use (one for dimension-order routing).
    pub fn layers(&self) -> usize {
        self.layers
    }

    /// Channel dependencies `(a, b)` of every route that may occupy VC `vc`,
    /// sorted and deduplicated.
    pub fn dependency_edges(&self, vc: usize) -> Vec<(ChannelId, ChannelId)> {
        let mut edges: Vec<_> = self
            .routes
            .iter()
            .filter(|r| r.vc_mask & (1 << vc) != 0)
            .flat_map(|r| r.channels.windows(2).map(|w| (w[0], w[1])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}
