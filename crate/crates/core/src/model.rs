//! Router graph, geometry and exact path metrics.
//!
//! Routers sit on a regular `x × y` grid replicated across `z` stacked dies.
//! Router ids are row-major within a die and die-major across the stack:
//! `id = z·(X·Y) + y·X + x`. Vertical links only join stacked routers in
//! adjacent dies; planar links only join routers of the same die.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::ModelError;
use crate::traffic::TrafficProfile;

pub type RouterId = usize;
pub type LinkId = usize;

/// Hop value stored for unreachable pairs.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct GridDims {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl GridDims {
    pub const fn new(x: usize, y: usize, z: usize) -> Self {
        Self { x, y, z }
    }

    pub fn nodes(&self) -> usize {
        self.x * self.y * self.z
    }

    pub fn nodes_per_die(&self) -> usize {
        self.x * self.y
    }

    /// Number of regular vertical links: one per stacked pair per die gap.
    pub fn vertical_links(&self) -> usize {
        self.nodes_per_die() * self.z.saturating_sub(1)
    }

    /// Planar links of one die of the nearest-neighbour lattice.
    pub fn mesh_links_per_die(&self) -> usize {
        self.x.saturating_sub(1) * self.y + self.y.saturating_sub(1) * self.x
    }

    pub fn router(&self, p: Position) -> RouterId {
        p.z * self.nodes_per_die() + p.y * self.x + p.x
    }

    pub fn position(&self, id: RouterId) -> Position {
        let per_die = self.nodes_per_die();
        Position {
            x: id % self.x,
            y: (id % per_die) / self.x,
            z: id / per_die,
        }
    }
}

impl Default for GridDims {
    fn default() -> Self {
        Self::new(4, 4, 4)
    }
}

/// Physical spacing of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Geometry {
    pub planar_pitch_mm: f64,
    pub die_pitch_mm: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            planar_pitch_mm: 2.0,
            die_pitch_mm: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Planar,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: RouterId,
    pub b: RouterId,
    pub kind: LinkKind,
    pub length_mm: f64,
}

impl Link {
    pub fn other(&self, end: RouterId) -> RouterId {
        if end == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn joins(&self, u: RouterId, v: RouterId) -> bool {
        (self.a == u && self.b == v) || (self.a == v && self.b == u)
    }
}

/// Undirected simple graph over the grid routers.
#[derive(Debug, Clone)]
pub struct Topology {
    dims: GridDims,
    geometry: Geometry,
    links: Vec<Link>,
    adjacency: Vec<Vec<(RouterId, LinkId)>>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.geometry == other.geometry && self.edge_set() == other.edge_set()
    }
}

impl Topology {
    pub fn empty(dims: GridDims, geometry: Geometry) -> Self {
        Self {
            dims,
            geometry,
            links: Vec::new(),
            adjacency: vec![Vec::new(); dims.nodes()],
        }
    }

    /// Builds a topology from endpoint pairs; kind and length follow from the positions.
    pub fn from_pairs(
        dims: GridDims,
        geometry: Geometry,
        pairs: impl IntoIterator<Item = (RouterId, RouterId)>,
    ) -> Result<Self, ModelError> {
        let mut topo = Self::empty(dims, geometry);
        for (a, b) in pairs {
            topo.add_link(a, b)?;
        }
        Ok(topo)
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn n_nodes(&self) -> usize {
        self.dims.nodes()
    }

    pub fn dies(&self) -> usize {
        self.dims.z
    }

    pub fn position(&self, id: RouterId) -> Position {
        self.dims.position(id)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn neighbors(&self, v: RouterId) -> &[(RouterId, LinkId)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: RouterId) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.links.len() as f64 / self.n_nodes() as f64
    }

    pub fn link_between(&self, u: RouterId, v: RouterId) -> Option<LinkId> {
        self.adjacency[u].iter().find(|&&(w, _)| w == v).map(|&(_, l)| l)
    }

    pub fn has_link(&self, u: RouterId, v: RouterId) -> bool {
        self.link_between(u, v).is_some()
    }

    pub fn planar_links(&self) -> impl Iterator<Item = LinkId> + '_ {
        (0..self.links.len()).filter(|&l| self.links[l].kind == LinkKind::Planar)
    }

    pub fn count_kind(&self, kind: LinkKind) -> usize {
        self.links.iter().filter(|l| l.kind == kind).count()
    }

    /// Classifies the pair and computes its physical length.
    pub fn classify(&self, a: RouterId, b: RouterId) -> Result<(LinkKind, f64), ModelError> {
        let n = self.n_nodes();
        if a >= n || b >= n {
            return Err(ModelError::UnknownRouter(a.max(b)));
        }
        if a == b {
            return Err(ModelError::SelfLoop(a));
        }
        let (pa, pb) = (self.position(a), self.position(b));
        if pa.z == pb.z {
            let dx = pa.x.abs_diff(pb.x) as f64;
            let dy = pa.y.abs_diff(pb.y) as f64;
            Ok((LinkKind::Planar, dx.hypot(dy) * self.geometry.planar_pitch_mm))
        } else if pa.x == pb.x && pa.y == pb.y && pa.z.abs_diff(pb.z) == 1 {
            Ok((LinkKind::Vertical, self.geometry.die_pitch_mm))
        } else {
            Err(ModelError::IllegalLink { a, b })
        }
    }

    pub fn add_link(&mut self, a: RouterId, b: RouterId) -> Result<LinkId, ModelError> {
        let (kind, length_mm) = self.classify(a, b)?;
        if self.has_link(a, b) {
            return Err(ModelError::ParallelLink { a, b });
        }
        let id = self.links.len();
        self.links.push(Link { a, b, kind, length_mm });
        self.adjacency[a].push((b, id));
        self.adjacency[b].push((a, id));
        Ok(id)
    }

    /// Rewires link `id` to join `(a, b)`, keeping its id.
    pub fn rewire(&mut self, id: LinkId, a: RouterId, b: RouterId) -> Result<(), ModelError> {
        let (kind, length_mm) = self.classify(a, b)?;
        if self.has_link(a, b) {
            return Err(ModelError::ParallelLink { a, b });
        }
        let old = self.links[id];
        self.adjacency[old.a].retain(|&(_, l)| l != id);
        self.adjacency[old.b].retain(|&(_, l)| l != id);
        self.links[id] = Link { a, b, kind, length_mm };
        self.adjacency[a].push((b, id));
        self.adjacency[b].push((a, id));
        Ok(())
    }

    /// Copy of the topology without the given links. Link ids are renumbered.
    pub fn without_links(&self, removed: &[LinkId]) -> Topology {
        let mut keep = vec![true; self.links.len()];
        for &l in removed {
            keep[l] = false;
        }
        let mut out = Topology::empty(self.dims, self.geometry);
        for (l, link) in self.links.iter().enumerate() {
            if keep[l] {
                out.push_unchecked(*link);
            }
        }
        out
    }

    fn push_unchecked(&mut self, link: Link) {
        let id = self.links.len();
        self.adjacency[link.a].push((link.b, id));
        self.adjacency[link.b].push((link.a, id));
        self.links.push(link);
    }

    /// Canonical sorted endpoint list; equal for equal graphs regardless of link order.
    pub fn edge_set(&self) -> Vec<(RouterId, RouterId)> {
        let mut edges: Vec<_> = self.links.iter().map(|l| (l.a.min(l.b), l.a.max(l.b))).collect();
        edges.sort_unstable();
        edges
    }

    /// Index of the vertical link between `(x, y, gap)` and `(x, y, gap + 1)` in the
    /// serial numbering (gap-major, position-minor), zero based.
    pub fn vl_index_of(&self, link: &Link) -> Option<usize> {
        if link.kind != LinkKind::Vertical {
            return None;
        }
        let lower = self.position(link.a.min(link.b));
        Some(lower.z * self.dims.nodes_per_die() + lower.y * self.dims.x + lower.x)
    }

    /// Endpoints of the vertical link with serial index `vl` (zero based).
    pub fn vl_endpoints(&self, vl: usize) -> (RouterId, RouterId) {
        // the lower router id coincides with the serial index
        (vl, vl + self.dims.nodes_per_die())
    }

    /// Map from serial VL index to the link currently realising it.
    pub fn vl_links(&self) -> Vec<Option<LinkId>> {
        let mut out = vec![None; self.dims.vertical_links()];
        for (id, link) in self.links.iter().enumerate() {
            if let Some(vl) = self.vl_index_of(link) {
                out[vl] = Some(id);
            }
        }
        out
    }

    /// 3D Euclidean distance between two routers in millimetres.
    pub fn pair_distance(&self, i: RouterId, j: RouterId) -> f64 {
        let (pi, pj) = (self.position(i), self.position(j));
        let g = self.geometry;
        let dx = pi.x.abs_diff(pj.x) as f64 * g.planar_pitch_mm;
        let dy = pi.y.abs_diff(pj.y) as f64 * g.planar_pitch_mm;
        let dz = pi.z.abs_diff(pj.z) as f64 * g.die_pitch_mm;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn distance_matrix(&self) -> Vec<f64> {
        let n = self.n_nodes();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = self.pair_distance(i, j);
            }
        }
        d
    }

    /// Breadth-first hop counts from `src`, ignoring links flagged in `excluded`.
    pub fn bfs_hops_into(&self, src: RouterId, excluded: Option<&[bool]>, out: &mut [u32], queue: &mut VecDeque<RouterId>) {
        out.fill(UNREACHABLE);
        out[src] = 0;
        queue.clear();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let next = out[u] + 1;
            for &(v, l) in &self.adjacency[u] {
                if excluded.is_some_and(|ex| ex[l]) {
                    continue;
                }
                if out[v] == UNREACHABLE {
                    out[v] = next;
                    queue.push_back(v);
                }
            }
        }
    }

    pub fn all_pairs_hops(&self) -> HopMatrix {
        let n = self.n_nodes();
        let mut data = vec![UNREACHABLE; n * n];
        let mut queue = VecDeque::with_capacity(n);
        for (src, row) in data.chunks_mut(n).enumerate() {
            self.bfs_hops_into(src, None, row, &mut queue);
        }
        HopMatrix { n, data }
    }

    /// True iff the graph minus `exclude` is a single component.
    pub fn is_connected(&self, exclude: &[LinkId]) -> bool {
        let n = self.n_nodes();
        if n == 0 {
            return true;
        }
        let mut excluded = vec![false; self.links.len()];
        for &l in exclude {
            excluded[l] = true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, l) in &self.adjacency[u] {
                if !excluded[l] && !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    pub fn avg_hop_count(&self, traffic: Option<&TrafficProfile>) -> f64 {
        self.all_pairs_hops().average(traffic)
    }
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: RouterId,
    x: usize,
    y: usize,
    z: usize,
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    dims: GridDims,
    geometry: Geometry,
    nodes: Vec<NodeRecord>,
    links: Vec<Link>,
}

impl Topology {
    /// Self-describing TOML listing node positions and links.
    pub fn to_toml(&self) -> String {
        let file = TopologyFile {
            dims: self.dims,
            geometry: self.geometry,
            nodes: (0..self.n_nodes())
                .map(|id| {
                    let p = self.position(id);
                    NodeRecord { id, x: p.x, y: p.y, z: p.z }
                })
                .collect(),
            links: self.links.clone(),
        };
        toml::to_string(&file).expect("topology serializes")
    }

    /// Parses [`Topology::to_toml`] output. Kinds and lengths are re-derived and
    /// must agree with the file.
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let file: TopologyFile = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        let mut topo = Topology::empty(file.dims, file.geometry);
        for node in &file.nodes {
            let p = Position { x: node.x, y: node.y, z: node.z };
            if node.id >= topo.n_nodes() || topo.position(node.id) != p {
                return Err(ModelError::Parse(format!("node {} has inconsistent position", node.id)));
            }
        }
        for link in &file.links {
            let id = topo.add_link(link.a, link.b)?;
            let derived = topo.link(id);
            if derived.kind != link.kind || (derived.length_mm - link.length_mm).abs() > 1e-9 {
                return Err(ModelError::Parse(format!("link {}-{} kind or length mismatch", link.a, link.b)));
            }
        }
        Ok(topo)
    }
}

/// Dense `N × N` hop-count matrix; unreachable pairs hold [`UNREACHABLE`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopMatrix {
    n: usize,
    data: Vec<u32>,
}

impl HopMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: RouterId, j: RouterId) -> u32 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: RouterId) -> &[u32] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Hop count as a real, infinite when unreachable.
    pub fn hops(&self, i: RouterId, j: RouterId) -> f64 {
        match self.get(i, j) {
            UNREACHABLE => f64::INFINITY,
            h => h as f64,
        }
    }

    pub fn diameter(&self) -> f64 {
        self.data
            .iter()
            .map(|&h| if h == UNREACHABLE { f64::INFINITY } else { h as f64 })
            .fold(0.0, f64::max)
    }

    /// Mean over ordered `i ≠ j` pairs, or the traffic-weighted mean when given.
    pub fn average(&self, traffic: Option<&TrafficProfile>) -> f64 {
        let n = self.n;
        match traffic {
            None => {
                if n < 2 {
                    return 0.0;
                }
                let mut sum = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            sum += self.hops(i, j);
                        }
                    }
                }
                sum / (n * (n - 1)) as f64
            }
            Some(t) => {
                let (mut num, mut den) = (0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let f = t.get(i, j);
                        if f > 0.0 {
                            num += f * self.hops(i, j);
                            den += f;
                        }
                    }
                }
                num / den
            }
        }
    }
}

/// Design-rule limits shared by generators and search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConstraints {
    pub k_max: usize,
    pub avg_degree_target: f64,
    pub planar_link_budget: usize,
}

impl NetworkConstraints {
    /// Budget matching the nearest-neighbour mesh of the same size.
    pub fn mesh_equivalent(dims: GridDims) -> Self {
        let planar = dims.mesh_links_per_die() * dims.z;
        let total = planar + dims.vertical_links();
        Self {
            k_max: 7,
            avg_degree_target: 2.0 * total as f64 / dims.nodes() as f64,
            planar_link_budget: planar,
        }
    }

    pub fn check(&self, topo: &Topology) -> Result<(), ModelError> {
        let planar = topo.count_kind(LinkKind::Planar);
        if planar != self.planar_link_budget {
            return Err(ModelError::Constraint(format!(
                "planar link count {planar} differs from budget {}",
                self.planar_link_budget
            )));
        }
        if topo.count_kind(LinkKind::Vertical) != topo.dims().vertical_links() {
            return Err(ModelError::Constraint("missing regular vertical links".into()));
        }
        if topo.max_degree() > self.k_max {
            return Err(ModelError::Constraint(format!(
                "degree {} exceeds k_max {}",
                topo.max_degree(),
                self.k_max
            )));
        }
        if !topo.is_connected(&[]) {
            return Err(ModelError::Constraint("topology is disconnected".into()));
        }
        Ok(())
    }
}

impl Default for NetworkConstraints {
    fn default() -> Self {
        Self::mesh_equivalent(GridDims::default())
    }
}
