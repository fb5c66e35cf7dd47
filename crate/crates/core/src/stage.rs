//! STAGE: alternating local search on the true objective and on a learned
//! evaluation function, with stochastic hill climbing and simulated annealing
//! baselines over the same equal-length link-swap neighbourhood.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::cost::{feature_vector_with, CostModel, CostParams};
use crate::error::GenerationError;
use crate::learner::{RegressionTree, TrainingSet, TreeParams};
use crate::model::{LinkId, LinkKind, NetworkConstraints, RouterId, Topology};
use crate::rng::{seeded, stream_rng, Rng};
use crate::topogen::{build_3d_sw, same_die_pairs, vertical_skeleton, SwGenConfig};
use crate::traffic::TrafficProfile;

/// Replace planar link `link` by a link joining `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub link: LinkId,
    pub a: RouterId,
    pub b: RouterId,
}

/// Equal-length swap neighbourhood. Lengths are compared as exact squared grid
/// distances, so equal physical lengths coincide with equal classes.
#[derive(Debug, Clone)]
pub struct MoveSpace {
    classes: BTreeMap<u32, Vec<(RouterId, RouterId)>>,
    k_max: usize,
}

impl MoveSpace {
    pub fn new(topology: &Topology, constraints: &NetworkConstraints) -> Self {
        let mut classes: BTreeMap<u32, Vec<_>> = BTreeMap::new();
        for (a, b, d2) in same_die_pairs(topology.dims()) {
            classes.entry(d2).or_default().push((a, b));
        }
        Self {
            classes,
            k_max: constraints.k_max,
        }
    }

    fn squared_length(topology: &Topology, a: RouterId, b: RouterId) -> u32 {
        let (pa, pb) = (topology.position(a), topology.position(b));
        let dx = pa.x.abs_diff(pb.x) as u32;
        let dy = pa.y.abs_diff(pb.y) as u32;
        dx * dx + dy * dy
    }

    /// Every swap respecting degree limits and simplicity; connectivity unchecked.
    pub fn candidate_moves(&self, topology: &Topology) -> Vec<Move> {
        let mut out = Vec::new();
        for link in topology.planar_links() {
            let l = *topology.link(link);
            let class = Self::squared_length(topology, l.a, l.b);
            for &(a, b) in &self.classes[&class] {
                if l.joins(a, b) || topology.has_link(a, b) {
                    continue;
                }
                let deg = |v: RouterId| topology.degree(v) - usize::from(v == l.a || v == l.b);
                if deg(a) < self.k_max && deg(b) < self.k_max {
                    out.push(Move { link, a, b });
                }
            }
        }
        out
    }

    pub fn apply(&self, topology: &Topology, mv: Move) -> Topology {
        let mut next = topology.clone();
        next.rewire(mv.link, mv.a, mv.b).expect("candidate move is legal");
        next
    }

    /// All constraint-satisfying successors.
    pub fn successors(&self, topology: &Topology) -> Vec<Topology> {
        self.candidate_moves(topology)
            .into_iter()
            .map(|m| self.apply(topology, m))
            .filter(|t| t.is_connected(&[]))
            .collect()
    }

    /// Uniform draw from the connected successors, or `None` if there are none.
    pub fn sample(&self, topology: &Topology, rng: &mut Rng) -> Option<Topology> {
        let mut moves = self.candidate_moves(topology);
        while !moves.is_empty() {
            let k = rng.random_range(0..moves.len());
            let mv = moves.swap_remove(k);
            let next = self.apply(topology, mv);
            if next.is_connected(&[]) {
                return Some(next);
            }
        }
        None
    }
}

#[derive(Debug, Clone)]
pub struct SearchTrajectory {
    pub designs: Vec<Topology>,
    pub scores: Vec<f64>,
    /// Score evaluations spent, including the start design.
    pub evaluations: usize,
}

impl SearchTrajectory {
    pub fn best_index(&self) -> usize {
        (0..self.scores.len())
            .min_by(|&a, &b| self.scores[a].total_cmp(&self.scores[b]).then(a.cmp(&b)))
            .unwrap_or(0)
    }

    pub fn last(&self) -> &Topology {
        self.designs.last().expect("trajectory has a start design")
    }

    /// `y_i = min_{j ≥ i} score_j`.
    pub fn best_to_go(&self) -> Vec<f64> {
        let mut out = self.scores.clone();
        for i in (0..out.len().saturating_sub(1)).rev() {
            out[i] = out[i].min(out[i + 1]);
        }
        out
    }
}

/// Stochastic first-improvement hill climbing.
pub fn hill_climb<F: FnMut(&Topology) -> f64>(
    d0: Topology,
    mut score: F,
    space: &MoveSpace,
    patience: usize,
    rng: &mut Rng,
    budget: Option<usize>,
) -> SearchTrajectory {
    let mut current_score = score(&d0);
    let mut traj = SearchTrajectory {
        designs: vec![d0],
        scores: vec![current_score],
        evaluations: 1,
    };
    let mut rejections = 0;
    while rejections < patience && budget.is_none_or(|b| traj.evaluations < b) {
        let Some(next) = space.sample(traj.last(), rng) else { break };
        let s = score(&next);
        traj.evaluations += 1;
        if s < current_score {
            current_score = s;
            traj.designs.push(next);
            traj.scores.push(s);
            rejections = 0;
        } else {
            rejections += 1;
        }
    }
    traj
}

/// Objective evaluator with a call counter.
pub struct Objective<'a> {
    model: CostModel,
    traffic: &'a TrafficProfile,
    pub calls: usize,
}

impl<'a> Objective<'a> {
    pub fn new(template: &Topology, traffic: &'a TrafficProfile, params: CostParams) -> Self {
        Self {
            model: CostModel::new(template, traffic, params),
            traffic,
            calls: 0,
        }
    }

    /// Normalized communication cost.
    pub fn eval(&mut self, topology: &Topology) -> f64 {
        self.calls += 1;
        self.model.cost(&topology.all_pairs_hops(), self.traffic).normalized
    }

    pub fn features(&self, topology: &Topology) -> Vec<f64> {
        feature_vector_with(topology, &topology.all_pairs_hops(), self.traffic).to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaSchedule {
    pub gamma0: f64,
    pub decay: f64,
}

impl Default for GammaSchedule {
    fn default() -> Self {
        Self { gamma0: 1.0, decay: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageConfig {
    pub max_iterations: usize,
    pub hc_patience: usize,
    pub seed: u64,
    pub gamma_schedule: Option<GammaSchedule>,
    pub cost: CostParams,
    /// Objective evaluations allowed in total.
    pub budget: Option<usize>,
    /// Iterations without improvement that count as convergence.
    pub convergence_window: usize,
    pub tree: TreeParams,
    pub meta_search: bool,
    /// Generator for random start and restart designs.
    pub start: SwGenConfig,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            hc_patience: 200,
            seed: 0,
            gamma_schedule: None,
            cost: CostParams::default(),
            budget: None,
            convergence_window: 10,
            tree: TreeParams::default(),
            meta_search: true,
            start: SwGenConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub wall_ms: f64,
    pub evaluations: usize,
    pub best_cost: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationReport {
    pub best: Topology,
    /// Normalized cost of `best`.
    pub best_cost: f64,
    pub initial_cost: f64,
    pub iterations: Vec<IterationRecord>,
    pub evaluations: usize,
    /// Evaluation-function predictions made by meta search.
    pub predictions: usize,
    /// Evaluations of every base-search trajectory, in order.
    pub trajectory_evaluations: Vec<usize>,
}

fn restart_design(
    config: &StageConfig,
    traffic: &TrafficProfile,
    constraints: &NetworkConstraints,
    restart: usize,
) -> Result<Topology, GenerationError> {
    let stream_seed = stream_rng(config.seed, restart as u64).random::<u64>();
    match config.gamma_schedule {
        Some(g) => {
            let gamma = (g.gamma0 * g.decay.powi(restart as i32)).clamp(0.0, 1.0);
            gamma_greedy_start(traffic, &config.start, constraints, gamma, stream_seed)
        }
        None => build_3d_sw(&config.start.with_seed(stream_seed)),
    }
}

/// The design `stage_optimize` starts from, for running baselines on equal footing.
pub fn start_design(
    traffic: &TrafficProfile,
    constraints: &NetworkConstraints,
    config: &StageConfig,
) -> Result<Topology, GenerationError> {
    restart_design(config, traffic, constraints, 0)
}

/// Runs STAGE from a generated start design.
pub fn stage_optimize(
    traffic: &TrafficProfile,
    constraints: &NetworkConstraints,
    config: &StageConfig,
) -> Result<OptimizationReport, GenerationError> {
    let d0 = start_design(traffic, constraints, config)?;
    Ok(stage_from(d0, traffic, constraints, config))
}

pub fn stage_from(
    d0: Topology,
    traffic: &TrafficProfile,
    constraints: &NetworkConstraints,
    config: &StageConfig,
) -> OptimizationReport {
    let started = Instant::now();
    let space = MoveSpace::new(&d0, constraints);
    let mut objective = Objective::new(&d0, traffic, config.cost);
    let mut z = TrainingSet::default();
    let mut best = d0.clone();
    let mut best_cost = f64::INFINITY;
    let mut initial_cost = f64::NAN;
    let mut iterations = Vec::new();
    let mut predictions = 0;
    let mut trajectory_evaluations = Vec::new();
    let mut restarts = 0;
    let mut stale = 0;
    let mut start = d0;

    for iteration in 0..config.max_iterations.max(1) {
        let mut rng = stream_rng(config.seed, 1_000_000 + iteration as u64);
        let remaining = config.budget.map(|b| b.saturating_sub(objective.calls));
        if remaining == Some(0) {
            break;
        }
        let traj = hill_climb(start, |d| objective.eval(d), &space, config.hc_patience, &mut rng, remaining);
        trajectory_evaluations.push(traj.evaluations);
        if iteration == 0 {
            initial_cost = traj.scores[0];
        }
        for (d, y) in traj.designs.iter().zip(traj.best_to_go()) {
            z.push(objective.features(d), y).expect("finite label");
        }
        let k = traj.best_index();
        if traj.scores[k] < best_cost {
            best_cost = traj.scores[k];
            best = traj.designs[k].clone();
            stale = 0;
        } else {
            stale += 1;
        }

        let d_t = traj.last().clone();
        let mut next = None;
        if config.meta_search && !z.is_empty() {
            let tree = RegressionTree::fit(&z, config.tree).expect("non-empty training set");
            let meta = hill_climb(
                d_t.clone(),
                |d| {
                    predictions += 1;
                    tree.predict(&objective.features(d)).expect("feature width is fixed")
                },
                &space,
                config.hc_patience,
                &mut rng,
                None,
            );
            if meta.designs.len() > 1 {
                next = Some(meta.last().clone());
            }
        }
        start = match next {
            Some(d) => d,
            None => {
                restarts += 1;
                restart_design(config, traffic, constraints, restarts).unwrap_or(d_t)
            }
        };

        iterations.push(IterationRecord {
            iteration,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            evaluations: objective.calls,
            best_cost,
        });
        if stale >= config.convergence_window {
            break;
        }
    }
    OptimizationReport {
        best,
        best_cost,
        initial_cost,
        iterations,
        evaluations: objective.calls,
        predictions,
        trajectory_evaluations,
    }
}

/// Repeated hill climbing with random restarts until the budget is spent.
pub fn hill_climb_optimize(
    d0: Topology,
    traffic: &TrafficProfile,
    constraints: &NetworkConstraints,
    config: &StageConfig,
) -> OptimizationReport {
    let config = StageConfig {
        meta_search: false,
        convergence_window: usize::MAX,
        ..*config
    };
    stage_from(d0, traffic, constraints, &config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealSchedule {
    /// `None` derives the start temperature from sampled move deltas.
    pub t0: Option<f64>,
    pub cooling: f64,
    pub steps_per_level: usize,
    /// Sampled moves used to estimate the start temperature.
    pub calibration_moves: usize,
    pub budget: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            t0: None,
            cooling: 0.95,
            steps_per_level: 100,
            calibration_moves: 50,
            budget: 10_000,
        }
    }
}

/// Metropolis annealing with geometric cooling. Calibration samples count
/// against the budget.
pub fn simulated_annealing<F: FnMut(&Topology) -> f64>(
    d0: Topology,
    mut score: F,
    space: &MoveSpace,
    schedule: &AnnealSchedule,
    seed: u64,
) -> OptimizationReport {
    let started = Instant::now();
    let mut rng = seeded(seed);
    let mut current = d0;
    let mut current_score = score(&current);
    let mut evals = 1;
    let initial_cost = current_score;
    let mut best = current.clone();
    let mut best_cost = current_score;

    let mut temperature = match schedule.t0 {
        Some(t) => t,
        None => {
            let mut deltas = Vec::new();
            for _ in 0..schedule.calibration_moves {
                if evals >= schedule.budget {
                    break;
                }
                let Some(next) = space.sample(&current, &mut rng) else { break };
                let s = score(&next);
                evals += 1;
                deltas.push((s - current_score).abs());
                if s < best_cost {
                    best_cost = s;
                    best = next;
                }
            }
            percentile(&mut deltas, 0.9).max(f64::MIN_POSITIVE)
        }
    };

    let mut iterations = Vec::new();
    let mut level = 0;
    'outer: while evals < schedule.budget {
        for _ in 0..schedule.steps_per_level {
            if evals >= schedule.budget {
                break 'outer;
            }
            let Some(next) = space.sample(&current, &mut rng) else { break 'outer };
            let s = score(&next);
            evals += 1;
            let delta = s - current_score;
            let accept = delta < 0.0 || (temperature > 0.0 && rng.random::<f64>() < (-delta / temperature).exp());
            if accept {
                current = next;
                current_score = s;
                if s < best_cost {
                    best_cost = s;
                    best = current.clone();
                }
            }
        }
        iterations.push(IterationRecord {
            iteration: level,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            evaluations: evals,
            best_cost,
        });
        level += 1;
        temperature *= schedule.cooling;
    }
    OptimizationReport {
        best,
        best_cost,
        initial_cost,
        iterations,
        evaluations: evals,
        predictions: 0,
        trajectory_evaluations: vec![evals],
    }
}

fn percentile(values: &mut [f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let k = ((values.len() - 1) as f64 * q).round() as usize;
    values[k]
}

/// Sequential planar construction: with probability `γ` the heaviest feasible
/// pair by `f_ij + f_ji`, else a uniform feasible pair. Disconnected results are
/// redrawn.
pub fn gamma_greedy_start(
    traffic: &TrafficProfile,
    gen: &SwGenConfig,
    constraints: &NetworkConstraints,
    gamma: f64,
    seed: u64,
) -> Result<Topology, GenerationError> {
    let dims = gen.dims;
    let pairs: Vec<(RouterId, RouterId)> = same_die_pairs(dims).into_iter().map(|(a, b, _)| (a, b)).collect();
    let mut rng = seeded(seed);
    let skeleton = vertical_skeleton(dims, gen.geometry);
    for _ in 0..gen.max_retries.max(1) {
        let rank: Vec<u64> = pairs.iter().map(|_| rng.random()).collect();
        let mut topo = skeleton.clone();
        let mut used = vec![false; pairs.len()];
        let mut ok = true;
        for _ in 0..constraints.planar_link_budget {
            let feasible: Vec<usize> = (0..pairs.len())
                .filter(|&k| {
                    let (a, b) = pairs[k];
                    !used[k] && topo.degree(a) < constraints.k_max && topo.degree(b) < constraints.k_max
                })
                .collect();
            if feasible.is_empty() {
                ok = false;
                break;
            }
            let k = if rng.random::<f64>() < gamma {
                *feasible
                    .iter()
                    .max_by(|&&x, &&y| {
                        let (fx, fy) = (traffic.symmetric(pairs[x].0, pairs[x].1), traffic.symmetric(pairs[y].0, pairs[y].1));
                        fx.total_cmp(&fy).then(rank[y].cmp(&rank[x]))
                    })
                    .expect("non-empty")
            } else {
                feasible[rng.random_range(0..feasible.len())]
            };
            used[k] = true;
            topo.add_link(pairs[k].0, pairs[k].1)?;
        }
        if ok && topo.is_connected(&[]) {
            return Ok(topo);
        }
    }
    Err(GenerationError::GenerationFailed {
        retries: gen.max_retries,
    })
}

/// Planar link lengths sorted, for move-invariance checks.
pub fn planar_length_multiset(topology: &Topology) -> Vec<u32> {
    let mut out: Vec<u32> = topology
        .links()
        .iter()
        .filter(|l| l.kind == LinkKind::Planar)
        .map(|l| MoveSpace::squared_length(topology, l.a, l.b))
        .collect();
    out.sort_unstable();
    out
}
