//! TSV resistance aging, utilization-driven failure timelines and lifetime.
//!
//! Resistance follows `R(t) − R0 = A·ln(t / t0)`, so a TSV reaches the
//! `δ·R0` failure increase after `t_eff = t0·exp(δ·R0 / A)` hours of stress.
//! Stress time is wall time scaled by the link utilization and the TSV's
//! position multiplier, accumulated linearly across routing epochs.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use swnoc_core::model::Topology;
use swnoc_core::traffic::TrafficProfile;
use swnoc_netsim::{simulate, EnergyParams, SimConfig};

use crate::error::AgingError;

/// Barrier and copper geometry from which `A` and `t0` can be derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalTsv {
    pub rho_b: f64,
    pub t_b: f64,
    pub t_cu: f64,
    pub r_tsv: f64,
    pub alpha_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgingParams {
    pub r0_ohm: f64,
    pub a_ohm: f64,
    pub t0_hours: f64,
    pub delta_fail: f64,
    pub physical: Option<PhysicalTsv>,
}

impl Default for AgingParams {
    fn default() -> Self {
        let r0 = 0.05;
        Self {
            r0_ohm: r0,
            a_ohm: 0.1 * r0 / 5f64.ln(),
            t0_hours: 1000.0,
            delta_fail: 0.1,
            physical: None,
        }
    }
}

impl AgingParams {
    /// `(A, t0)`, derived from the physical inputs when present.
    pub fn coefficients(&self) -> (f64, f64) {
        match self.physical {
            Some(p) => (
                p.rho_b / (4.0 * std::f64::consts::PI * p.t_b),
                p.t_cu * std::f64::consts::PI * p.r_tsv * p.r_tsv / p.alpha_f,
            ),
            None => (self.a_ohm, self.t0_hours),
        }
    }

    pub fn validate(&self) -> Result<(), AgingError> {
        let (a, t0) = self.coefficients();
        for (name, v) in [("R0", self.r0_ohm), ("A", a), ("t0", t0), ("delta_fail", self.delta_fail)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AgingError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Resistance after `t` hours of stress.
    pub fn resistance(&self, t: f64) -> f64 {
        let (a, t0) = self.coefficients();
        if t <= t0 {
            self.r0_ohm
        } else {
            self.r0_ohm + a * (t / t0).ln()
        }
    }
}

/// Stress hours until the resistance rises by `delta_fail·R0`.
pub fn effective_life(params: &AgingParams) -> f64 {
    let (a, t0) = params.coefficients();
    t0 * (params.delta_fail * params.r0_ohm / a).exp()
}

/// Per-TSV stress multipliers of one vertical link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleModel {
    pub multipliers: Vec<f64>,
}

impl Default for BundleModel {
    fn default() -> Self {
        Self { multipliers: vec![1.0] }
    }
}

impl BundleModel {
    /// `side × side` TSV grid whose multipliers grow linearly from 1.0 on the
    /// outer ring to 1.5 on the innermost ring.
    pub fn graded(side: usize) -> Self {
        let rings = side.div_ceil(2);
        let mut multipliers = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                let ring = x.min(y).min(side - 1 - x).min(side - 1 - y);
                let m = if rings <= 1 {
                    1.0
                } else {
                    1.0 + 0.5 * ring as f64 / (rings - 1) as f64
                };
                multipliers.push(m);
            }
        }
        Self { multipliers }
    }

    pub fn len(&self) -> usize {
        self.multipliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multipliers.is_empty()
    }

    /// TSV indices covered by a spare at `fraction` of the bundle: the
    /// highest multipliers first, lower index on ties.
    pub fn spared_tsvs(&self, fraction: f64) -> Vec<usize> {
        let count = ((self.len() as f64 * fraction.clamp(0.0, 1.0)).round() as usize).min(self.len());
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.multipliers[b].total_cmp(&self.multipliers[a]).then(a.cmp(&b)));
        order.truncate(count);
        order.sort_unstable();
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpareStatus {
    None,
    Armed,
    Active,
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpareEntry {
    /// Zero-based serial VL index.
    pub vl: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpareAllocation {
    pub entries: Vec<SpareEntry>,
}

impl SpareAllocation {
    pub fn full(vls: &[usize]) -> Self {
        Self::partial(vls, 1.0)
    }

    pub fn partial(vls: &[usize], fraction: f64) -> Self {
        let mut vls = vls.to_vec();
        vls.sort_unstable();
        vls.dedup();
        Self {
            entries: vls.into_iter().map(|vl| SpareEntry { vl, fraction }).collect(),
        }
    }

    pub fn vls(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.vl).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One entry per line, `vl[,fraction]`, with one-based VL ids.
    pub fn parse(text: &str) -> Result<Self, AgingError> {
        let mut entries = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || AgingError::Parse(format!("line {}: {line:?}", k + 1));
            let mut parts = line.split(',').map(str::trim);
            let vl: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let fraction = match parts.next() {
                Some(f) => f.trim_end_matches('%').parse::<f64>().map_err(|_| bad())?,
                None => 1.0,
            };
            let fraction = if fraction > 1.0 { fraction / 100.0 } else { fraction };
            if vl == 0 || !(0.0..=1.0).contains(&fraction) {
                return Err(bad());
            }
            entries.push(SpareEntry { vl: vl - 1, fraction });
        }
        entries.sort_by_key(|e| e.vl);
        entries.dedup_by_key(|e| e.vl);
        Ok(Self { entries })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsvState {
    pub consumed: f64,
    pub multiplier: f64,
    pub spare: SpareStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageState {
    pub life: f64,
    pub alive: Vec<bool>,
    pub tsvs: Vec<Vec<TsvState>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// A functional TSV failed.
    Functional,
    /// An activated spare TSV failed.
    Spare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub time: f64,
    pub vl: usize,
    pub tsv: usize,
    pub kind: EventKind,
    /// The VL stopped carrying traffic.
    pub link_removed: bool,
}

impl DamageState {
    pub fn new(n_vls: usize, life: f64, bundle: &BundleModel, spares: &SpareAllocation) -> Self {
        let mut tsvs: Vec<Vec<TsvState>> = (0..n_vls)
            .map(|_| {
                bundle
                    .multipliers
                    .iter()
                    .map(|&m| TsvState {
                        consumed: 0.0,
                        multiplier: m,
                        spare: SpareStatus::None,
                    })
                    .collect()
            })
            .collect();
        for e in &spares.entries {
            if e.vl < n_vls {
                for t in bundle.spared_tsvs(e.fraction) {
                    tsvs[e.vl][t].spare = SpareStatus::Armed;
                }
            }
        }
        Self {
            life,
            alive: vec![true; n_vls],
            tsvs,
        }
    }

    /// Time to the next TSV failure under `utilization`, and that TSV. Ties go
    /// to the lowest VL, then the lowest TSV.
    pub fn next_failure(&self, utilization: &[f64]) -> Result<(f64, usize, usize), AgingError> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (vl, tsvs) in self.tsvs.iter().enumerate() {
            let u = utilization[vl];
            if !self.alive[vl] || u <= 0.0 {
                continue;
            }
            for (k, t) in tsvs.iter().enumerate() {
                let dt = ((self.life - t.consumed) / (u * t.multiplier)).max(0.0);
                if best.is_none_or(|b| dt < b.0) {
                    best = Some((dt, vl, k));
                }
            }
        }
        best.ok_or(AgingError::NoFailurePossible)
    }

    /// Accumulates `dt` hours at `utilization` on every live TSV, then applies
    /// the failure of `(vl, tsv)`.
    pub fn apply(&mut self, utilization: &[f64], dt: f64, vl: usize, tsv: usize, time: f64) -> FailureEvent {
        for (v, tsvs) in self.tsvs.iter_mut().enumerate() {
            if !self.alive[v] {
                continue;
            }
            for t in tsvs.iter_mut() {
                t.consumed += utilization[v] * t.multiplier * dt;
            }
        }
        let t = &mut self.tsvs[vl][tsv];
        let (kind, removed) = match t.spare {
            SpareStatus::Armed => {
                t.spare = SpareStatus::Active;
                t.consumed = 0.0;
                (EventKind::Functional, false)
            }
            SpareStatus::Active => {
                t.spare = SpareStatus::Exhausted;
                (EventKind::Spare, true)
            }
            SpareStatus::None | SpareStatus::Exhausted => (EventKind::Functional, true),
        };
        if removed {
            self.alive[vl] = false;
        }
        FailureEvent {
            time,
            vl,
            tsv,
            kind,
            link_removed: removed,
        }
    }

    /// Next failure plus its application.
    pub fn advance(&mut self, utilization: &[f64], time: f64) -> Result<(f64, FailureEvent), AgingError> {
        let (dt, vl, tsv) = self.next_failure(utilization)?;
        Ok((dt, self.apply(utilization, dt, vl, tsv, time + dt)))
    }
}

/// Network measurements for one set of removed VLs.
#[derive(Debug, Clone, PartialEq)]
pub struct NetState {
    /// Infinite when the network is disconnected.
    pub edp: f64,
    pub vl_utilization: Vec<f64>,
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimelineConfig {
    pub horizon: f64,
    pub max_failures: Option<usize>,
    /// End as soon as the normalized EDP reaches 1.
    pub stop_at_threshold: bool,
    /// Relative EDP drop tolerated as measurement noise.
    pub noise_band: f64,
    /// Window multiplier used to re-measure an EDP drop.
    pub remeasure_factor: u32,
}

impl Default for TimelineConfig {
    fn default() -> Self {
        Self {
            horizon: 1e12,
            max_failures: None,
            stop_at_threshold: false,
            noise_band: 0.02,
            remeasure_factor: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdpSample {
    pub time: f64,
    pub edp: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimelineEnd {
    Horizon,
    Disconnected,
    NoFailurePossible,
    MaxFailures,
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureTimeline {
    pub events: Vec<FailureEvent>,
    /// Piecewise-constant profile: each sample holds until the next one.
    pub profile: Vec<EdpSample>,
    pub end: TimelineEnd,
    pub threshold_edp: f64,
    /// Drops that stayed inside the noise band after re-measurement.
    pub noise_flags: usize,
    /// Drops larger than the noise band after re-measurement.
    pub violations: usize,
}

impl FailureTimeline {
    /// VLs removed up to and including the failure that causes the crossing.
    pub fn failures_before_crossing(&self) -> Vec<usize> {
        let life = lifetime(self, self.threshold_edp, f64::INFINITY).hours;
        self.events
            .iter()
            .filter(|e| e.link_removed && e.time <= life)
            .map(|e| e.vl)
            .collect()
    }

    /// Spared VLs whose spare was activated strictly before the crossing.
    pub fn activated_before_crossing(&self) -> Vec<usize> {
        let life = lifetime(self, self.threshold_edp, f64::INFINITY).hours;
        let mut v: Vec<usize> = self
            .events
            .iter()
            .filter(|e| e.time < life && !e.link_removed)
            .map(|e| e.vl)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// First VL removed without spare protection.
    pub fn first_unspared_failure(&self) -> Option<usize> {
        self.events
            .iter()
            .find(|e| e.link_removed && e.kind == EventKind::Functional)
            .map(|e| e.vl)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lifetime {
    pub hours: f64,
    /// The profile never reached the threshold; `hours` is the horizon.
    pub censored: bool,
}

/// First sample time whose EDP meets `threshold_edp`; censored at `horizon` otherwise.
pub fn lifetime(timeline: &FailureTimeline, threshold_edp: f64, horizon: f64) -> Lifetime {
    match timeline.profile.iter().find(|s| s.edp >= threshold_edp) {
        Some(s) => Lifetime {
            hours: s.time,
            censored: false,
        },
        None => Lifetime {
            hours: horizon,
            censored: true,
        },
    }
}

/// The `h` highest-utilization VLs, lowest index on ties, in rank order.
pub fn critical_set(vl_utilization: &[f64], h: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vl_utilization.len()).collect();
    order.sort_by(|&a, &b| vl_utilization[b].total_cmp(&vl_utilization[a]).then(a.cmp(&b)));
    order.truncate(h);
    order
}

type CacheKey = (Vec<usize>, u32);

/// Shared inputs of every timeline on one chip, with a simulation cache keyed
/// by the removed-VL set.
pub struct AgingContext {
    pub topology: Topology,
    pub traffic: TrafficProfile,
    pub sim: SimConfig,
    pub energy: EnergyParams,
    pub params: AgingParams,
    pub bundle: BundleModel,
    pub threshold_edp: f64,
    pub timeline: TimelineConfig,
    cache: Mutex<HashMap<CacheKey, Arc<NetState>>>,
    sim_runs: AtomicUsize,
}

impl AgingContext {
    pub fn new(
        topology: Topology,
        traffic: TrafficProfile,
        sim: SimConfig,
        energy: EnergyParams,
        params: AgingParams,
        threshold_edp: f64,
    ) -> Result<Self, AgingError> {
        params.validate()?;
        Ok(Self {
            topology,
            traffic,
            sim,
            energy,
            params,
            bundle: BundleModel::default(),
            threshold_edp,
            timeline: TimelineConfig::default(),
            cache: Mutex::new(HashMap::new()),
            sim_runs: AtomicUsize::new(0),
        })
    }

    pub fn with_bundle(mut self, bundle: BundleModel) -> Self {
        self.bundle = bundle;
        self
    }

    pub fn with_timeline(mut self, timeline: TimelineConfig) -> Self {
        self.timeline = timeline;
        self
    }

    /// Simulations actually run (cache misses).
    pub fn sim_runs(&self) -> usize {
        self.sim_runs.load(Ordering::Relaxed)
    }

    /// Network state with the given VLs removed, `window` times the configured measurement.
    pub fn state(&self, removed: &[usize], window: u32) -> Result<Arc<NetState>, AgingError> {
        let mut key = removed.to_vec();
        key.sort_unstable();
        let key = (key, window);
        if let Some(s) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(s.clone());
        }
        let vl_links = self.topology.vl_links();
        let links: Vec<usize> = key.0.iter().filter_map(|&vl| vl_links[vl]).collect();
        let reduced = self.topology.without_links(&links);
        let state = if reduced.is_connected(&[]) {
            let cfg = SimConfig {
                warmup_cycles: self.sim.warmup_cycles * window as u64,
                measure_cycles: self.sim.measure_cycles * window as u64,
                drain_cycles: self.sim.drain_cycles.map(|d| d * window as u64),
                ..self.sim
            };
            let r = simulate(&reduced, &self.traffic, &cfg, &self.energy)?;
            self.sim_runs.fetch_add(1, Ordering::Relaxed);
            NetState {
                edp: r.edp.unwrap_or(f64::INFINITY),
                vl_utilization: r.vl_utilization,
                saturated: r.saturated,
            }
        } else {
            NetState {
                edp: f64::INFINITY,
                vl_utilization: vec![0.0; self.topology.dims().vertical_links()],
                saturated: false,
            }
        };
        let state = Arc::new(state);
        self.cache.lock().expect("cache lock").insert(key, state.clone());
        Ok(state)
    }

    pub fn failure_timeline(&self, spares: &SpareAllocation) -> Result<FailureTimeline, AgingError> {
        let cfg = self.timeline;
        let n_vls = self.topology.dims().vertical_links();
        let mut damage = DamageState::new(n_vls, effective_life(&self.params), &self.bundle, spares);
        let mut removed: Vec<usize> = Vec::new();
        let mut events = Vec::new();
        let mut profile: Vec<EdpSample> = Vec::new();
        let (mut noise_flags, mut violations) = (0, 0);
        let mut time = 0.0;
        let mut last_removed_len = usize::MAX;
        let mut previous: Vec<usize> = Vec::new();
        let mut state = self.state(&removed, 1)?;
        let end = loop {
            if removed.len() != last_removed_len {
                last_removed_len = removed.len();
                state = self.state(&removed, 1)?;
                let mut edp = state.edp;
                if let Some(prev) = profile.last() {
                    if edp < prev.edp {
                        let factor = cfg.remeasure_factor.max(1);
                        let longer = self.state(&removed, factor)?;
                        let before = self.state(&previous, factor)?.edp;
                        edp = longer.edp;
                        state = Arc::new(NetState {
                            edp,
                            ..(*longer).clone()
                        });
                        if edp < before {
                            if edp >= before * (1.0 - cfg.noise_band) {
                                noise_flags += 1;
                            } else {
                                violations += 1;
                            }
                        }
                    }
                }
                profile.push(EdpSample {
                    time,
                    edp,
                    normalized: edp / self.threshold_edp,
                });
                previous.clone_from(&removed);
                if edp.is_infinite() {
                    break TimelineEnd::Disconnected;
                }
                if cfg.stop_at_threshold && edp >= self.threshold_edp {
                    break TimelineEnd::Threshold;
                }
            }
            if cfg.max_failures.is_some_and(|m| removed.len() >= m) {
                break TimelineEnd::MaxFailures;
            }
            let (dt, vl, tsv) = match damage.next_failure(&state.vl_utilization) {
                Ok(x) => x,
                Err(AgingError::NoFailurePossible) => break TimelineEnd::NoFailurePossible,
                Err(e) => return Err(e),
            };
            if time + dt > cfg.horizon {
                break TimelineEnd::Horizon;
            }
            time += dt;
            let event = damage.apply(&state.vl_utilization, dt, vl, tsv, time);
            if event.link_removed {
                removed.push(vl);
            }
            events.push(event);
        };
        Ok(FailureTimeline {
            events,
            profile,
            end,
            threshold_edp: self.threshold_edp,
            noise_flags,
            violations,
        })
    }

    pub fn lifetime(&self, timeline: &FailureTimeline) -> Lifetime {
        lifetime(timeline, self.threshold_edp, self.timeline.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_cases() {
        let r0 = 0.05;
        let p = AgingParams {
            r0_ohm: r0,
            a_ohm: 0.1 * r0 / 2f64.ln(),
            t0_hours: 100.0,
            ..AgingParams::default()
        };
        assert!((effective_life(&p) - 200.0).abs() < 1e-12 * 200.0);
        let p = AgingParams {
            a_ohm: 0.1 * r0,
            t0_hours: 1.0,
            ..p
        };
        assert!((effective_life(&p) - std::f64::consts::E).abs() < 1e-12 * std::f64::consts::E);
        assert!((effective_life(&AgingParams::default()) - 5000.0).abs() < 1e-9);
    }

    #[test]
    fn physical_inputs_override() {
        let phys = PhysicalTsv {
            rho_b: 4.0 * std::f64::consts::PI,
            t_b: 1.0,
            t_cu: 2.0,
            r_tsv: 1.0,
            alpha_f: std::f64::consts::PI,
        };
        let p = AgingParams {
            physical: Some(phys),
            ..AgingParams::default()
        };
        let (a, t0) = p.coefficients();
        assert!((a - 1.0).abs() < 1e-12);
        assert!((t0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn resistance_hits_criterion_at_effective_life() {
        let p = AgingParams::default();
        let t = effective_life(&p);
        assert!((p.resistance(t) - 1.1 * p.r0_ohm).abs() < 1e-12);
    }

    #[test]
    fn graded_bundle_rings() {
        let b = BundleModel::graded(4);
        assert_eq!(b.multipliers[0], 1.0);
        assert_eq!(b.multipliers[5], 1.5);
        assert_eq!(b.multipliers.iter().filter(|&&m| m == 1.5).count(), 4);
        assert_eq!(b.spared_tsvs(0.25), vec![5, 6, 9, 10]);
        assert_eq!(b.spared_tsvs(1.0).len(), 16);
        assert!(b.spared_tsvs(0.0).is_empty());
    }

    #[test]
    fn uniform_utilization_fails_lowest_index() {
        let mut d = DamageState::new(4, 100.0, &BundleModel::default(), &SpareAllocation::default());
        let (dt, e) = d.advance(&[0.5; 4], 0.0).unwrap();
        assert_eq!(dt, 200.0);
        assert_eq!(e.vl, 0);
    }

    #[test]
    fn partly_consumed_link() {
        let mut d = DamageState::new(1, 100.0, &BundleModel::default(), &SpareAllocation::default());
        d.tsvs[0][0].consumed = 90.0;
        let (dt, _) = d.advance(&[0.25], 0.0).unwrap();
        assert_eq!(dt, 40.0);
    }

    #[test]
    fn idle_links_never_fail() {
        let d = DamageState::new(2, 1.0, &BundleModel::default(), &SpareAllocation::default());
        assert_eq!(d.next_failure(&[0.0, 0.0]), Err(AgingError::NoFailurePossible));
    }

    #[test]
    fn spare_restarts_damage() {
        let mut d = DamageState::new(1, 10.0, &BundleModel::default(), &SpareAllocation::full(&[0]));
        let (_, e) = d.advance(&[1.0], 0.0).unwrap();
        assert!(!e.link_removed);
        let (dt, e) = d.advance(&[1.0], 10.0).unwrap();
        assert_eq!(dt, 10.0);
        assert_eq!(e.kind, EventKind::Spare);
        assert!(e.link_removed);
    }

    #[test]
    fn spares_file() {
        let s = SpareAllocation::parse("# spares\n26\n22,0.5\n3,75%\n").unwrap();
        assert_eq!(s.vls(), vec![2, 21, 25]);
        assert_eq!(s.entries[0].fraction, 0.75);
        assert!(SpareAllocation::parse("0\n").is_err());
    }

    #[test]
    fn critical_set_ties() {
        assert_eq!(critical_set(&[1.0; 5], 3), vec![0, 1, 2]);
        assert_eq!(critical_set(&[0.0, 2.0, 1.0, 2.0], 2), vec![1, 3]);
    }
}
