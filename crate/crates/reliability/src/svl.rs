//! Spare vertical link allocation as search over subsets of functional VLs.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

use num_bigint::BigUint;
use serde::Serialize;

use crate::aging::{critical_set, AgingContext, FailureTimeline, Lifetime, SpareAllocation};
use crate::error::SvlError;

/// Largest subset count an exhaustive search will enumerate.
pub const EXHAUSTIVE_CAP: u64 = 1_000_000;

/// Relative lifetime gain under which another spare no longer counts.
pub const SATURATION_GAIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub lifetime: Lifetime,
    /// Spared VLs whose spare took over before the crossing.
    pub activated: Vec<usize>,
    /// VLs removed before the crossing, in failure order.
    pub failed_before_crossing: Vec<usize>,
    /// First VL taken out of service in the timeline.
    pub first_removed: Option<usize>,
}

impl Evaluation {
    /// Larger lifetime wins, then more spares actually used.
    fn beats(&self, other: &Evaluation) -> bool {
        let (a, b) = (self.lifetime.hours, other.lifetime.hours);
        a > b || (a == b && self.activated.len() > other.activated.len())
    }

    pub fn from_timeline(timeline: &FailureTimeline, lifetime: Lifetime) -> Self {
        Self {
            lifetime,
            activated: timeline.activated_before_crossing(),
            failed_before_crossing: timeline.failures_before_crossing(),
            first_removed: timeline.events.iter().find(|e| e.link_removed).map(|e| e.vl),
        }
    }
}

pub trait Evaluator {
    /// Lifetime with one full spare on each VL of `spares` (sorted, distinct).
    fn evaluate(&self, spares: &[usize]) -> Result<Evaluation, SvlError>;

    /// Requests answered without evaluating, if the evaluator caches.
    fn memo_hits(&self) -> usize {
        0
    }
}

pub struct AgingEvaluator<'a> {
    pub context: &'a AgingContext,
    pub fraction: f64,
}

impl<'a> AgingEvaluator<'a> {
    pub fn new(context: &'a AgingContext) -> Self {
        Self { context, fraction: 1.0 }
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.fraction = fraction;
        self
    }
}

impl Evaluator for AgingEvaluator<'_> {
    fn evaluate(&self, spares: &[usize]) -> Result<Evaluation, SvlError> {
        let timeline = self
            .context
            .failure_timeline(&SpareAllocation::partial(spares, self.fraction))?;
        Ok(Evaluation::from_timeline(&timeline, self.context.lifetime(&timeline)))
    }
}

/// Caches evaluations by canonical spare set.
pub struct Memoized<E> {
    inner: E,
    memo: Mutex<HashMap<Vec<usize>, Evaluation>>,
    hits: Mutex<usize>,
}

impl<E: Evaluator> Memoized<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            memo: Mutex::new(HashMap::new()),
            hits: Mutex::new(0),
        }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Evaluator> Evaluator for Memoized<E> {
    fn evaluate(&self, spares: &[usize]) -> Result<Evaluation, SvlError> {
        let mut key = spares.to_vec();
        key.sort_unstable();
        if let Some(e) = self.memo.lock().expect("memo lock").get(&key) {
            *self.hits.lock().expect("hits lock") += 1;
            return Ok(e.clone());
        }
        let e = self.inner.evaluate(&key)?;
        self.memo.lock().expect("memo lock").insert(key, e.clone());
        Ok(e)
    }

    fn memo_hits(&self) -> usize {
        *self.hits.lock().expect("hits lock")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SearchStats {
    /// Evaluator requests made by the search.
    pub simulator_calls: usize,
    pub memo_hits: usize,
    pub wall_time_s: f64,
    /// Mean seconds per request.
    pub q_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyStep {
    pub chosen: usize,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    /// Sorted spare set.
    pub solution: Vec<usize>,
    /// Absent only for an empty greedy run, which evaluates nothing.
    pub evaluation: Option<Evaluation>,
    pub stats: SearchStats,
    /// Greedy choices in selection order; empty for other searches.
    pub steps: Vec<GreedyStep>,
}

impl SearchResult {
    pub fn lifetime(&self) -> Option<f64> {
        self.evaluation.as_ref().map(|e| e.lifetime.hours)
    }

    pub fn activated(&self) -> Option<&[usize]> {
        self.evaluation.as_ref().map(|e| e.activated.as_slice())
    }
}

struct Counter<'a> {
    eval: &'a dyn Evaluator,
    calls: usize,
    hits0: usize,
    start: Instant,
}

impl<'a> Counter<'a> {
    fn new(eval: &'a dyn Evaluator) -> Self {
        Self {
            eval,
            calls: 0,
            hits0: eval.memo_hits(),
            start: Instant::now(),
        }
    }

    fn call(&mut self, s: &[usize]) -> Result<Evaluation, SvlError> {
        self.calls += 1;
        self.eval.evaluate(s)
    }

    fn stats(&self) -> SearchStats {
        let wall = self.start.elapsed().as_secs_f64();
        SearchStats {
            simulator_calls: self.calls,
            memo_hits: self.eval.memo_hits() - self.hits0,
            wall_time_s: wall,
            q_estimate: if self.calls > 0 { wall / self.calls as f64 } else { 0.0 },
        }
    }
}

fn pool_of(functional: &[usize], restrict_to: Option<&[usize]>) -> Vec<usize> {
    let mut pool = restrict_to.unwrap_or(functional).to_vec();
    pool.sort_unstable();
    pool.dedup();
    pool
}

/// `n` rounds of adding the candidate that maximizes lifetime, lowest VL on ties.
pub fn greedy_allocate(
    functional: &[usize],
    n: usize,
    eval: &dyn Evaluator,
    restrict_to: Option<&[usize]>,
) -> Result<SearchResult, SvlError> {
    let pool = pool_of(functional, restrict_to);
    if n > pool.len() {
        return Err(SvlError::PoolTooSmall { n, pool: pool.len() });
    }
    let mut counter = Counter::new(eval);
    let mut chosen: Vec<usize> = Vec::new();
    let mut steps = Vec::new();
    for _ in 0..n {
        let mut best: Option<(usize, Evaluation)> = None;
        for &x in pool.iter().filter(|x| !chosen.contains(x)) {
            let mut s = chosen.clone();
            s.push(x);
            s.sort_unstable();
            let e = counter.call(&s)?;
            if best.as_ref().is_none_or(|(_, b)| e.beats(b)) {
                best = Some((x, e));
            }
        }
        let (x, e) = best.expect("pool larger than n");
        chosen.push(x);
        steps.push(GreedyStep { chosen: x, evaluation: e });
    }
    let evaluation = steps.last().map(|s| s.evaluation.clone());
    let mut solution = chosen;
    solution.sort_unstable();
    Ok(SearchResult {
        solution,
        evaluation,
        stats: counter.stats(),
        steps,
    })
}

pub fn binomial(m: usize, n: usize) -> BigUint {
    if n > m {
        return BigUint::ZERO;
    }
    let k = n.min(m - n);
    let mut c = BigUint::from(1u32);
    for i in 0..k {
        c = c * BigUint::from(m - i) / BigUint::from(i + 1);
    }
    c
}

/// Best of every `n`-subset of the pool, lexicographically first on ties.
pub fn exhaustive_allocate(
    functional: &[usize],
    n: usize,
    eval: &dyn Evaluator,
    restrict_to: Option<&[usize]>,
    cap: u64,
) -> Result<SearchResult, SvlError> {
    let pool = pool_of(functional, restrict_to);
    if n > pool.len() {
        return Err(SvlError::PoolTooSmall { n, pool: pool.len() });
    }
    let count = binomial(pool.len(), n);
    if count > BigUint::from(cap) {
        return Err(SvlError::SearchSpaceTooLarge { count, cap });
    }
    let mut counter = Counter::new(eval);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best: Option<(Vec<usize>, Evaluation)> = None;
    loop {
        let s: Vec<usize> = idx.iter().map(|&i| pool[i]).collect();
        let e = counter.call(&s)?;
        if best.as_ref().is_none_or(|(_, b)| e.beats(b)) {
            best = Some((s, e));
        }
        let Some(k) = (0..n).rev().find(|&k| idx[k] < pool.len() - n + k) else {
            break;
        };
        idx[k] += 1;
        for j in k + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
    let (solution, evaluation) = best.expect("at least one subset");
    Ok(SearchResult {
        solution,
        evaluation: Some(evaluation),
        stats: counter.stats(),
        steps: Vec::new(),
    })
}

/// The `n` busiest VLs at time zero.
pub fn static_allocate(vl_utilization_t0: &[f64], n: usize) -> Vec<usize> {
    let mut s = critical_set(vl_utilization_t0, n);
    s.sort_unstable();
    s
}

/// Drops VLs idle at time zero. Heuristic: such links may still carry
/// traffic after reroutes.
pub fn utilization_filter(pool: &[usize], vl_utilization_t0: &[f64]) -> Vec<usize> {
    let kept: Vec<usize> = pool.iter().copied().filter(|&v| vl_utilization_t0[v] > 0.0).collect();
    if kept.len() < pool.len() {
        log::warn!(
            "utilization filter dropped {} idle VLs; the result may miss links loaded after reroutes",
            pool.len() - kept.len()
        );
    }
    kept
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaturationSweep {
    /// Greedy lifetime for `n = 0..=n_max`.
    pub lifetimes: Vec<f64>,
    /// Greedy selection order; the solution for `n` is its first `n` entries.
    pub order: Vec<usize>,
    /// Smallest `n` beyond which every further spare gains less than the threshold.
    pub n_star: Option<usize>,
    pub stats: SearchStats,
}

impl SaturationSweep {
    /// Relative gain of `n` spares over `n − 1`.
    pub fn gain(&self, n: usize) -> f64 {
        relative_gain(self.lifetimes[n - 1], self.lifetimes[n])
    }
}

fn relative_gain(before: f64, after: f64) -> f64 {
    if before > 0.0 {
        (after - before) / before
    } else if after > before {
        f64::INFINITY
    } else {
        0.0
    }
}

pub fn saturation_sweep(functional: &[usize], n_max: usize, eval: &dyn Evaluator) -> Result<SaturationSweep, SvlError> {
    let greedy = greedy_allocate(functional, n_max, eval, None)?;
    let base = eval.evaluate(&[])?;
    let mut lifetimes = vec![base.lifetime.hours];
    lifetimes.extend(greedy.steps.iter().map(|s| s.evaluation.lifetime.hours));
    let last = lifetimes.len() - 1;
    let n_star = (0..last)
        .find(|&n| (n + 1..=last).all(|k| relative_gain(lifetimes[k - 1], lifetimes[k]) < SATURATION_GAIN));
    Ok(SaturationSweep {
        lifetimes,
        order: greedy.steps.iter().map(|s| s.chosen).collect(),
        n_star,
        stats: greedy.stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneCheck {
    pub greedy_full: SearchResult,
    pub greedy_restricted: SearchResult,
    /// Absent when either exhaustive search was refused.
    pub exhaustive: Option<(SearchResult, SearchResult)>,
}

impl PruneCheck {
    pub fn lifetimes_equal(&self) -> bool {
        let eq = |a: &SearchResult, b: &SearchResult| a.lifetime() == b.lifetime();
        eq(&self.greedy_full, &self.greedy_restricted) && self.exhaustive.as_ref().is_none_or(|(f, r)| eq(f, r))
    }

    /// Equal lifetimes and the same spares put to use before the crossing.
    pub fn solutions_equal(&self) -> bool {
        let eq = |a: &SearchResult, b: &SearchResult| {
            a.lifetime() == b.lifetime() && a.activated() == b.activated()
        };
        eq(&self.greedy_full, &self.greedy_restricted) && self.exhaustive.as_ref().is_none_or(|(f, r)| eq(f, r))
    }
}

pub fn prune_equivalence_check(
    functional: &[usize],
    restricted: &[usize],
    n: usize,
    eval: &dyn Evaluator,
) -> Result<PruneCheck, SvlError> {
    let greedy_full = greedy_allocate(functional, n, eval, None)?;
    let greedy_restricted = greedy_allocate(functional, n, eval, Some(restricted))?;
    let exhaustive = match (
        exhaustive_allocate(functional, n, eval, None, EXHAUSTIVE_CAP),
        exhaustive_allocate(functional, n, eval, Some(restricted), EXHAUSTIVE_CAP),
    ) {
        (Ok(f), Ok(r)) => Some((f, r)),
        (Err(SvlError::SearchSpaceTooLarge { .. }), _) | (_, Err(SvlError::SearchSpaceTooLarge { .. })) => None,
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    Ok(PruneCheck {
        greedy_full,
        greedy_restricted,
        exhaustive,
    })
}
