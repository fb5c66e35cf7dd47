//! CART regression trees with variance-reduction splits.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::seeded;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("expected {expected} features, got {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("training set is empty")]
    Empty,
    #[error("need at least {need} rows, have {have}")]
    TooFewRows { need: usize, have: usize },
    #[error("target {0} is not finite")]
    NonFiniteTarget(f64),
}

pub const DEFAULT_CAPACITY: usize = 50_000;

/// Bounded FIFO of `(features, target)` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    rows: VecDeque<(Vec<f64>, f64)>,
    width: Option<usize>,
    capacity: usize,
}

impl Default for TrainingSet {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_CAPACITY)
    }
}

impl TrainingSet {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            rows: VecDeque::new(),
            width: None,
            capacity: capacity.max(1),
        }
    }

    /// Appends a row, evicting the oldest one when full.
    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<(), LearnerError> {
        if !y.is_finite() {
            return Err(LearnerError::NonFiniteTarget(y));
        }
        match self.width {
            Some(w) if w != x.len() => {
                return Err(LearnerError::WidthMismatch {
                    expected: w,
                    found: x.len(),
                })
            }
            _ => self.width = Some(x.len()),
        }
        if self.rows.len() == self.capacity {
            self.rows.pop_front();
        }
        self.rows.push_back((x, y));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> Option<usize> {
        self.width
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.rows.iter().map(|(x, y)| (x.as_slice(), *y))
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.1).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub params: TreeParams,
    pub n_features: usize,
    pub nodes: Vec<Node>,
    /// Total squared-error reduction attributed to each feature.
    pub importances: Vec<f64>,
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn sse(ys: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let (mut s, mut s2, mut n) = (0.0, 0.0, 0usize);
    for y in ys {
        s += y;
        s2 += y * y;
        n += 1;
    }
    (s, s2, n)
}

fn sse_of(s: f64, s2: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (s2 - s * s / n as f64).max(0.0)
    }
}

impl RegressionTree {
    pub fn fit(set: &TrainingSet, params: TreeParams) -> Result<Self, LearnerError> {
        let width = set.width().ok_or(LearnerError::Empty)?;
        let xs: Vec<&[f64]> = set.rows.iter().map(|r| r.0.as_slice()).collect();
        let ys: Vec<f64> = set.targets();
        let mut tree = RegressionTree {
            params,
            n_features: width,
            nodes: Vec::new(),
            importances: vec![0.0; width],
        };
        let idx: Vec<usize> = (0..ys.len()).collect();
        tree.grow(&xs, &ys, idx, 0);
        Ok(tree)
    }

    fn grow(&mut self, xs: &[&[f64]], ys: &[f64], idx: Vec<usize>, depth: usize) -> usize {
        let (s, s2, n) = sse(idx.iter().map(|&i| ys[i]));
        let parent = sse_of(s, s2, n);
        let mean = s / n as f64;
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean, samples: n });
        let min_leaf = self.params.min_leaf.max(1);
        let scale = s2.abs().max(1.0);
        if depth >= self.params.max_depth || n < 2 * min_leaf || parent <= 1e-12 * scale {
            return slot;
        }
        let Some(best) = self.best_split(xs, ys, &idx, parent, min_leaf, scale) else {
            return slot;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| xs[i][best.feature] <= best.threshold);
        self.importances[best.feature] += best.gain;
        let l = self.grow(xs, ys, left, depth + 1);
        let r = self.grow(xs, ys, right, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        slot
    }

    fn best_split(&self, xs: &[&[f64]], ys: &[f64], idx: &[usize], parent: f64, min_leaf: usize, scale: f64) -> Option<Best> {
        let n = idx.len();
        let tol = 1e-12 * scale;
        let mut best: Option<Best> = None;
        let mut order = idx.to_vec();
        for f in 0..self.n_features {
            order.sort_by(|&a, &b| xs[a][f].total_cmp(&xs[b][f]).then(a.cmp(&b)));
            let (mut ls, mut ls2) = (0.0, 0.0);
            let (ts, ts2, _) = sse(order.iter().map(|&i| ys[i]));
            for k in 0..n - 1 {
                let y = ys[order[k]];
                ls += y;
                ls2 += y * y;
                let nl = k + 1;
                let (lo, hi) = (xs[order[k]][f], xs[order[k + 1]][f]);
                if lo == hi || nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let gain = parent - sse_of(ls, ls2, nl) - sse_of(ts - ls, ts2 - ls2, n - nl);
                if gain > tol && best.as_ref().is_none_or(|b| gain > b.gain + tol) {
                    best = Some(Best {
                        gain,
                        feature: f,
                        threshold: lo + (hi - lo) / 2.0,
                    });
                }
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, LearnerError> {
        if x.len() != self.n_features {
            return Err(LearnerError::WidthMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value, .. } => return Ok(value),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn mse(&self, set: &TrainingSet) -> Result<f64, LearnerError> {
        let mut sum = 0.0;
        for (x, y) in set.rows() {
            let e = self.predict(x)? - y;
            sum += e * e;
        }
        Ok(sum / set.len().max(1) as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Population variance of the targets.
pub fn variance(ys: &[f64]) -> f64 {
    if ys.is_empty() {
        return 0.0;
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64
}

/// Seeded shuffle split: fit on `1 − holdout` of the rows, report MSE on the rest.
pub fn validation_error(set: &TrainingSet, holdout: f64, seed: u64, params: TreeParams) -> Result<f64, LearnerError> {
    if set.len() < 10 {
        return Err(LearnerError::TooFewRows { need: 10, have: set.len() });
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut seeded(seed));
    let n_test = ((set.len() as f64 * holdout).round() as usize).clamp(1, set.len() - 1);
    let (test, train) = order.split_at(n_test);
    let pick = |ids: &[usize]| {
        let mut s = TrainingSet::with_capacity(ids.len());
        for &i in ids {
            let (x, y) = &set.rows[i];
            s.push(x.clone(), *y).expect("validated row");
        }
        s
    };
    let tree = RegressionTree::fit(&pick(train), params)?;
    tree.mse(&pick(test))
}
