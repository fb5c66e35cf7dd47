//! Communication-frequency matrices and synthetic workloads.

use rand::Rng as _;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::TrafficError;
use crate::model::{GridDims, RouterId};
use crate::rng::seeded;

/// Directed `N × N` matrix of relative message rates `f_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficProfile {
    n: usize,
    f: Vec<f64>,
}

impl TrafficProfile {
    /// Validated constructor: zero diagonal, finite non-negative entries and at
    /// least one positive entry.
    pub fn new(n: usize, f: Vec<f64>) -> Result<Self, TrafficError> {
        let t = Self::unchecked_zero_ok(n, f)?;
        if t.total() <= 0.0 {
            return Err(TrafficError::Silent);
        }
        Ok(t)
    }

    /// All-zero matrix. Useful for degenerate cost and simulation checks.
    pub fn zeros(n: usize) -> Self {
        Self { n, f: vec![0.0; n * n] }
    }

    fn unchecked_zero_ok(n: usize, f: Vec<f64>) -> Result<Self, TrafficError> {
        if f.len() != n * n {
            return Err(TrafficError::Shape {
                expected: n * n,
                found: f.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = f[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(TrafficError::BadEntry { i, j, value: v });
                }
                if i == j && v != 0.0 {
                    return Err(TrafficError::Diagonal(i));
                }
            }
        }
        Ok(Self { n, f })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: RouterId, j: RouterId) -> f64 {
        self.f[i * self.n + j]
    }

    pub fn row(&self, i: RouterId) -> &[f64] {
        &self.f[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.f
    }

    pub fn total(&self) -> f64 {
        self.f.iter().sum()
    }

    pub fn row_sum(&self, i: RouterId) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            f: self.f.iter().map(|v| v * c).collect(),
        }
    }

    /// `f_ij + f_ji`, the undirected interaction weight.
    pub fn symmetric(&self, i: RouterId, j: RouterId) -> f64 {
        self.get(i, j) + self.get(j, i)
    }

    /// Relabels cores onto routers: entry `(p[i], p[j])` of the result is `f_ij`.
    pub fn permuted(&self, core_to_router: &[RouterId]) -> Self {
        let n = self.n;
        let mut f = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                f[core_to_router[i] * n + core_to_router[j]] = self.get(i, j);
            }
        }
        Self { n, f }
    }

    /// Parses `N` lines of `N` comma-separated reals. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, TrafficError> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|e| TrafficError::Parse {
                        line: lineno + 1,
                        msg: format!("{cell:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(TrafficError::Parse {
                    line: i + 1,
                    msg: format!("expected {n} columns, found {}", row.len()),
                });
            }
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let cells: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Synthetic stand-ins for benchmark traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticTrafficSpec {
    Uniform,
    /// `pairs` random ordered pairs at `ratio` times the unit background.
    Hotspot { pairs: usize, ratio: f64 },
    /// Heavy-tailed pair weights where pairs straddling die gap `gap` (1-based,
    /// between dies `gap-1` and `gap`) carry `share` of the total rate.
    SkewedMiddle { gap: usize, share: f64 },
}

impl Default for SyntheticTrafficSpec {
    fn default() -> Self {
        SyntheticTrafficSpec::SkewedMiddle { gap: 2, share: 0.5 }
    }
}

/// Tail index of the Pareto pair weights in the skewed workload.
const PARETO_SHAPE: f64 = 1.5;

pub fn synth_traffic(spec: SyntheticTrafficSpec, dims: GridDims, seed: u64) -> TrafficProfile {
    let n = dims.nodes();
    let mut rng = seeded(seed);
    let mut f = vec![0.0; n * n];
    let off_diag = |f: &mut Vec<f64>, v: f64| {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    f[i * n + j] = v;
                }
            }
        }
    };
    match spec {
        SyntheticTrafficSpec::Uniform => off_diag(&mut f, 1.0),
        SyntheticTrafficSpec::Hotspot { pairs, ratio } => {
            off_diag(&mut f, 1.0);
            let slots = n * (n - 1);
            for k in sample(&mut rng, slots, pairs.min(slots)).into_iter() {
                let i = k / (n - 1);
                let mut j = k % (n - 1);
                if j >= i {
                    j += 1;
                }
                f[i * n + j] = ratio;
            }
        }
        SyntheticTrafficSpec::SkewedMiddle { gap, share } => {
            let per_die = dims.nodes_per_die();
            let lower = gap.saturating_sub(1);
            let straddles = |i: usize, j: usize| {
                let (zi, zj) = (i / per_die, j / per_die);
                (zi == lower && zj == gap) || (zi == gap && zj == lower)
            };
            let (mut inside, mut outside) = (0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let u: f64 = rng.random();
                    let w = (1.0 - u).powf(-1.0 / PARETO_SHAPE);
                    f[i * n + j] = w;
                    if straddles(i, j) {
                        inside += w;
                    } else {
                        outside += w;
                    }
                }
            }
            let share = share.clamp(0.0, 1.0);
            let total = inside + outside;
            let (ki, ko) = (
                if inside > 0.0 { share * total / inside } else { 0.0 },
                if outside > 0.0 { (1.0 - share) * total / outside } else { 0.0 },
            );
            for i in 0..n {
                for j in 0..n {
                    f[i * n + j] *= if straddles(i, j) { ki } else { ko };
                }
            }
        }
    }
    TrafficProfile { n, f }
}
