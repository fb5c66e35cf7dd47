//! Figure-shaped experiment sweeps. Independent runs fan out over rayon and are
//! collected in input order, so output files are byte-identical across reruns.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use swnoc_core::{comm_cost, CostParams};
use swnoc_reliability::svl::SaturationSweep;
use swnoc_reliability::{
    saturation_sweep, static_allocate, AgingEvaluator, Evaluator, Memoized,
    SpareAllocation,
};

use crate::config::{ExperimentConfig, Family};
use crate::error::HarnessError;
use crate::output::{csv_out, median, vl_list};
use crate::pipeline;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub seed: u64,
    pub comm_cost: f64,
    pub edp: f64,
}

pub fn alpha_sweep(cfg: &ExperimentConfig) -> Result<Vec<AlphaRow>, HarnessError> {
    let jobs: Vec<(f64, u64)> = cfg
        .recipes
        .alphas
        .iter()
        .flat_map(|&a| cfg.replicate_seeds().into_iter().map(move |s| (a, s)))
        .collect();
    jobs.par_iter()
        .map(|&(alpha, seed)| {
            let run = cfg.clone().with_seed(seed);
            let traffic = pipeline::traffic(&run)?;
            let report = pipeline::optimize(&run, &traffic, run.search.algo, alpha)?;
            let sim = pipeline::run_sim(&run, &report.best, &traffic)?;
            Ok(AlphaRow {
                alpha,
                seed,
                comm_cost: report.best_cost,
                edp: sim.edp.unwrap_or(f64::INFINITY),
            })
        })
        .collect()
}

/// Per-α medians in input order.
pub fn alpha_medians(cfg: &ExperimentConfig, rows: &[AlphaRow]) -> Vec<(f64, f64, f64)> {
    cfg.recipes
        .alphas
        .iter()
        .map(|&a| {
            let of = |f: fn(&AlphaRow) -> f64| median(&rows.iter().filter(|r| r.alpha == a).map(f).collect::<Vec<_>>());
            (a, of(|r| r.comm_cost), of(|r| r.edp))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub family: String,
    pub seed: u64,
    pub comm_cost: f64,
    pub latency: f64,
    pub energy_pj: f64,
    pub edp: f64,
    pub norm_latency: f64,
    pub norm_energy: f64,
    pub norm_edp: f64,
}

pub fn topology_compare(cfg: &ExperimentConfig) -> Result<Vec<CompareRow>, HarnessError> {
    let per_seed: Vec<Vec<CompareRow>> = cfg
        .replicate_seeds()
        .par_iter()
        .map(|&seed| {
            let run = cfg.clone().with_seed(seed);
            let traffic = pipeline::traffic(&run)?;
            let mut measured = Vec::new();
            for family in std::iter::once(Family::Mesh).chain(run.recipes.families.iter().copied()) {
                let topo = pipeline::build(&run, family, run.topology.alpha, &traffic)?;
                let sim = pipeline::run_sim(&run, &topo, &traffic)?;
                let o = comm_cost(&topo, &traffic, CostParams::default()).normalized;
                measured.push((family, o, sim));
            }
            let metric = |s: &swnoc_netsim::SimResult| {
                (
                    s.avg_latency_cycles.unwrap_or(f64::INFINITY),
                    s.energy_per_message_pj.unwrap_or(f64::INFINITY),
                    s.edp.unwrap_or(f64::INFINITY),
                )
            };
            let base = metric(&measured[0].2);
            Ok(measured[1..]
                .iter()
                .map(|(family, o, sim)| {
                    let (l, e, p) = metric(sim);
                    CompareRow {
                        family: family.name().into(),
                        seed,
                        comm_cost: *o,
                        latency: l,
                        energy_pj: e,
                        edp: p,
                        norm_latency: l / base.0,
                        norm_energy: e / base.1,
                        norm_edp: p / base.2,
                    }
                })
                .collect())
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineRow {
    pub family: String,
    pub seed: u64,
    pub time_h: f64,
    pub edp: f64,
    pub normalized_edp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub n: usize,
    pub lifetime_h: f64,
    pub gain: f64,
    pub spares: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialRow {
    pub seed: u64,
    pub fraction: f64,
    pub lifetime_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyStaticRow {
    pub seed: u64,
    pub n: usize,
    pub greedy_h: f64,
    pub static_h: f64,
    pub ratio: f64,
    pub greedy_spares: String,
    pub static_spares: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReliabilityReport {
    pub timelines: Vec<TimelineRow>,
    pub sweep: Vec<SweepRow>,
    pub partial: Vec<PartialRow>,
    pub greedy_vs_static: Vec<GreedyStaticRow>,
    pub n_star: Vec<Option<usize>>,
}

const RELIABILITY_FAMILIES: [Family; 4] = [Family::Mesh, Family::Mrrm, Family::Rrrr, Family::SwOpt];

fn reliability_one(cfg: &ExperimentConfig) -> Result<ReliabilityReport, HarnessError> {
    let seed = cfg.seed;
    let traffic = pipeline::traffic(cfg)?;
    let threshold = pipeline::mesh_edp(cfg, &traffic)?;
    let mut report = ReliabilityReport::default();

    let mut sw_opt = None;
    for family in RELIABILITY_FAMILIES {
        let topo = pipeline::build(cfg, family, cfg.topology.alpha, &traffic)?;
        let ctx = pipeline::aging_context(cfg, topo.clone(), traffic.clone(), threshold, false)?;
        let tl = ctx.failure_timeline(&SpareAllocation::default())?;
        report.timelines.extend(tl.profile.iter().map(|s| TimelineRow {
            family: family.name().into(),
            seed,
            time_h: s.time,
            edp: s.edp,
            normalized_edp: s.normalized,
        }));
        if family == Family::SwOpt {
            sw_opt = Some(topo);
        }
    }

    let topo = sw_opt.expect("sw_opt is always built");
    let functional = pipeline::functional_vls(&topo);
    let ctx = pipeline::aging_context(cfg, topo, traffic, threshold, true)?;
    let eval = Memoized::new(AgingEvaluator::new(&ctx));
    let n_max = cfg.svl.n_max.min(functional.len());
    let sweep: SaturationSweep = saturation_sweep(&functional, n_max, &eval)?;
    for n in 0..sweep.lifetimes.len() {
        report.sweep.push(SweepRow {
            seed,
            n,
            lifetime_h: sweep.lifetimes[n],
            gain: if n == 0 { 0.0 } else { sweep.gain(n) },
            spares: vl_list(&sweep.order[..n]),
        });
    }
    report.n_star.push(sweep.n_star);

    let n = cfg.svl.n.min(sweep.order.len());
    let mut greedy: Vec<usize> = sweep.order[..n].to_vec();
    greedy.sort_unstable();
    for &fraction in &cfg.recipes.fractions {
        let e = AgingEvaluator::new(&ctx).with_fraction(fraction).evaluate(&greedy)?;
        report.partial.push(PartialRow {
            seed,
            fraction,
            lifetime_h: e.lifetime.hours,
        });
    }

    let u0 = ctx.state(&[], 1)?.vl_utilization.clone();
    let stat = static_allocate(&u0, n);
    let greedy_h = sweep.lifetimes[n];
    let static_h = eval.evaluate(&stat)?.lifetime.hours;
    report.greedy_vs_static.push(GreedyStaticRow {
        seed,
        n,
        greedy_h,
        static_h,
        ratio: greedy_h / static_h,
        greedy_spares: vl_list(&greedy),
        static_spares: vl_list(&stat),
    });
    Ok(report)
}

pub fn reliability(cfg: &ExperimentConfig) -> Result<ReliabilityReport, HarnessError> {
    let parts: Vec<ReliabilityReport> = cfg
        .replicate_seeds()
        .par_iter()
        .map(|&s| reliability_one(&cfg.clone().with_seed(s)))
        .collect::<Result<_, _>>()?;
    let mut all = ReliabilityReport::default();
    for p in parts {
        all.timelines.extend(p.timelines);
        all.sweep.extend(p.sweep);
        all.partial.extend(p.partial);
        all.greedy_vs_static.extend(p.greedy_vs_static);
        all.n_star.extend(p.n_star);
    }
    Ok(all)
}

fn write_rows<T: Serialize>(dir: &Path, name: &str, cfg: &ExperimentConfig, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv_out(Some(&dir.join(name)), cfg)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(HarnessError::io(dir.join(name)))?;
    Ok(())
}

fn write_summary(dir: &Path, cfg: &ExperimentConfig, recipe: &str, results: toml::Table) -> Result<(), HarnessError> {
    let mut t = toml::Table::new();
    t.insert("recipe".into(), recipe.into());
    t.insert("config_sha256".into(), cfg.hash().into());
    t.insert("seed".into(), (cfg.seed as i64).into());
    t.insert(
        "seeds".into(),
        toml::Value::Array(cfg.replicate_seeds().iter().map(|&s| (s as i64).into()).collect()),
    );
    t.insert("results".into(), toml::Value::Table(results));
    t.insert(
        "config".into(),
        toml::Value::try_from(cfg).map_err(|e| HarnessError::Config(e.to_string()))?,
    );
    let path = dir.join("summary.toml");
    std::fs::write(&path, toml::to_string(&t).expect("summary serializes")).map_err(HarnessError::io(path))
}

fn float_array(v: impl IntoIterator<Item = f64>) -> toml::Value {
    toml::Value::Array(v.into_iter().map(toml::Value::from).collect())
}

pub fn run_alpha_sweep(cfg: &ExperimentConfig, dir: &Path) -> Result<(), HarnessError> {
    let rows = alpha_sweep(cfg)?;
    write_rows(dir, "alpha_sweep.csv", cfg, &rows)?;
    let medians = alpha_medians(cfg, &rows);
    #[derive(Serialize)]
    struct M {
        alpha: f64,
        median_comm_cost: f64,
        median_edp: f64,
    }
    let m: Vec<M> = medians
        .iter()
        .map(|&(alpha, o, e)| M {
            alpha,
            median_comm_cost: o,
            median_edp: e,
        })
        .collect();
    write_rows(dir, "alpha_sweep_median.csv", cfg, &m)?;
    let best = medians.iter().min_by(|a, b| a.2.total_cmp(&b.2)).map(|m| m.0).unwrap_or(f64::NAN);
    let mut r = toml::Table::new();
    r.insert("alphas".into(), float_array(medians.iter().map(|m| m.0)));
    r.insert("median_edp".into(), float_array(medians.iter().map(|m| m.2)));
    r.insert("min_edp_alpha".into(), best.into());
    write_summary(dir, cfg, "alpha-sweep", r)
}

pub fn run_topology_compare(cfg: &ExperimentConfig, dir: &Path) -> Result<(), HarnessError> {
    let rows = topology_compare(cfg)?;
    write_rows(dir, "topology_compare.csv", cfg, &rows)?;
    let mut r = toml::Table::new();
    for family in &cfg.recipes.families {
        let edps: Vec<f64> = rows.iter().filter(|x| x.family == family.name()).map(|x| x.norm_edp).collect();
        r.insert(format!("{}_median_norm_edp", family.name()), median(&edps).into());
    }
    write_summary(dir, cfg, "topology-compare", r)
}

pub fn run_reliability(cfg: &ExperimentConfig, dir: &Path) -> Result<(), HarnessError> {
    let rep = reliability(cfg)?;
    write_rows(dir, "edp_timelines.csv", cfg, &rep.timelines)?;
    write_rows(dir, "spare_sweep.csv", cfg, &rep.sweep)?;
    write_rows(dir, "partial_allocation.csv", cfg, &rep.partial)?;
    write_rows(dir, "greedy_vs_static.csv", cfg, &rep.greedy_vs_static)?;
    let mut r = toml::Table::new();
    r.insert(
        "n_star".into(),
        toml::Value::Array(rep.n_star.iter().map(|n| n.map_or(-1, |v| v as i64).into()).collect()),
    );
    r.insert("greedy_static_ratio".into(), float_array(rep.greedy_vs_static.iter().map(|g| g.ratio)));
    write_summary(dir, cfg, "reliability", r)
}
