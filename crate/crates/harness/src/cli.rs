use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use swnoc_core::cost::HOP_BINS;
use swnoc_core::{comm_cost, feature_vector, CostParams};
use swnoc_reliability::{
    critical_set, exhaustive_allocate, greedy_allocate, lifetime, saturation_sweep, static_allocate, AgingEvaluator,
    Evaluator, Memoized, SpareAllocation,
};

use crate::config::{Algo, ExperimentConfig, Family, Method, TrafficSource};
use crate::error::HarnessError;
use crate::output::{csv_out, vl_list, write_text};
use crate::{pipeline, recipes};

#[derive(Debug, Parser)]
#[command(name = "swnoc", version, about = "3D small-world NoC design, simulation and vertical-link reliability")]
pub struct Cli {
    /// Experiment configuration (TOML). Defaults apply when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the run seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecipeName {
    AlphaSweep,
    TopologyCompare,
    Reliability,
}

#[derive(Debug, clap::Args)]
pub struct Inputs {
    /// Topology file; generated from the config when absent.
    #[arg(long)]
    pub topo: Option<PathBuf>,
    /// Traffic matrix file (N lines of N comma-separated rates).
    #[arg(long)]
    pub traffic: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a topology file.
    Gen {
        #[arg(long, value_enum)]
        family: Option<Family>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        traffic: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Communication cost, average hop count and the design features.
    Evaluate {
        #[command(flatten)]
        io: Inputs,
        /// Router pipeline stages per hop.
        #[arg(long, default_value_t = 3)]
        r: u32,
    },
    /// Optimize a small-world design; emits the per-iteration trace.
    Optimize {
        #[arg(long)]
        traffic: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum)]
        algo: Option<Algo>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Write the best design here.
        #[arg(long)]
        best: Option<PathBuf>,
    },
    /// Cycle-level simulation.
    Simulate {
        #[command(flatten)]
        io: Inputs,
        #[arg(long)]
        rate: Option<f64>,
        /// Emit per-VL utilization instead of the summary row.
        #[arg(long)]
        vls: bool,
    },
    /// Aging timeline, optionally with a spares file.
    Age {
        #[command(flatten)]
        io: Inputs,
        #[arg(long)]
        spares: Option<PathBuf>,
    },
    /// Spare VL allocation.
    Allocate {
        #[command(flatten)]
        io: Inputs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Restrict candidates to the h hottest VLs.
        #[arg(long)]
        critical: Option<usize>,
    },
    /// Greedy lifetime for every spare count up to n-max.
    Sweep {
        #[command(flatten)]
        io: Inputs,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Run a figure recipe into a directory.
    Recipe {
        #[arg(value_enum)]
        name: RecipeName,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn apply_inputs(cfg: &mut ExperimentConfig, io: &Inputs) {
    if let Some(t) = &io.topo {
        cfg.topology.file = Some(t.clone());
    }
    if let Some(t) = &io.traffic {
        cfg.traffic = TrafficSource::File { path: t.clone() };
    }
}

pub fn run(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    match cli.command {
        Command::Gen {
            family,
            alpha,
            traffic,
            out,
        } => {
            if let Some(f) = family {
                cfg.topology.family = f;
            }
            if let Some(a) = alpha {
                cfg.topology.alpha = a;
            }
            if let Some(t) = traffic {
                cfg.traffic = TrafficSource::File { path: t };
            }
            let tr = pipeline::traffic(&cfg)?;
            let topo = pipeline::build(&cfg, cfg.topology.family, cfg.topology.alpha, &tr)?;
            cfg.topology.constraints().check(&topo)?;
            write_text(out.as_deref(), &topo.to_toml())
        }
        Command::Evaluate { io, r } => {
            apply_inputs(&mut cfg, &io);
            let tr = pipeline::traffic(&cfg)?;
            let topo = pipeline::topology(&cfg, &tr)?;
            let cost = comm_cost(&topo, &tr, CostParams { r });
            let fv = feature_vector(&topo, &tr);
            let mut header = vec!["comm_cost".to_string(), "comm_cost_normalized".into(), "avg_hops".into()];
            header.extend((1..=fv.region_hops.len()).map(|k| format!("region_hops_{k}")));
            header.extend((1..=HOP_BINS).map(|k| format!("weighted_comm_{k}")));
            header.extend((1..=fv.die_cc.len()).map(|k| format!("die_cc_{k}")));
            let mut row = vec![cost.raw, cost.normalized, topo.avg_hop_count(None)];
            row.extend(fv.to_vec());
            let mut w = csv_out(io.out.as_deref(), &cfg)?;
            w.write_record(&header)?;
            w.write_record(row.iter().map(|v| v.to_string()))?;
            w.flush().map_err(HarnessError::io("csv"))
        }
        Command::Optimize {
            traffic,
            alpha,
            algo,
            budget,
            out,
            best,
        } => {
            if let Some(t) = traffic {
                cfg.traffic = TrafficSource::File { path: t };
            }
            if let Some(a) = alpha {
                cfg.topology.alpha = a;
            }
            if let Some(a) = algo {
                cfg.search.algo = a;
            }
            if let Some(b) = budget {
                cfg.search.budget = b;
            }
            let tr = pipeline::traffic(&cfg)?;
            let report = pipeline::optimize(&cfg, &tr, cfg.search.algo, cfg.topology.alpha)?;
            let mut w = csv_out(out.as_deref(), &cfg)?;
            w.write_record(["iteration", "wall_ms", "evals", "o_best"])?;
            for it in &report.iterations {
                w.write_record([
                    it.iteration.to_string(),
                    format!("{:.3}", it.wall_ms),
                    it.evaluations.to_string(),
                    it.best_cost.to_string(),
                ])?;
            }
            w.flush().map_err(HarnessError::io("csv"))?;
            log::info!(
                "initial O {:.4}, best O {:.4} after {} evaluations",
                report.initial_cost,
                report.best_cost,
                report.evaluations
            );
            match best {
                Some(p) => write_text(Some(&p), &report.best.to_toml()),
                None => Ok(()),
            }
        }
        Command::Simulate { io, rate, vls } => {
            apply_inputs(&mut cfg, &io);
            if let Some(r) = rate {
                cfg.sim.injection_rate = r;
            }
            let tr = pipeline::traffic(&cfg)?;
            let topo = pipeline::topology(&cfg, &tr)?;
            let s = pipeline::run_sim(&cfg, &topo, &tr)?;
            let mut w = csv_out(io.out.as_deref(), &cfg)?;
            let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
            if vls {
                w.write_record(["vl", "utilization"])?;
                for (i, u) in s.vl_utilization.iter().enumerate() {
                    w.write_record([(i + 1).to_string(), u.to_string()])?;
                }
            } else {
                w.write_record([
                    "latency_cycles",
                    "energy_pj",
                    "router_energy_share",
                    "edp",
                    "avg_hops",
                    "injected",
                    "delivered",
                    "saturated",
                    "stalled_cycles",
                ])?;
                w.write_record([
                    opt(s.avg_latency_cycles),
                    opt(s.energy_per_message_pj),
                    opt(s.router_energy_share),
                    opt(s.edp),
                    opt(s.avg_hops),
                    s.injected_packets.to_string(),
                    s.delivered_packets.to_string(),
                    s.saturated.to_string(),
                    s.stalled_cycles.to_string(),
                ])?;
            }
            w.flush().map_err(HarnessError::io("csv"))
        }
        Command::Age { io, spares } => {
            apply_inputs(&mut cfg, &io);
            let tr = pipeline::traffic(&cfg)?;
            let topo = pipeline::topology(&cfg, &tr)?;
            let threshold = pipeline::mesh_edp(&cfg, &tr)?;
            let alloc = match &spares {
                Some(p) => SpareAllocation::parse(&std::fs::read_to_string(p).map_err(HarnessError::io(p))?)?,
                None => SpareAllocation::default(),
            };
            let ctx = pipeline::aging_context(&cfg, topo, tr, threshold, false)?;
            let tl = ctx.failure_timeline(&alloc)?;
            let mut w = csv_out(io.out.as_deref(), &cfg)?;
            w.write_record(["record", "time_h", "vl", "tsv", "kind", "link_removed", "edp", "normalized_edp"])?;
            let (mut e, mut p) = (tl.events.iter().peekable(), tl.profile.iter().peekable());
            loop {
                let take_sample = match (p.peek(), e.peek()) {
                    (Some(s), Some(ev)) => s.time <= ev.time,
                    (Some(_), None) => true,
                    (None, Some(_)) => false,
                    (None, None) => break,
                };
                if take_sample {
                    let s = p.next().expect("peeked");
                    w.write_record(["sample", &s.time.to_string(), "", "", "", "", &s.edp.to_string(), &s.normalized.to_string()])?;
                } else {
                    let ev = e.next().expect("peeked");
                    let kind = format!("{:?}", ev.kind).to_lowercase();
                    w.write_record([
                        "event",
                        &ev.time.to_string(),
                        &(ev.vl + 1).to_string(),
                        &ev.tsv.to_string(),
                        &kind,
                        &ev.link_removed.to_string(),
                        "",
                        "",
                    ])?;
                }
            }
            w.flush().map_err(HarnessError::io("csv"))?;
            let life = lifetime(&tl, threshold, cfg.timeline.horizon);
            log::info!("lifetime {} h{}", life.hours, if life.censored { " (censored)" } else { "" });
            Ok(())
        }
        Command::Allocate {
            io,
            n,
            method,
            critical,
        } => {
            apply_inputs(&mut cfg, &io);
            if let Some(n) = n {
                cfg.svl.n = n;
            }
            if let Some(m) = method {
                cfg.svl.method = m;
            }
            if critical.is_some() {
                cfg.svl.critical = critical;
            }
            let tr = pipeline::traffic(&cfg)?;
            let topo = pipeline::topology(&cfg, &tr)?;
            let functional = pipeline::functional_vls(&topo);
            let threshold = pipeline::mesh_edp(&cfg, &tr)?;
            let ctx = pipeline::aging_context(&cfg, topo, tr, threshold, true)?;
            let eval = Memoized::new(AgingEvaluator::new(&ctx).with_fraction(cfg.svl.fraction));
            let u0 = ctx.state(&[], 1)?.vl_utilization.clone();
            let pool = cfg.svl.critical.map(|h| critical_set(&u0, h));
            let n = cfg.svl.n;
            let (solution, evaluation, calls, hits) = match cfg.svl.method {
                Method::Greedy => {
                    let r = greedy_allocate(&functional, n, &eval, pool.as_deref())?;
                    (r.solution, r.evaluation, r.stats.simulator_calls, r.stats.memo_hits)
                }
                Method::Exhaustive => {
                    let r = exhaustive_allocate(&functional, n, &eval, pool.as_deref(), cfg.svl.exhaustive_cap)?;
                    (r.solution, r.evaluation, r.stats.simulator_calls, r.stats.memo_hits)
                }
                Method::Static => {
                    let s = static_allocate(&u0, n);
                    let e = eval.evaluate(&s)?;
                    (s, Some(e), 1, 0)
                }
            };
            let evaluation = match evaluation {
                Some(e) => e,
                None => eval.evaluate(&solution)?,
            };
            let mut w = csv_out(io.out.as_deref(), &cfg)?;
            w.write_record(["method", "n", "lifetime_h", "censored", "spares", "activated", "evaluator_calls", "memo_hits"])?;
            w.write_record([
                format!("{:?}", cfg.svl.method).to_lowercase(),
                n.to_string(),
                evaluation.lifetime.hours.to_string(),
                evaluation.lifetime.censored.to_string(),
                vl_list(&solution),
                vl_list(&evaluation.activated),
                calls.to_string(),
                hits.to_string(),
            ])?;
            w.flush().map_err(HarnessError::io("csv"))
        }
        Command::Sweep { io, n_max } => {
            apply_inputs(&mut cfg, &io);
            if let Some(n) = n_max {
                cfg.svl.n_max = n;
            }
            let tr = pipeline::traffic(&cfg)?;
            let topo = pipeline::topology(&cfg, &tr)?;
            let functional = pipeline::functional_vls(&topo);
            let threshold = pipeline::mesh_edp(&cfg, &tr)?;
            let ctx = pipeline::aging_context(&cfg, topo, tr, threshold, true)?;
            let eval = Memoized::new(AgingEvaluator::new(&ctx).with_fraction(cfg.svl.fraction));
            let sweep = saturation_sweep(&functional, cfg.svl.n_max.min(functional.len()), &eval)?;
            let mut w = csv_out(io.out.as_deref(), &cfg)?;
            w.write_record(["n", "lifetime_h", "gain", "added_vl", "saturated"])?;
            for n in 0..sweep.lifetimes.len() {
                w.write_record([
                    n.to_string(),
                    sweep.lifetimes[n].to_string(),
                    if n == 0 { String::new() } else { sweep.gain(n).to_string() },
                    if n == 0 { String::new() } else { (sweep.order[n - 1] + 1).to_string() },
                    sweep.n_star.is_some_and(|s| n >= s).to_string(),
                ])?;
            }
            w.flush().map_err(HarnessError::io("csv"))
        }
        Command::Recipe { name, out } => {
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            std::fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
            match name {
                RecipeName::AlphaSweep => recipes::run_alpha_sweep(&cfg, &dir),
                RecipeName::TopologyCompare => recipes::run_topology_compare(&cfg, &dir),
                RecipeName::Reliability => recipes::run_reliability(&cfg, &dir),
            }
        }
    }
}
