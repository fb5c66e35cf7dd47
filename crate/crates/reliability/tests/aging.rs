mod common;

use proptest::prelude::*;
use swnoc_core::{build_mesh, synth_traffic, Geometry, GridDims, SyntheticTrafficSpec, TrafficProfile};
use swnoc_netsim::{simulate, EnergyParams, SimConfig};
use swnoc_reliability::aging::{EventKind, TimelineEnd};
use swnoc_reliability::*;

#[test]
fn two_link_failure_times() {
    let life = 100.0;
    let mut d = DamageState::new(2, life, &BundleModel::default(), &SpareAllocation::default());
    let u = 0.25;
    let (dt, e) = d.advance(&[2.0 * u, u], 0.0).unwrap();
    assert_eq!(dt, life / (2.0 * u));
    assert_eq!(e.vl, 0);
    assert!(e.link_removed);
    let u_after = 0.5;
    let (dt2, e2) = d.advance(&[0.0, u_after], dt).unwrap();
    assert_eq!(e2.vl, 1);
    assert_eq!(e2.time, life / (2.0 * u) + (life - u * life / (2.0 * u)) / u_after);
    assert_eq!(e2.time, 300.0);
    assert_eq!(dt2, 100.0);
}

#[test]
fn delta_scaling_stretches_every_failure() {
    let base = AgingParams::default();
    let c = 1.7;
    let scaled = AgingParams {
        delta_fail: base.delta_fail * c,
        ..base
    };
    let factor = ((c - 1.0) * base.delta_fail * base.r0_ohm / base.a_ohm).exp();
    let util = [0.3, 0.1, 0.45, 0.2];
    let times = |p: &AgingParams| {
        let mut d = DamageState::new(4, effective_life(p), &BundleModel::default(), &SpareAllocation::default());
        let mut t = 0.0;
        let mut out = Vec::new();
        while let Ok((dt, e)) = d.advance(&util, t) {
            t += dt;
            out.push((e.vl, e.time));
        }
        out
    };
    let (a, b) = (times(&base), times(&scaled));
    assert_eq!(a.len(), 4);
    for ((va, ta), (vb, tb)) in a.iter().zip(&b) {
        assert_eq!(va, vb);
        assert!((tb / ta - factor).abs() < 1e-12 * factor);
    }
}

#[test]
fn delta_limit_approaches_t0() {
    let p = AgingParams {
        delta_fail: 1e-12,
        ..AgingParams::default()
    };
    assert!((effective_life(&p) / p.t0_hours - 1.0).abs() < 1e-9);
}

fn flat_timeline(values: &[(f64, f64)]) -> FailureTimeline {
    FailureTimeline {
        events: Vec::new(),
        profile: values
            .iter()
            .map(|&(time, edp)| aging::EdpSample {
                time,
                edp,
                normalized: edp,
            })
            .collect(),
        end: TimelineEnd::Horizon,
        threshold_edp: 1.0,
        noise_flags: 0,
        violations: 0,
    }
}

#[test]
fn lifetime_edge_cases() {
    let above = flat_timeline(&[(0.0, 1.2), (10.0, 1.3)]);
    assert_eq!(lifetime(&above, 1.0, 1e6).hours, 0.0);
    let never = flat_timeline(&[(0.0, 0.5), (10.0, 0.7)]);
    let l = lifetime(&never, 1.0, 1e6);
    assert!(l.censored);
    assert_eq!(l.hours, 1e6);
    let at = flat_timeline(&[(0.0, 0.5), (10.0, 1.0)]);
    assert_eq!(lifetime(&at, 1.0, 1e6).hours, 10.0);
}

struct Tiny {
    topo: swnoc_core::Topology,
    traffic: TrafficProfile,
    sim: SimConfig,
}

fn tiny() -> Tiny {
    let dims = GridDims::new(2, 2, 2);
    let traffic = synth_traffic(SyntheticTrafficSpec::Uniform, dims, 0);
    Tiny {
        topo: build_mesh(dims, Geometry::default()),
        traffic,
        sim: SimConfig {
            injection_rate: 0.2,
            warmup_cycles: 1000,
            measure_cycles: 10_000,
            ..SimConfig::default()
        },
    }
}

/// Failure times and EDPs recomputed directly from the simulator.
fn hand_profile(t: &Tiny, life: f64) -> Vec<(f64, f64)> {
    let energy = EnergyParams::default();
    let sim_without = |removed: &[usize]| {
        let vl_links = t.topo.vl_links();
        let links: Vec<usize> = removed.iter().map(|&v| vl_links[v].unwrap()).collect();
        simulate(&t.topo.without_links(&links), &t.traffic, &t.sim, &energy).unwrap()
    };
    let r0 = sim_without(&[]);
    let u0 = &r0.vl_utilization;
    let (first, t1) = (0..4)
        .map(|v| (v, life / u0[v]))
        .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
    let r1 = sim_without(&[first]);
    let u1 = &r1.vl_utilization;
    let (_, t2) = (0..4)
        .filter(|&v| v != first)
        .map(|v| (v, t1 + (life - u0[v] * t1) / u1[v]))
        .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
    vec![(0.0, r0.edp.unwrap()), (t1, r1.edp.unwrap()), (t2, f64::NAN)]
}

#[test]
fn tiny_instance_crossing_matches_hand_computation() {
    let t = tiny();
    let params = AgingParams::default();
    let life = effective_life(&params);
    let hand = hand_profile(&t, life);
    let (e0, e1) = (hand[0].1, hand[1].1);
    assert!(e1 > e0);
    let threshold = 0.5 * (e0 + e1);
    let ctx = AgingContext::new(
        t.topo.clone(),
        t.traffic.clone(),
        t.sim,
        EnergyParams::default(),
        params,
        threshold,
    )
    .unwrap()
    .with_timeline(TimelineConfig {
        max_failures: Some(2),
        ..TimelineConfig::default()
    });
    let tl = ctx.failure_timeline(&SpareAllocation::default()).unwrap();
    assert_eq!(tl.profile[0].edp, e0);
    assert!((tl.profile[1].time - hand[1].0).abs() <= 1e-9 * hand[1].0);
    assert!((tl.events[1].time - hand[2].0).abs() <= 1e-9 * hand[2].0);
    let l = ctx.lifetime(&tl);
    assert!(!l.censored);
    assert!((l.hours - hand[1].0).abs() <= 1e-9 * hand[1].0);
}

#[test]
fn cut_gap_is_unroutable() {
    let t = tiny();
    let ctx = AgingContext::new(t.topo, t.traffic, t.sim, EnergyParams::default(), AgingParams::default(), 1.0).unwrap();
    assert!(ctx.state(&[0, 1, 2, 3], 1).unwrap().edp.is_infinite());
    assert!(ctx.state(&[0, 1, 2], 1).unwrap().edp.is_finite());
}

#[test]
fn edp_constant_until_first_failure() {
    let ctx = common::toy_context(3);
    let tl = ctx.failure_timeline(&SpareAllocation::default()).unwrap();
    assert_eq!(tl.profile[0].time, 0.0);
    assert_eq!(tl.profile[1].time, tl.events[0].time);
    assert!(tl.events.windows(2).all(|w| w[0].time <= w[1].time));
    for w in tl.profile.windows(2) {
        assert!(w[1].edp >= w[0].edp * (1.0 - ctx.timeline.noise_band));
    }
}

#[test]
fn middle_gap_traffic_critical_set() {
    let dims = GridDims::default();
    let per_die = dims.nodes_per_die();
    let mut f = vec![0.0; 64 * 64];
    for i in per_die..2 * per_die {
        for j in 2 * per_die..3 * per_die {
            f[i * 64 + j] = 1.0;
            f[j * 64 + i] = 1.0;
        }
    }
    let traffic = TrafficProfile::new(64, f).unwrap();
    let sim = SimConfig {
        injection_rate: 0.1,
        warmup_cycles: 1000,
        measure_cycles: 10_000,
        ..SimConfig::default()
    };
    let r = simulate(&build_mesh(dims, Geometry::default()), &traffic, &sim, &EnergyParams::default()).unwrap();
    let h = critical_set(&r.vl_utilization, 16);
    assert!(h.iter().all(|v| (16..32).contains(v)), "{h:?}");
    assert_eq!(critical_set(&r.vl_utilization, 48).len(), 48);
}

#[test]
fn spare_on_hot_link_extends_toy_lifetime() {
    let ctx = common::toy_context(1);
    let base = ctx.failure_timeline(&SpareAllocation::default()).unwrap();
    let first = base.first_unspared_failure().unwrap();
    let spared = ctx.failure_timeline(&SpareAllocation::full(&[first])).unwrap();
    assert_eq!(spared.events[0].vl, first);
    assert_eq!(spared.events[0].kind, EventKind::Functional);
    assert!(!spared.events[0].link_removed);
    assert!(ctx.lifetime(&spared).hours >= ctx.lifetime(&base).hours);
}

fn removal_time(u: f64, fraction: f64, bundle: &BundleModel) -> f64 {
    let mut d = DamageState::new(1, 1000.0, bundle, &SpareAllocation::partial(&[0], fraction));
    let mut t = 0.0;
    loop {
        let (dt, e) = d.advance(&[u], t).unwrap();
        t += dt;
        if e.link_removed {
            return t;
        }
    }
}

proptest! {
    #[test]
    fn hotter_link_fails_no_later(u in proptest::collection::vec(0.01f64..1.0, 2..10)) {
        let mut d = DamageState::new(u.len(), 500.0, &BundleModel::default(), &SpareAllocation::default());
        let mut t = 0.0;
        let mut order = Vec::new();
        while let Ok((dt, e)) = d.advance(&u, t) {
            t += dt;
            order.push(e.vl);
        }
        for w in order.windows(2) {
            prop_assert!(u[w[0]] >= u[w[1]]);
        }
    }

    #[test]
    fn consumed_within_life(u in proptest::collection::vec(0.0f64..1.0, 1..8), steps in 1usize..6) {
        let spares = SpareAllocation::full(&[0]);
        let mut d = DamageState::new(u.len(), 50.0, &BundleModel::graded(4), &spares);
        let mut t = 0.0;
        for _ in 0..steps {
            let Ok((dt, _)) = d.advance(&u, t) else { break };
            t += dt;
            for (v, tsvs) in d.tsvs.iter().enumerate() {
                if d.alive[v] {
                    prop_assert!(tsvs.iter().all(|s| s.consumed <= d.life * (1.0 + 1e-12)));
                }
            }
        }
    }

    #[test]
    fn partial_fraction_ordering(u in 0.01f64..1.0) {
        let b = BundleModel::graded(4);
        let t: Vec<f64> = [0.0, 0.5, 0.75, 1.0].iter().map(|&f| removal_time(u, f, &b)).collect();
        prop_assert!(t.windows(2).all(|w| w[0] <= w[1]), "{:?}", t);
        prop_assert!(t[0] < t[3]);
    }

    #[test]
    fn critical_set_is_top_h(u in proptest::collection::vec(0.0f64..1.0, 48), h in 1usize..=48) {
        let s = critical_set(&u, h);
        prop_assert_eq!(s.len(), h);
        let min_in = s.iter().map(|&v| u[v]).fold(f64::INFINITY, f64::min);
        for v in 0..48 {
            if !s.contains(&v) {
                prop_assert!(u[v] <= min_in);
            }
        }
    }
}
