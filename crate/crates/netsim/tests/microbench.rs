use petgraph::algo::is_cyclic_directed;
use petgraph::graph::DiGraph;
use proptest::prelude::*;
use swnoc_core::{build_3d_sw, build_mesh, synth_traffic, Geometry, GridDims, SwGenConfig, SyntheticTrafficSpec, Topology, TrafficProfile};
use swnoc_netsim::routing::channel_endpoints;
use swnoc_netsim::*;

fn isolated(topology: &Topology, src: usize, dst: usize, r: u32) -> (u64, usize) {
    let routes = RouteTable::build(topology, RoutingFamily::Auto, 4).unwrap();
    let cfg = SimConfig {
        router_stages: r,
        ..SimConfig::default()
    };
    let mut sim = Simulator::new(topology, &routes, cfg).unwrap();
    let id = sim.enqueue(src, dst, true);
    while !sim.idle() {
        sim.step().unwrap();
    }
    (sim.packets()[id].latency().unwrap(), routes.route(src, dst).hops())
}

#[test]
fn isolated_packet_latency_on_mesh() {
    let mesh = build_mesh(GridDims::default(), Geometry::default());
    for (dst, h) in [(1, 1u64), (3, 3), (63, 9)] {
        for r in [2u32, 3] {
            let (lat, hops) = isolated(&mesh, 0, dst, r);
            assert_eq!(hops as u64, h);
            assert_eq!(lat, h * (r as u64 + 1) + 63, "h={h} r={r}");
        }
    }
}

#[test]
fn isolated_packet_latency_on_small_world() {
    let sw = build_3d_sw(&SwGenConfig::default().with_seed(5)).unwrap();
    for dst in [7, 30, 63] {
        let (lat, hops) = isolated(&sw, 0, dst, 3);
        assert_eq!(lat, hops as u64 * 4 + 63);
    }
}

fn acyclic_layers(topology: &Topology) -> bool {
    let routes = RouteTable::build(topology, RoutingFamily::Layered, 4).unwrap();
    (0..routes.layers()).all(|vc| {
        let edges = routes.dependency_edges(vc);
        let g = DiGraph::<(), ()>::from_edges(edges.iter().map(|&(a, b)| (a as u32, b as u32)));
        !is_cyclic_directed(&g)
    })
}

#[test]
fn layered_dependency_graphs_are_acyclic() {
    for seed in 0..25 {
        let t = build_3d_sw(&SwGenConfig::default().with_seed(seed)).unwrap();
        assert!(acyclic_layers(&t), "seed {seed}");
    }
    assert!(acyclic_layers(&build_mesh(GridDims::default(), Geometry::default())));
}

#[test]
fn routes_are_contiguous_and_end_at_destination() {
    let t = build_3d_sw(&SwGenConfig::default().with_seed(11)).unwrap();
    let routes = RouteTable::build(&t, RoutingFamily::Auto, 4).unwrap();
    let hops = t.all_pairs_hops();
    for (s, d, r) in routes.routes() {
        if s == d {
            continue;
        }
        let mut at = s;
        for &c in &r.channels {
            let (u, v) = channel_endpoints(&t, c);
            assert_eq!(u, at);
            at = v;
        }
        assert_eq!(at, d);
        assert!(r.vc_mask != 0);
        assert!(r.hops() as u32 >= hops.get(s, d));
    }
}

fn short(rate: f64, seed: u64) -> SimConfig {
    SimConfig {
        injection_rate: rate,
        warmup_cycles: 1000,
        measure_cycles: 10_000,
        seed,
        ..SimConfig::default()
    }
}

#[test]
fn same_seed_same_result() {
    let t = build_3d_sw(&SwGenConfig::default().with_seed(2)).unwrap();
    let f = synth_traffic(SyntheticTrafficSpec::default(), t.dims(), 2);
    let a = simulate(&t, &f, &short(0.1, 4), &EnergyParams::default()).unwrap();
    let b = simulate(&t, &f, &short(0.1, 4), &EnergyParams::default()).unwrap();
    assert_eq!(a, b);
    let c = simulate(&t, &f, &short(0.1, 5), &EnergyParams::default()).unwrap();
    assert_ne!(a.injected_packets, 0);
    assert_ne!(a, c);
}

#[test]
fn isolated_message_energy_matches_hand_sum() {
    let mesh = build_mesh(GridDims::default(), Geometry::default());
    let f = {
        let mut v = vec![0.0; 64 * 64];
        v[63] = 1.0;
        TrafficProfile::new(64, v).unwrap()
    };
    let r = simulate(&mesh, &f, &short(0.002, 1), &EnergyParams::default()).unwrap();
    let e = EnergyParams::default();
    let expected = 64.0 * (10.0 * e.e_router_pj_per_flit_hop + 6.0 * 2.0 * e.e_link_pj_per_flit_mm + 3.0 * e.e_vl_pj_per_flit);
    assert!(r.delivered_packets > 0);
    assert!((r.energy_per_message_pj.unwrap() - expected).abs() < 1e-9);
}

#[test]
fn mesh_vertical_load_is_symmetric_under_uniform_traffic() {
    let dims = GridDims::default();
    let mesh = build_mesh(dims, Geometry::default());
    let f = synth_traffic(SyntheticTrafficSpec::Uniform, dims, 0);
    let cfg = SimConfig {
        injection_rate: 0.1,
        warmup_cycles: 5000,
        measure_cycles: 400_000,
        ..SimConfig::default()
    };
    let r = simulate(&mesh, &f, &cfg, &EnergyParams::default()).unwrap();
    let u = &r.vl_utilization;
    let gap = |g: usize| u[g * 16..(g + 1) * 16].iter().sum::<f64>();
    assert!((gap(0) / gap(2) - 1.0).abs() < 0.05);
    let class = |g: usize, pick: &dyn Fn(usize, usize) -> bool| {
        let v: Vec<f64> = (0..16).filter(|&k| pick(k % 4, k / 4)).map(|k| u[g * 16 + k]).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let border = |c: usize| c == 0 || c == 3;
    for g in 0..3 {
        let corner = class(g, &|x, y| border(x) && border(y));
        let edge = class(g, &|x, y| border(x) != border(y));
        let centre = class(g, &|x, y| !border(x) && !border(y));
        let mirror = class(2 - g, &|x, y| border(x) && border(y));
        assert!((corner / mirror - 1.0).abs() < 0.05);
        assert!((edge / centre - 1.0).abs() < 0.05, "gap {g}");
    }
}

#[test]
fn lower_die_traffic_stays_on_lower_links() {
    let dims = GridDims::default();
    let mut f = vec![0.0; 64 * 64];
    for i in 0..32 {
        for j in 0..32 {
            if i != j {
                f[i * 64 + j] = 1.0;
            }
        }
    }
    let f = TrafficProfile::new(64, f).unwrap();
    let r = simulate(&build_mesh(dims, Geometry::default()), &f, &short(0.1, 0), &EnergyParams::default()).unwrap();
    assert!(r.vl_utilization[..16].iter().all(|&u| u > 0.0));
    assert_eq!(r.vl_share(0..16), 1.0);
}

#[test]
fn high_load_stays_live() {
    let t = build_3d_sw(&SwGenConfig::default().with_seed(8)).unwrap();
    let f = synth_traffic(SyntheticTrafficSpec::default(), t.dims(), 8);
    let cfg = SimConfig {
        injection_rate: 0.5,
        warmup_cycles: 1000,
        measure_cycles: 50_000,
        drain_cycles: Some(0),
        ..SimConfig::default()
    };
    let r = simulate(&t, &f, &cfg, &EnergyParams::default()).unwrap();
    assert_eq!(r.stalled_cycles, 0);
    assert!(r.delivered_packets > 0);
}

#[test]
fn forced_mesh_routing_needs_a_mesh() {
    let t = build_3d_sw(&SwGenConfig::default()).unwrap();
    assert_eq!(RouteTable::build(&t, RoutingFamily::Mesh, 4).err(), Some(SimError::NotAMesh));
}

#[test]
fn mismatched_traffic_is_rejected() {
    let t = build_mesh(GridDims::new(2, 2, 2), Geometry::default());
    let f = synth_traffic(SyntheticTrafficSpec::Uniform, GridDims::default(), 0);
    assert!(matches!(
        simulate(&t, &f, &short(0.1, 0), &EnergyParams::default()),
        Err(SimError::SizeMismatch { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conservation_and_bounded_utilization(seed in 0u64..1000, rate in 0.01f64..0.4) {
        let t = build_3d_sw(&SwGenConfig::default().with_seed(seed)).unwrap();
        let f = synth_traffic(SyntheticTrafficSpec::default(), t.dims(), seed);
        let r = simulate(&t, &f, &short(rate, seed), &EnergyParams::default()).unwrap();
        prop_assert!(r.delivered_packets <= r.injected_packets);
        prop_assert!(r.channel_utilization.iter().all(|&u| (0.0..=1.0).contains(&u)));
        prop_assert!(r.vl_utilization.iter().all(|&u| (0.0..=1.0).contains(&u)));
        prop_assert_eq!(r.vl_utilization.len(), 48);
        if let Some(share) = r.router_energy_share {
            prop_assert!(share > 0.0 && share < 1.0);
        }
    }

    #[test]
    fn light_load_delivers_everything(seed in 0u64..1000) {
        let t = build_3d_sw(&SwGenConfig::default().with_seed(seed)).unwrap();
        let f = synth_traffic(SyntheticTrafficSpec::Uniform, t.dims(), seed);
        let r = simulate(&t, &f, &short(0.01, seed), &EnergyParams::default()).unwrap();
        prop_assert_eq!(r.delivered_packets, r.injected_packets);
        prop_assert!(!r.saturated);
    }
}
