use proptest::prelude::*;
use swnoc_core::model::LinkKind;
use swnoc_core::{Geometry, GridDims, SwGenConfig, Topology, build_3d_sw, build_mesh};

fn mesh() -> Topology {
    build_mesh(GridDims::default(), Geometry::default())
}

#[test]
fn mesh_average_hop_is_eighty_over_twentyone() {
    let t = mesh();
    assert!((t.avg_hop_count(None) - 80.0 / 21.0).abs() < 1e-12);

    let dims = t.dims();
    let hops = t.all_pairs_hops();
    let n = dims.nodes();
    let mut sum = 0usize;
    for i in 0..n {
        for j in 0..n {
            let (p, q) = (dims.position(i), dims.position(j));
            let manhattan = p.x.abs_diff(q.x) + p.y.abs_diff(q.y) + p.z.abs_diff(q.z);
            assert_eq!(hops.get(i, j) as usize, manhattan);
            sum += manhattan;
        }
    }
    assert_eq!(sum as f64 / (n * (n - 1)) as f64, t.avg_hop_count(None));
    assert_eq!(hops.diameter(), 9.0);
}

#[test]
fn mesh_link_counts() {
    let t = mesh();
    assert_eq!(t.links().len(), 144);
    assert_eq!(t.count_kind(LinkKind::Planar), 96);
    assert_eq!(t.count_kind(LinkKind::Vertical), 48);
    assert_eq!(t.average_degree(), 4.5);
    assert_eq!(t.max_degree(), 6);
}

#[test]
fn cutting_a_die_gap_disconnects() {
    let t = mesh();
    assert!(t.is_connected(&[]));
    let vls = t.vl_links();
    let middle: Vec<_> = vls[16..32].iter().map(|l| l.unwrap()).collect();
    assert!(!t.is_connected(&middle));
    assert!(t.is_connected(&middle[1..]));
    let cut = t.without_links(&middle);
    assert!(cut.all_pairs_hops().hops(0, 63).is_infinite());
}

#[test]
fn pythagorean_distance() {
    let g = Geometry {
        planar_pitch_mm: 1.0,
        die_pitch_mm: 0.05,
    };
    let t = Topology::empty(GridDims::new(5, 5, 2), g);
    let p = |x, y, z| t.dims().router(swnoc_core::Position { x, y, z });
    assert_eq!(t.pair_distance(p(0, 0, 0), p(3, 4, 0)), 5.0);
    assert_eq!(t.pair_distance(p(0, 0, 0), p(1, 0, 0)), 1.0);
    assert_eq!(t.pair_distance(p(2, 2, 1), p(2, 2, 1)), 0.0);
    assert!((t.pair_distance(p(0, 0, 0), p(0, 0, 1)) - 0.05).abs() < 1e-15);
}

#[test]
fn toml_round_trip_preserves_everything() {
    let t = build_3d_sw(&SwGenConfig::default().with_seed(11)).unwrap();
    let back = Topology::from_toml(&t.to_toml()).unwrap();
    assert_eq!(back, t);
    assert_eq!(
        back.all_pairs_hops().average(None),
        t.all_pairs_hops().average(None)
    );
    assert!(Topology::from_toml("not = [valid").is_err());
}

fn sw(seed: u64) -> Topology {
    build_3d_sw(&SwGenConfig::default().with_seed(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hops_are_a_metric(seed in any::<u64>(), i in 0usize..64, j in 0usize..64, k in 0usize..64) {
        let h = sw(seed).all_pairs_hops();
        prop_assert_eq!(h.get(i, j), h.get(j, i));
        prop_assert_eq!(h.get(i, i), 0);
        prop_assert!(h.get(i, k) <= h.get(i, j) + h.get(j, k));
    }

    #[test]
    fn removing_a_link_never_shortens(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let t = sw(seed);
        let link = pick.index(t.links().len());
        let before = t.all_pairs_hops();
        let after = t.without_links(&[link]).all_pairs_hops();
        for i in 0..64 {
            for j in 0..64 {
                prop_assert!(after.get(i, j) >= before.get(i, j));
            }
        }
    }

    #[test]
    fn distance_is_a_metric(i in 0usize..64, j in 0usize..64, k in 0usize..64) {
        let t = mesh();
        let d = |a, b| t.pair_distance(a, b);
        prop_assert_eq!(d(i, j), d(j, i));
        prop_assert_eq!(d(i, j) == 0.0, i == j);
        prop_assert!(d(i, k) <= d(i, j) + d(j, k) + 1e-12);
    }
}
