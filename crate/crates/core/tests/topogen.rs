use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swnoc_core::model::LinkKind;
use swnoc_core::topogen::{mesh_die_pairs, place_cores, same_die_pairs, sample_sw_planar_links};
use swnoc_core::{
    Geometry, GridDims, SwGenConfig, Topology, TrafficProfile, build_3d_sw, build_mesh, build_mrrm,
    build_rrrr,
};

fn squared_len(t: &Topology, a: usize, b: usize) -> u32 {
    let (p, q) = (t.position(a), t.position(b));
    let (dx, dy) = (p.x.abs_diff(q.x) as u32, p.y.abs_diff(q.y) as u32);
    dx * dx + dy * dy
}

fn planar_length_histogram(alpha: f64, seeds: u64) -> BTreeMap<u32, f64> {
    let mut hist = BTreeMap::new();
    for seed in 0..seeds {
        let topo = build_3d_sw(&SwGenConfig::default().with_alpha(alpha).with_seed(seed)).unwrap();
        for l in topo.links().iter().filter(|l| l.kind == LinkKind::Planar) {
            *hist.entry(squared_len(&topo, l.a, l.b)).or_insert(0.0) += 1.0;
        }
    }
    hist
}

// Plain sequential weighted draw without replacement from the same pair list,
// ignoring degree caps and connectivity.
fn reference_histogram(alpha: f64, draws_per_run: usize, runs: u64) -> BTreeMap<u32, f64> {
    let pairs = same_die_pairs(GridDims::default());
    let mut hist = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    for _ in 0..runs {
        let mut w: Vec<f64> = pairs
            .iter()
            .map(|&(_, _, d2)| (d2 as f64).powf(-alpha / 2.0))
            .collect();
        for _ in 0..draws_per_run {
            let total: f64 = w.iter().sum();
            let mut t = rng.random::<f64>() * total;
            let mut k = 0;
            while k + 1 < w.len() && (w[k] == 0.0 || t >= w[k]) {
                t -= w[k];
                k += 1;
            }
            *hist.entry(pairs[k].2).or_insert(0.0) += 1.0;
            w[k] = 0.0;
        }
    }
    hist
}

fn chi_square(observed: &BTreeMap<u32, f64>, expected_share: &BTreeMap<u32, f64>) -> (f64, usize) {
    let n: f64 = observed.values().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (k, &p) in expected_share {
        let e = p * n;
        if e < 5.0 {
            continue;
        }
        let o = observed.get(k).copied().unwrap_or(0.0);
        stat += (o - e) * (o - e) / e;
        cells += 1;
    }
    (stat, cells.saturating_sub(1))
}

// Upper 0.1% points of the chi-square distribution.
const CHI2_999: [f64; 10] = [
    10.83, 13.82, 16.27, 18.47, 20.52, 22.46, 24.32, 26.12, 27.88, 29.59,
];

fn shares(h: &BTreeMap<u32, f64>) -> BTreeMap<u32, f64> {
    let n: f64 = h.values().sum();
    h.iter().map(|(&k, &v)| (k, v / n)).collect()
}

#[test]
fn length_distribution_matches_reference_sampler() {
    for alpha in [0.0, 2.4] {
        let obs = planar_length_histogram(alpha, 300);
        let reference = reference_histogram(alpha, 96, 1200);
        let (stat, df) = chi_square(&obs, &shares(&reference));
        assert!(
            stat < CHI2_999[df - 1],
            "alpha {alpha}: chi2 {stat} with {df} dof"
        );
    }
}

#[test]
fn uniform_alpha_follows_pair_multiset() {
    let pairs = same_die_pairs(GridDims::default());
    let mut per_class = BTreeMap::new();
    for &(_, _, d2) in &pairs {
        *per_class.entry(d2).or_insert(0.0) += 1.0 / pairs.len() as f64;
    }
    let obs = planar_length_histogram(0.0, 300);
    let (stat, df) = chi_square(&obs, &per_class);
    assert!(stat < CHI2_999[df - 1], "chi2 {stat} with {df} dof");
}

#[test]
fn large_alpha_keeps_links_local() {
    let mut local = 0usize;
    let mut total = 0usize;
    for seed in 0..100 {
        let t = build_3d_sw(&SwGenConfig::default().with_alpha(10.0).with_seed(seed)).unwrap();
        for l in t.links().iter().filter(|l| l.kind == LinkKind::Planar) {
            total += 1;
            local += usize::from(squared_len(&t, l.a, l.b) <= 2);
        }
    }
    assert!(local as f64 / total as f64 >= 0.95, "{local}/{total}");
}

#[test]
fn larger_alpha_shortens_mean_length() {
    let mean = |a: f64| {
        let h = planar_length_histogram(a, 40);
        let n: f64 = h.values().sum();
        h.iter().map(|(&k, &v)| (k as f64).sqrt() * v).sum::<f64>() / n
    };
    let (m0, m2, m5) = (mean(0.0), mean(2.4), mean(5.0));
    assert!(m0 > m2 && m2 > m5, "{m0} {m2} {m5}");
}

fn assert_budget(t: &Topology) {
    assert_eq!(t.links().len(), 144);
    assert_eq!(t.count_kind(LinkKind::Vertical), 48);
    assert!(t.max_degree() <= 7);
    assert!(t.is_connected(&[]));
    assert_eq!(t.average_degree(), 4.5);
}

#[test]
fn every_family_meets_the_link_budget() {
    let mesh = build_mesh(GridDims::default(), Geometry::default());
    assert_budget(&mesh);
    for seed in 0..100 {
        assert_budget(&build_3d_sw(&SwGenConfig::default().with_seed(seed)).unwrap());
        assert_budget(&build_mrrm(GridDims::default(), Geometry::default(), seed).unwrap());
        assert_budget(&build_rrrr(GridDims::default(), Geometry::default(), seed).unwrap());
    }
}

fn die_planar_pairs(t: &Topology, z: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<_> = t
        .links()
        .iter()
        .filter(|l| l.kind == LinkKind::Planar && t.position(l.a).z == z)
        .map(|l| (l.a.min(l.b), l.a.max(l.b)))
        .collect();
    out.sort_unstable();
    out
}

#[test]
fn partially_random_die_layout() {
    let dims = GridDims::default();
    let mesh_die = |z| {
        let mut m: Vec<_> = mesh_die_pairs(dims, z)
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        m.sort_unstable();
        m
    };
    let mut inner_differs = false;
    for seed in 0..10 {
        let mrrm = build_mrrm(dims, Geometry::default(), seed).unwrap();
        assert_eq!(die_planar_pairs(&mrrm, 0), mesh_die(0));
        assert_eq!(die_planar_pairs(&mrrm, 3), mesh_die(3));
        inner_differs |= die_planar_pairs(&mrrm, 1) != mesh_die(1);
        let rrrr = build_rrrr(dims, Geometry::default(), seed).unwrap();
        for z in 0..4 {
            assert_eq!(die_planar_pairs(&rrrr, z).len(), 24);
        }
    }
    assert!(inner_differs);
}

#[test]
fn small_mesh_counts() {
    assert_eq!(
        build_mesh(GridDims::new(2, 2, 2), Geometry::default())
            .links()
            .len(),
        12
    );
    let m = build_mesh(GridDims::default(), Geometry::default());
    assert!((m.avg_hop_count(None) - 3.81).abs() < 0.005);
}

#[test]
fn hot_pair_lands_on_nearest_slots() {
    let dims = GridDims::default();
    let n = dims.nodes();
    let mut f = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                f[i * n + j] = 0.01;
            }
        }
    }
    f[5 * n + 40] = 1000.0;
    let traffic = TrafficProfile::new(n, f).unwrap();
    let placement = place_cores(&traffic, dims, Geometry::default(), 3);
    let mut seen = placement.core_to_router.clone();
    seen.sort_unstable();
    assert_eq!(seen, (0..n).collect::<Vec<_>>());
    let skeleton = Topology::empty(dims, Geometry::default());
    let (a, b) = (placement.core_to_router[5], placement.core_to_router[40]);
    assert_eq!(
        skeleton.pair_distance(a, b),
        Geometry::default().die_pitch_mm
    );
    let routed = placement.apply(&traffic);
    assert_eq!(routed.get(a, b), 1000.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampling_is_bit_reproducible(seed in any::<u64>(), alpha in 0.0f64..6.0) {
        let c = SwGenConfig::default().with_seed(seed).with_alpha(alpha);
        prop_assert_eq!(sample_sw_planar_links(&c).unwrap(), sample_sw_planar_links(&c).unwrap());
    }

    #[test]
    fn generated_sw_meets_budget(seed in any::<u64>(), alpha in 0.0f64..6.0) {
        let t = build_3d_sw(&SwGenConfig::default().with_seed(seed).with_alpha(alpha)).unwrap();
        prop_assert_eq!(t.links().len(), 144);
        prop_assert!(t.max_degree() <= 7);
        prop_assert!(t.is_connected(&[]));
        prop_assert!(t.links().iter().all(|l| l.kind == LinkKind::Vertical || t.position(l.a).z == t.position(l.b).z));
    }
}
