mod common;

use rand::Rng;
use tacnet::geometry::Geometry;
use tacnet::instance::{Instance, Point};
use tacnet::radio::{derive_radio, partition_hub_children, AntennaModel, Channel, ChannelPlan};
use tacnet::topology::{orient, StructureLimits, Tree};

/// Hub at the origin-ish centre, one child per `(azimuth_deg, range_m)`.
fn polar(children: &[(f64, f64)]) -> Instance {
    let mut coords = vec![Point { x_m: 5000.0, y_m: 5000.0 }];
    for &(az, r) in children {
        let t = az.to_radians();
        coords.push(Point {
            x_m: 5000.0 + r * t.cos(),
            y_m: 5000.0 + r * t.sin(),
        });
    }
    Instance::from_coords("polar", 0, 10.0, coords).unwrap()
}

fn azimuth(inst: &Instance, v: usize) -> f64 {
    let (a, b) = (inst.coords[0], inst.coords[v]);
    (b.y_m - a.y_m).atan2(b.x_m - a.x_m).to_degrees().rem_euclid(360.0)
}

/// Best total cut gap over every split of the angular order into two
/// non-empty arcs within the limit, found by trying all subsets.
fn best_cut_gap(az: &[f64], limit: usize) -> Option<f64> {
    let k = az.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| az[a].total_cmp(&az[b]).then(a.cmp(&b)));
    let mut best: Option<f64> = None;
    for mask in 1u32..(1 << k) - 1 {
        let inside = |i: usize| mask >> order[i % k] & 1 == 1;
        let boundaries: Vec<usize> = (0..k).filter(|&i| inside(i) != inside(i + 1)).collect();
        if boundaries.len() != 2 {
            continue;
        }
        let a = mask.count_ones() as usize;
        if a > limit || k - a > limit {
            continue;
        }
        let gap = |i: usize| (az[order[(i + 1) % k]] - az[order[i]]).rem_euclid(360.0);
        let total: f64 = boundaries.iter().map(|&i| gap(i)).sum();
        best = Some(best.map_or(total, |b: f64| b.max(total)));
    }
    best
}

fn contiguous(group: &[usize], az: &[f64]) -> bool {
    let k = az.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| az[a].total_cmp(&az[b]).then(a.cmp(&b)));
    let inside = |i: usize| group.contains(&(order[i % k] + 1));
    (0..k).filter(|&i| inside(i) != inside(i + 1)).count() <= 2
}

fn check_partition(children: &[(f64, f64)], limit: usize) {
    let inst = polar(children);
    let k = children.len();
    let dt = orient(&Tree::new(k + 1, (1..=k).map(|v| (0, v))).unwrap(), 0).unwrap();
    let g = Geometry::<f64>::new(&inst);
    let p = partition_hub_children(&dt, &g, &StructureLimits::new(limit)).unwrap();
    let az: Vec<f64> = (1..=k).map(|v| azimuth(&inst, v)).collect();
    let [g0, g1] = &p.groups;
    assert_eq!(g0.len() + g1.len(), k);
    assert!(g0.len() <= limit && g1.len() <= limit);
    assert!(!g0.is_empty() && !g1.is_empty());
    assert!(g0.contains(&1), "group 0 holds the smallest id");
    assert!(contiguous(g0, &az) && contiguous(g1, &az));
    // Gap sum of the chosen split.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| az[a].total_cmp(&az[b]).then(a.cmp(&b)));
    let chosen: f64 = (0..k)
        .filter(|&i| g0.contains(&(order[i] + 1)) != g0.contains(&(order[(i + 1) % k] + 1)))
        .map(|i| (az[order[(i + 1) % k]] - az[order[i]]).rem_euclid(360.0))
        .sum();
    let oracle = best_cut_gap(&az, limit).unwrap();
    assert!((chosen - oracle).abs() < 1e-6, "chosen {chosen} vs oracle {oracle} for {children:?}");
}

#[test]
fn twelve_uniform_children() {
    let kids: Vec<(f64, f64)> = (0..12).map(|i| (i as f64 * 30.0 + 1.0, 1000.0)).collect();
    check_partition(&kids, 10);
    check_partition(&kids, 6);
}

#[test]
fn random_fans_match_exhaustive_split() {
    let mut r = common::rng(21);
    for _ in 0..150 {
        let k: usize = r.random_range(3..=14);
        let limit = r.random_range(k.div_ceil(2)..=k);
        let mut kids = Vec::new();
        while kids.len() < k {
            let az: f64 = r.random_range(0.0..360.0);
            let range: f64 = r.random_range(300.0..4000.0);
            kids.push((az, range));
        }
        check_partition(&kids, limit);
    }
}

#[test]
fn three_children_split_two_one() {
    let inst = polar(&[(0.0, 1000.0), (20.0, 1000.0), (200.0, 1000.0)]);
    let dt = orient(&Tree::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap(), 0).unwrap();
    let p = partition_hub_children(&dt, &Geometry::<f64>::new(&inst), &StructureLimits::default()).unwrap();
    assert_eq!(p.groups, [vec![1, 2], vec![3]]);
}

#[test]
fn channels_and_frequencies_follow_the_plan() {
    let mut r = common::rng(22);
    for _ in 0..50 {
        let n = r.random_range(4..=15);
        let inst = tacnet::instance::generate_instance(n, r.random(), 10.0).unwrap();
        let tree = Tree::new(n, common::random_tree(n, &mut r)).unwrap();
        let dt = orient(&tree, 0).unwrap();
        let limits = StructureLimits::new(n);
        let plan = ChannelPlan::default();
        let g = Geometry::<f64>::new(&inst);
        let radio = derive_radio(&g, &dt, &limits, &AntennaModel::default(), &plan).unwrap();
        for (e, edge) in dt.edges().iter().enumerate() {
            let ch = radio.edge_channel[e];
            let f = radio.edge_freq_mhz[e];
            match ch {
                Channel::Ch0 => assert!(f == 4500.0 || f == 5000.0),
                Channel::Ch1 => assert!(f == 2000.0 || f == 2400.0),
            }
            if edge.from == dt.root {
                let grp = radio.hub_partition.group_of(edge.to).unwrap();
                assert_eq!(ch.index(), grp);
            } else {
                let inbound = radio.edge_channel[dt.edge_index(edge.from).unwrap()];
                assert_eq!(ch, inbound.other());
            }
        }
    }
}

#[test]
fn eight_sectors_switch_to_omni() {
    // Relay 1 sits 3 km east of the hub and serves children in distinct
    // 15-degree sectors around itself.
    for (count, omni) in [(7, false), (8, true)] {
        let mut coords = vec![Point { x_m: 2000.0, y_m: 5000.0 }, Point { x_m: 5000.0, y_m: 5000.0 }];
        for i in 0..count {
            let t = (i as f64 * 20.0 + 5.0).to_radians();
            coords.push(Point {
                x_m: 5000.0 + 1000.0 * t.cos(),
                y_m: 5000.0 + 1000.0 * t.sin(),
            });
        }
        let n = coords.len();
        let inst = Instance::from_coords("relay", 0, 10.0, coords).unwrap();
        let mut edges = vec![(0, 1)];
        edges.extend((2..n).map(|v| (1, v)));
        let dt = orient(&Tree::new(n, edges).unwrap(), 0).unwrap();
        let g = Geometry::<f64>::new(&inst);
        let radio = derive_radio(&g, &dt, &StructureLimits::default(), &AntennaModel::default(), &ChannelPlan::default()).unwrap();
        let down = radio.edge_channel[dt.edge_index(2).unwrap()].index();
        let st = &radio.antennas[1][down];
        assert_eq!(st.sectors.len(), count);
        assert_eq!(st.omni, omni);
        assert!(!radio.antennas[1][1 - down].omni);
        let directional = derive_radio(&g, &dt, &StructureLimits::default(), &AntennaModel::directional(24), &ChannelPlan::default()).unwrap();
        assert!(!directional.antennas[1][down].omni);
    }
}
