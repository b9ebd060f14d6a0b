mod common;

use rand::Rng;
use tacnet::topology::{orient, scenario_loads, subtree_sizes, validate, Rule, Scenario, StructureLimits, Tree};

#[test]
fn subtree_sizes_match_reachability() {
    let mut r = common::rng(11);
    for _ in 0..100 {
        let n = r.random_range(2..=8);
        let edges = common::random_tree(n, &mut r);
        let root = r.random_range(0..n);
        let dt = orient(&Tree::new(n, edges.clone()).unwrap(), root).unwrap();
        let d = subtree_sizes(&dt);
        let adj = common::adjacency(n, &edges);
        for v in 0..n {
            // v's subtree: nodes whose path to the root passes through v.
            let count = (0..n).filter(|&w| common::path(&adj, w, root).contains(&v)).count();
            assert_eq!(d.of(v), count);
        }
    }
}

#[test]
fn loads_match_path_enumeration() {
    let mut r = common::rng(12);
    for _ in 0..200 {
        let n = r.random_range(2..=8);
        let edges = common::random_tree(n, &mut r);
        let root = r.random_range(0..n);
        let dt = orient(&Tree::new(n, edges.clone()).unwrap(), root).unwrap();
        let adj = common::adjacency(n, &edges);
        let de = dt.edges();
        let mut b = vec![0u64; de.len()];
        let mut c = vec![0u64; de.len()];
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                let p = common::path(&adj, s, t);
                for w in p.windows(2) {
                    let e = de
                        .iter()
                        .position(|e| (e.from, e.to) == (w[0], w[1]) || (e.from, e.to) == (w[1], w[0]))
                        .unwrap();
                    c[e] += 1;
                    if s == root {
                        b[e] += 1;
                    }
                }
            }
        }
        assert_eq!(scenario_loads(&dt, Scenario::A).loads, vec![1; n - 1]);
        assert_eq!(scenario_loads(&dt, Scenario::B).loads, b);
        assert_eq!(scenario_loads(&dt, Scenario::C).loads, c);
        let root_sum: u64 = de
            .iter()
            .zip(&scenario_loads(&dt, Scenario::B).loads)
            .filter(|(e, _)| e.from == root)
            .map(|(_, l)| l)
            .sum();
        assert_eq!(root_sum, (n - 1) as u64);
    }
}

#[test]
fn path_of_three_scenario_c() {
    let dt = orient(&Tree::new(3, [(0, 1), (1, 2)]).unwrap(), 0).unwrap();
    assert_eq!(scenario_loads(&dt, Scenario::C).loads, vec![4, 4]);
}

#[test]
fn degree_limits() {
    let limits = StructureLimits::new(10);
    // Non-root relay with eleven successors.
    let mut edges = vec![(0, 1)];
    edges.extend((2..13).map(|v| (1, v)));
    let dt = orient(&Tree::new(13, edges).unwrap(), 0).unwrap();
    let v = validate(&dt, &limits);
    assert_eq!(v.len(), 1);
    assert_eq!((v[0].rule, v[0].node, v[0].observed), (Rule::PmpLimit, Some(1), 11));
    // Hub with twenty successors is fine, twenty-one is not.
    let star = |k: usize| orient(&Tree::new(k + 1, (1..=k).map(|v| (0, v))).unwrap(), 0).unwrap();
    assert!(validate(&star(20), &limits).is_empty());
    assert_eq!(validate(&star(21), &limits)[0].rule, Rule::HubDegree);
}

#[test]
fn larger_limits_never_invalidate() {
    let mut r = common::rng(13);
    for _ in 0..200 {
        let n = r.random_range(3..=14);
        let dt = orient(&Tree::new(n, common::random_tree(n, &mut r)).unwrap(), 0).unwrap();
        let mut was_valid = false;
        for l in 1..=n {
            let ok = validate(&dt, &StructureLimits::new(l)).is_empty();
            assert!(ok || !was_valid, "limit {l} broke a valid design");
            was_valid = ok;
        }
    }
}
