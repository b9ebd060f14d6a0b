mod common;

use std::collections::BTreeSet;

use rand::Rng;
use tacnet::design::{DesignConfig, Evaluator};
use tacnet::hubselect::HubStrategy;
use tacnet::instance::generate_instance;
use tacnet::search::{initial_design, neighbors, tabu_search, Move, SearchConfig, Start};
use tacnet::topology::{orient, validate, StructureLimits, Tree};

fn cfg_all_nodes(restarts: usize, seed: u64) -> SearchConfig {
    SearchConfig {
        hub_strategy: HubStrategy::AllNodes,
        restarts,
        seed,
        ..SearchConfig::default()
    }
}

#[test]
fn tiny_instances_reach_the_enumerated_optimum() {
    assert_eq!(common::all_trees(4).len(), 16);
    assert_eq!(common::all_trees(5).len(), 125);
    for n in [4, 5] {
        for seed in 0..10u64 {
            let inst = generate_instance(n, 500 + seed, 10.0).unwrap();
            let ev = Evaluator::<f64>::new(&inst, DesignConfig::default()).unwrap();
            let opt = common::exhaustive_optimum(&ev, n);
            let out = tabu_search::<f64>(&inst, &cfg_all_nodes(3, seed)).unwrap();
            assert!((out.trace.best_objective - opt).abs() < 1e-9, "n={n} seed={seed}: {} vs {opt}", out.trace.best_objective);
        }
    }
}

/// Every (removed edge, added pair) that yields another spanning tree.
fn all_exchanges(tree: &Tree) -> BTreeSet<((usize, usize), (usize, usize))> {
    let n = tree.node_count();
    let mut out = BTreeSet::new();
    for &rm in tree.edges() {
        for a in 0..n {
            for b in a + 1..n {
                if (a, b) == rm || tree.contains_edge(a, b) {
                    continue;
                }
                let mut edges: Vec<(usize, usize)> = tree.edges().iter().copied().filter(|&e| e != rm).collect();
                edges.push((a, b));
                if Tree::new(n, edges).is_ok() {
                    out.insert((rm, (a, b)));
                }
            }
        }
    }
    out
}

#[test]
fn neighbourhood_is_complete_when_unrestricted() {
    let mut r = common::rng(41);
    for _ in 0..30 {
        let n = r.random_range(3..=6);
        let inst = generate_instance(n, r.random(), 10.0).unwrap();
        let ev = Evaluator::<f64>::new(&inst, DesignConfig::default()).unwrap();
        let tree = Tree::new(n, common::random_tree(n, &mut r)).unwrap();
        let hub = r.random_range(0..n);
        let cfg = SearchConfig {
            replacement_candidates: 100,
            hub_strategy: HubStrategy::AllNodes,
            ..SearchConfig::default()
        };
        let moves = neighbors(&ev, &tree, hub, &cfg);
        let exchanges: BTreeSet<_> = moves
            .iter()
            .filter_map(|c| match c.mv {
                Move::Exchange { remove, add } => Some((remove, add)),
                _ => None,
            })
            .collect();
        assert_eq!(exchanges, all_exchanges(&tree));
        let hubs: BTreeSet<usize> = moves
            .iter()
            .filter_map(|c| match c.mv {
                Move::Hub { to, .. } => Some(to),
                _ => None,
            })
            .collect();
        assert_eq!(hubs, (0..n).filter(|&v| v != hub).collect());
        for c in &moves {
            assert!(c.tree.check().is_empty());
        }
    }
}

#[test]
fn three_node_path_neighbourhood() {
    let inst = generate_instance(3, 9, 10.0).unwrap();
    let ev = Evaluator::<f64>::new(&inst, DesignConfig::default()).unwrap();
    let tree = Tree::new(3, [(0, 1), (1, 2)]).unwrap();
    let cfg = SearchConfig {
        hub_strategy: HubStrategy::AllNodes,
        ..SearchConfig::default()
    };
    let moves: BTreeSet<Move> = neighbors(&ev, &tree, 1, &cfg).into_iter().map(|c| c.mv).collect();
    let expected: BTreeSet<Move> = [
        Move::Exchange { remove: (0, 1), add: (0, 2) },
        Move::Exchange { remove: (1, 2), add: (0, 2) },
        Move::Hub { from: 1, to: 0 },
        Move::Hub { from: 1, to: 2 },
    ]
    .into_iter()
    .collect();
    assert_eq!(moves, expected);
}

#[test]
fn runs_are_reproducible_and_traces_consistent() {
    let inst = generate_instance(12, 77, 10.0).unwrap();
    let cfg = SearchConfig {
        max_iterations: 300,
        restarts: 2,
        seed: 5,
        ..SearchConfig::default()
    };
    let a = tabu_search::<f64>(&inst, &cfg).unwrap();
    let b = tabu_search::<f64>(&inst, &cfg).unwrap();
    assert!(a.trace.same_run(&b.trace));
    assert_eq!(a.best.dt.tree, b.best.dt.tree);
    let t = &a.trace;
    assert!(t.best_so_far.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*t.best_so_far.last().unwrap(), t.best_objective);
    assert!(t.iteration_found <= t.total_iterations);
    assert!((t.time_per_iteration_ms - t.total_time_ms / t.total_iterations as f64).abs() < 1e-9);
    assert_eq!(t.starts, 3);
    assert_eq!(a.best.total(), t.best_objective);
    for (i, ev) in a.scenario_best.iter().enumerate() {
        assert_eq!(ev.objective.scenario_values[i], t.scenario_best[i].value);
        assert!(ev.objective.scenario_values[i] >= a.best.objective.scenario_values[i]);
    }
}

#[test]
fn designs_respect_tight_limits() {
    let inst = generate_instance(15, 3, 10.0).unwrap();
    for pmp in [1, 2, 3] {
        let cfg = SearchConfig {
            max_iterations: 150,
            design: DesignConfig {
                limits: StructureLimits::new(pmp),
                ..DesignConfig::default()
            },
            ..SearchConfig::default()
        };
        let ev = Evaluator::<f64>::new(&inst, cfg.design.clone()).unwrap();
        for start in [Start::Mst, Start::HubStar, Start::Perturbed(4)] {
            let (tree, hub) = initial_design(&ev, &cfg, start).unwrap();
            assert!(validate(&orient(&tree, hub).unwrap(), &cfg.design.limits).is_empty());
        }
        let out = tabu_search::<f64>(&inst, &cfg).unwrap();
        assert!(validate(&out.best.dt, &cfg.design.limits).is_empty(), "pmp {pmp}");
    }
}
