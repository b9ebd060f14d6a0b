//! Candidate master hubs of a tree under the eight selection strategies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::stats::average_ranks;
use crate::topology::{NodeId, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HubStrategy {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "leafonly")]
    LeafOnly,
    #[serde(rename = "leafnonleaf")]
    LeafNonLeaf,
    #[serde(rename = "allnodes")]
    AllNodes,
    #[serde(rename = "maxd")]
    MaxD,
    #[serde(rename = "mine")]
    MinE,
    #[serde(rename = "70e30d")]
    W70E30D,
    #[serde(rename = "30e70d")]
    W30E70D,
}

impl HubStrategy {
    pub const ALL: [HubStrategy; 8] = [
        HubStrategy::Baseline,
        HubStrategy::LeafOnly,
        HubStrategy::LeafNonLeaf,
        HubStrategy::AllNodes,
        HubStrategy::MaxD,
        HubStrategy::MinE,
        HubStrategy::W70E30D,
        HubStrategy::W30E70D,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HubStrategy::Baseline => "baseline",
            HubStrategy::LeafOnly => "leafonly",
            HubStrategy::LeafNonLeaf => "leafnonleaf",
            HubStrategy::AllNodes => "allnodes",
            HubStrategy::MaxD => "maxd",
            HubStrategy::MinE => "mine",
            HubStrategy::W70E30D => "70e30d",
            HubStrategy::W30E70D => "30e70d",
        }
    }
}

impl fmt::Display for HubStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HubStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HubStrategy::ALL
            .into_iter()
            .find(|h| h.as_str() == s)
            .ok_or_else(|| format!("unknown hub strategy '{s}' (baseline|leafonly|leafnonleaf|allnodes|maxd|mine|70e30d|30e70d)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeScore {
    pub node: NodeId,
    pub degree: usize,
    pub eccentricity: usize,
    /// Rank 1 is the highest degree.
    pub deg_rank: f64,
    /// Rank 1 is the smallest eccentricity.
    pub ecc_rank: f64,
    pub composite: f64,
}

/// Scores of `nodes` ranked among themselves; composite is the rank sum.
pub fn score_nodes(tree: &Tree, nodes: &[NodeId]) -> Vec<NodeScore> {
    let deg = tree.degrees();
    let ecc = tree.eccentricities();
    let neg_deg: Vec<f64> = nodes.iter().map(|&v| -(deg[v] as f64)).collect();
    let eccs: Vec<f64> = nodes.iter().map(|&v| ecc[v] as f64).collect();
    let dr = average_ranks(&neg_deg);
    let er = average_ranks(&eccs);
    nodes
        .iter()
        .enumerate()
        .map(|(i, &v)| NodeScore {
            node: v,
            degree: deg[v],
            eccentricity: ecc[v],
            deg_rank: dr[i],
            ecc_rank: er[i],
            composite: dr[i] + er[i],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HubCandidates {
    /// Best first: lowest composite rank over all nodes, then NodeId.
    pub nodes: Vec<NodeId>,
    /// Set when every node is a leaf and the strategy fell back to all nodes.
    pub fallback: bool,
}

impl HubCandidates {
    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.contains(&v)
    }

    pub fn first(&self) -> NodeId {
        self.nodes[0]
    }
}

fn order_best_first(tree: &Tree, mut set: Vec<NodeId>) -> Vec<NodeId> {
    let all: Vec<NodeId> = (0..tree.node_count()).collect();
    let scores = score_nodes(tree, &all);
    set.sort_by(|&a, &b| scores[a].composite.total_cmp(&scores[b].composite).then(a.cmp(&b)));
    set.dedup();
    set
}

fn argmin_set(values: &[(NodeId, f64)]) -> Vec<NodeId> {
    let best = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    values.iter().filter(|v| v.1 <= best + 1e-12).map(|v| v.0).collect()
}

fn baseline_set(tree: &Tree, inner: &[NodeId]) -> Vec<NodeId> {
    let scores = score_nodes(tree, inner);
    let composites: Vec<f64> = scores.iter().map(|s| s.composite).collect();
    let med = crate::stats::median(&composites).expect("nonempty");
    let mut kept: Vec<&NodeScore> = scores.iter().filter(|s| s.composite <= med).collect();
    kept.sort_by(|a, b| a.composite.total_cmp(&b.composite).then(a.node.cmp(&b.node)));
    kept.iter().map(|s| s.node).collect()
}

fn weighted_set(tree: &Tree, alpha_ecc: f64) -> Vec<NodeId> {
    let all: Vec<NodeId> = (0..tree.node_count()).collect();
    let scores = score_nodes(tree, &all);
    let m = all.len() as f64;
    let norm = |r: f64| if m > 1.0 { (r - 1.0) / (m - 1.0) } else { 0.0 };
    let vals: Vec<(NodeId, f64)> = scores
        .iter()
        .map(|s| (s.node, alpha_ecc * norm(s.ecc_rank) + (1.0 - alpha_ecc) * norm(s.deg_rank)))
        .collect();
    argmin_set(&vals)
}

/// Candidate hubs of `tree` under `strategy`; never empty for `n >= 1`.
pub fn candidate_hubs(tree: &Tree, strategy: HubStrategy) -> HubCandidates {
    let n = tree.node_count();
    let all: Vec<NodeId> = (0..n).collect();
    let leaves = tree.leaves();
    let inner: Vec<NodeId> = all.iter().copied().filter(|v| !leaves.contains(v)).collect();
    let needs_inner = matches!(strategy, HubStrategy::Baseline | HubStrategy::LeafNonLeaf);
    if needs_inner && inner.is_empty() {
        return HubCandidates {
            nodes: order_best_first(tree, all),
            fallback: true,
        };
    }
    let nodes = match strategy {
        HubStrategy::Baseline => baseline_set(tree, &inner),
        HubStrategy::LeafOnly => order_best_first(tree, leaves),
        HubStrategy::LeafNonLeaf => {
            let mut v = baseline_set(tree, &inner);
            v.extend(order_best_first(tree, leaves));
            v
        }
        HubStrategy::AllNodes => order_best_first(tree, all),
        HubStrategy::MaxD => {
            let deg = tree.degrees();
            let vals: Vec<(NodeId, f64)> = all.iter().map(|&v| (v, -(deg[v] as f64))).collect();
            order_best_first(tree, argmin_set(&vals))
        }
        HubStrategy::MinE => {
            let ecc = tree.eccentricities();
            let vals: Vec<(NodeId, f64)> = all.iter().map(|&v| (v, ecc[v] as f64)).collect();
            order_best_first(tree, argmin_set(&vals))
        }
        HubStrategy::W70E30D => order_best_first(tree, weighted_set(tree, 0.7)),
        HubStrategy::W30E70D => order_best_first(tree, weighted_set(tree, 0.3)),
    };
    HubCandidates { nodes, fallback: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path5() -> Tree {
        Tree::new(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap()
    }

    fn star(n: usize) -> Tree {
        Tree::new(n, (1..n).map(|v| (0, v))).unwrap()
    }

    #[test]
    fn star_sets() {
        let t = star(6);
        assert_eq!(candidate_hubs(&t, HubStrategy::LeafOnly).nodes, vec![1, 2, 3, 4, 5]);
        assert_eq!(candidate_hubs(&t, HubStrategy::AllNodes).nodes, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(candidate_hubs(&t, HubStrategy::MaxD).nodes, vec![0]);
        assert_eq!(candidate_hubs(&t, HubStrategy::Baseline).nodes, vec![0]);
    }

    #[test]
    fn path_center() {
        let t = path5();
        assert_eq!(candidate_hubs(&t, HubStrategy::MinE).nodes, vec![2]);
        assert_eq!(candidate_hubs(&t, HubStrategy::Baseline).nodes, vec![2, 1, 3]);
        assert_eq!(candidate_hubs(&t, HubStrategy::W70E30D).nodes, vec![2]);
        let ln = candidate_hubs(&t, HubStrategy::LeafNonLeaf).nodes;
        assert_eq!(ln, vec![2, 1, 3, 0, 4]);
    }

    #[test]
    fn leaf_only_and_baseline_disjoint() {
        let t = Tree::new(7, [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5), (4, 6)]).unwrap();
        let b = candidate_hubs(&t, HubStrategy::Baseline).nodes;
        let l = candidate_hubs(&t, HubStrategy::LeafOnly).nodes;
        assert!(b.iter().all(|v| !l.contains(v)));
    }

    #[test]
    fn two_node_tree_falls_back() {
        let t = Tree::new(2, [(0, 1)]).unwrap();
        let c = candidate_hubs(&t, HubStrategy::Baseline);
        assert!(c.fallback);
        assert_eq!(c.nodes, vec![0, 1]);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in HubStrategy::ALL {
            assert_eq!(s.as_str().parse::<HubStrategy>().unwrap(), s);
        }
        assert!("center".parse::<HubStrategy>().is_err());
    }
}
