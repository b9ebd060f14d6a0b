//! Spanning trees, orientation from the master hub, structural limits and
//! per-edge traffic loads.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("root {root} is not a node of a {n}-node tree")]
    InvalidRoot { root: NodeId, n: usize },
    #[error("edge set is not a spanning tree: {0:?}")]
    NotATree(Vec<Violation>),
}

/// Undirected tree over nodes `0..n`. Edges are stored as `(min, max)`, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
}

fn normalize(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Tree {
    /// Checked constructor: fails unless the edges form a spanning tree.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self, TopologyError> {
        let tree = Self::from_edges_unchecked(n, edges);
        let problems = tree.check();
        if problems.is_empty() {
            Ok(tree)
        } else {
            Err(TopologyError::NotATree(problems))
        }
    }

    /// Keeps whatever edges are given; [`Tree::check`] reports what is wrong.
    pub fn from_edges_unchecked(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let mut edges: Vec<_> = edges.into_iter().map(|(a, b)| normalize(a, b)).collect();
        edges.sort_unstable();
        Tree { n, edges }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn contains_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edges.binary_search(&normalize(a, b)).is_ok()
    }

    pub fn adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            if a < self.n && b < self.n {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(a, b) in &self.edges {
            if a < self.n && b < self.n {
                deg[a] += 1;
                deg[b] += 1;
            }
        }
        deg
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.degrees()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 1)
            .map(|(v, _)| v)
            .collect()
    }

    /// Hop distances from `src` to every node (`usize::MAX` if unreachable).
    pub fn hop_distances(&self, src: NodeId) -> Vec<usize> {
        let adj = self.adjacency();
        bfs_distances(&adj, src)
    }

    /// Maximum hop distance from each node to any other node.
    pub fn eccentricities(&self) -> Vec<usize> {
        let adj = self.adjacency();
        (0..self.n)
            .map(|v| bfs_distances(&adj, v).into_iter().max().unwrap_or(0))
            .collect()
    }

    /// Replaces `remove` by `add`. No validity check.
    pub fn exchanged(&self, remove: (NodeId, NodeId), add: (NodeId, NodeId)) -> Tree {
        let remove = normalize(remove.0, remove.1);
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&e| e != remove)
            .chain(std::iter::once(add));
        Tree::from_edges_unchecked(self.n, edges)
    }

    /// Nodes on the side of `(a, b)` containing `b` once the edge is cut.
    pub fn side_of(&self, a: NodeId, b: NodeId) -> Vec<bool> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        seen[b] = true;
        let mut stack = vec![b];
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] && !(u == b && w == a) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Tree invariants: node range, no self loops or duplicates, `n - 1`
    /// edges, connected, acyclic.
    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            if b >= self.n {
                out.push(Violation::new(Some(b), Rule::NodeOutOfRange, b, self.n.saturating_sub(1)));
            }
            if a == b {
                out.push(Violation::new(Some(a), Rule::SelfLoop, 1, 0));
            }
        }
        for w in self.edges.windows(2) {
            if w[0] == w[1] {
                out.push(Violation::new(Some(w[0].0), Rule::DuplicateEdge, 2, 1));
            }
        }
        let expected = self.n.saturating_sub(1);
        if self.edges.len() != expected {
            out.push(Violation::new(None, Rule::EdgeCount, self.edges.len(), expected));
        }
        // Union-find over in-range edges detects cycles and components at once.
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut cycles = 0;
        for &(a, b) in &self.edges {
            if a >= self.n || b >= self.n || a == b {
                continue;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                cycles += 1;
            } else {
                parent[ra] = rb;
            }
        }
        if cycles > 0 {
            out.push(Violation::new(None, Rule::Cycle, cycles, 0));
        }
        let components = (0..self.n).filter(|&v| find(&mut parent, v) == v).count();
        if components > 1 {
            out.push(Violation::new(None, Rule::Disconnected, components, 1));
        }
        out
    }
}

fn bfs_distances(adj: &[Vec<NodeId>], src: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// A tree edge oriented away from the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub from: NodeId,
    pub to: NodeId,
}

/// Tree rooted at the master hub.
///
/// Per-edge data throughout the crate is stored in vectors aligned with
/// [`DirectedTree::edges`], which lists the edges by ascending child id.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedTree {
    pub tree: Tree,
    pub root: NodeId,
    pub parent: Vec<Option<NodeId>>,
    /// Successors of each node, ascending NodeId.
    pub children: Vec<Vec<NodeId>>,
    /// Breadth-first order from the root (reachable nodes only).
    pub order: Vec<NodeId>,
    edges: Vec<DirectedEdge>,
    edge_of_child: Vec<Option<usize>>,
}

impl DirectedTree {
    pub fn node_count(&self) -> usize {
        self.tree.node_count()
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    /// Index of the edge entering `child`.
    pub fn edge_index(&self, child: NodeId) -> Option<usize> {
        self.edge_of_child.get(child).copied().flatten()
    }

    pub fn depth(&self) -> Vec<usize> {
        let mut depth = vec![0; self.node_count()];
        for &v in &self.order {
            if let Some(p) = self.parent[v] {
                depth[v] = depth[p] + 1;
            }
        }
        depth
    }
}

/// Orients `tree` away from `root` by breadth-first search.
///
/// Edges that would revisit a node (only possible for a cyclic edge set)
/// are ignored here and reported by [`validate`].
pub fn orient(tree: &Tree, root: NodeId) -> Result<DirectedTree, TopologyError> {
    let n = tree.node_count();
    if root >= n {
        return Err(TopologyError::InvalidRoot { root, n });
    }
    let adj = tree.adjacency();
    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(u);
                children[u].push(w);
                queue.push_back(w);
            }
        }
    }
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut edge_of_child = vec![None; n];
    for v in 0..n {
        if let Some(p) = parent[v] {
            edge_of_child[v] = Some(edges.len());
            edges.push(DirectedEdge { from: p, to: v });
        }
    }
    Ok(DirectedTree {
        tree: tree.clone(),
        root,
        parent,
        children,
        order,
        edges,
        edge_of_child,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureLimits {
    /// Maximum successors served on one channel.
    pub pmp_limit: usize,
}

impl StructureLimits {
    pub const HUB_CHANNEL_GROUPS: usize = 2;

    pub fn new(pmp_limit: usize) -> Self {
        assert!(pmp_limit >= 1, "pmp_limit must be at least 1");
        Self { pmp_limit }
    }

    pub fn hub_limit(&self) -> usize {
        Self::HUB_CHANNEL_GROUPS * self.pmp_limit
    }
}

impl Default for StructureLimits {
    fn default() -> Self {
        Self { pmp_limit: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    NodeOutOfRange,
    SelfLoop,
    DuplicateEdge,
    EdgeCount,
    Cycle,
    Disconnected,
    Unreachable,
    PmpLimit,
    HubDegree,
}

/// One broken structural rule. `node` is `None` for whole-tree rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub node: Option<NodeId>,
    pub rule: Rule,
    pub observed: usize,
    pub limit: usize,
}

impl Violation {
    fn new(node: Option<NodeId>, rule: Rule, observed: usize, limit: usize) -> Self {
        Self {
            node,
            rule,
            observed,
            limit,
        }
    }
}

/// All structural violations of a rooted design; empty means feasible.
pub fn validate(dt: &DirectedTree, limits: &StructureLimits) -> Vec<Violation> {
    let mut out = dt.tree.check();
    let unreachable = dt.node_count() - dt.order.len();
    if unreachable > 0 && !out.iter().any(|v| v.rule == Rule::Disconnected) {
        out.push(Violation::new(None, Rule::Unreachable, unreachable, 0));
    }
    for (v, kids) in dt.children.iter().enumerate() {
        if v == dt.root {
            if kids.len() > limits.hub_limit() {
                out.push(Violation::new(Some(v), Rule::HubDegree, kids.len(), limits.hub_limit()));
            }
        } else if kids.len() > limits.pmp_limit {
            out.push(Violation::new(Some(v), Rule::PmpLimit, kids.len(), limits.pmp_limit));
        }
    }
    out
}

/// `d_v`: number of nodes in the subtree rooted at `v`, including `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubtreeSizes(pub Vec<usize>);

impl SubtreeSizes {
    pub fn of(&self, v: NodeId) -> usize {
        self.0[v]
    }
}

pub fn subtree_sizes(dt: &DirectedTree) -> SubtreeSizes {
    let mut d = vec![1; dt.node_count()];
    for &v in dt.order.iter().rev() {
        if let Some(p) = dt.parent[v] {
            d[p] += d[v];
        }
    }
    SubtreeSizes(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    A,
    B,
    C,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::A, Scenario::B, Scenario::C];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::A => "A",
            Scenario::B => "B",
            Scenario::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Scenario::A),
            "B" | "b" => Ok(Scenario::B),
            "C" | "c" => Ok(Scenario::C),
            other => Err(format!("unknown scenario `{other}`")),
        }
    }
}

/// Number of data flows on each edge, aligned with [`DirectedTree::edges`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeLoads {
    pub scenario: Scenario,
    pub loads: Vec<u64>,
}

/// Per-edge stream counts: A one stream per edge, B the hub-to-all streams
/// (`d_v`), C all ordered pairs crossing the edge (`2 d_v (|V| - d_v)`).
pub fn scenario_loads(dt: &DirectedTree, scenario: Scenario) -> EdgeLoads {
    let n = dt.node_count() as u64;
    let d = subtree_sizes(dt);
    let loads = dt
        .edges()
        .iter()
        .map(|e| {
            let dv = d.of(e.to) as u64;
            match scenario {
                Scenario::A => 1,
                Scenario::B => dv,
                Scenario::C => 2 * dv * (n - dv),
            }
        })
        .collect();
    EdgeLoads { scenario, loads }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Tree {
        Tree::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn star(n: usize) -> Tree {
        Tree::new(n, (1..n).map(|v| (0, v))).unwrap()
    }

    #[test]
    fn orient_path() {
        let dt = orient(&path3(), 0).unwrap();
        assert_eq!(dt.parent, vec![None, Some(0), Some(1)]);
        assert_eq!(dt.edges(), &[DirectedEdge { from: 0, to: 1 }, DirectedEdge { from: 1, to: 2 }]);
    }

    #[test]
    fn orient_star_at_center() {
        let dt = orient(&star(6), 0).unwrap();
        assert_eq!(dt.children[0], vec![1, 2, 3, 4, 5]);
        assert!(dt.children[1..].iter().all(|c| c.is_empty()));
    }

    #[test]
    fn orient_rejects_bad_root() {
        assert_eq!(orient(&path3(), 3), Err(TopologyError::InvalidRoot { root: 3, n: 3 }));
    }

    #[test]
    fn subtree_sizes_path_and_star() {
        let dt = orient(&path3(), 0).unwrap();
        assert_eq!(subtree_sizes(&dt).0, vec![3, 2, 1]);
        let dt = orient(&star(10), 0).unwrap();
        let d = subtree_sizes(&dt);
        assert_eq!(d.of(0), 10);
        assert!((1..10).all(|v| d.of(v) == 1));
    }

    #[test]
    fn loads_closed_forms() {
        let dt = orient(&star(10), 0).unwrap();
        assert!(scenario_loads(&dt, Scenario::A).loads.iter().all(|&l| l == 1));
        assert!(scenario_loads(&dt, Scenario::C).loads.iter().all(|&l| l == 18));
        let dt = orient(&path3(), 0).unwrap();
        assert_eq!(scenario_loads(&dt, Scenario::B).loads, vec![2, 1]);
        assert_eq!(scenario_loads(&dt, Scenario::C).loads, vec![4, 4]);
    }

    #[test]
    fn pmp_limit_violation() {
        let dt = orient(&Tree::new(13, [(0, 1)].into_iter().chain((2..13).map(|v| (1, v)))).unwrap(), 0).unwrap();
        let v = validate(&dt, &StructureLimits::new(10));
        assert_eq!(
            v,
            vec![Violation {
                node: Some(1),
                rule: Rule::PmpLimit,
                observed: 11,
                limit: 10
            }]
        );
    }

    #[test]
    fn hub_degree_twenty_is_valid() {
        let dt = orient(&star(21), 0).unwrap();
        assert!(validate(&dt, &StructureLimits::new(10)).is_empty());
        let dt = orient(&star(22), 0).unwrap();
        assert_eq!(validate(&dt, &StructureLimits::new(10))[0].rule, Rule::HubDegree);
    }

    #[test]
    fn cycle_is_reported() {
        let tree = Tree::from_edges_unchecked(4, [(0, 1), (1, 2), (2, 0), (2, 3)]);
        assert!(Tree::new(4, tree.edges().to_vec()).is_err());
        let dt = orient(&tree, 0).unwrap();
        let rules: Vec<_> = validate(&dt, &StructureLimits::default()).iter().map(|v| v.rule).collect();
        assert!(rules.contains(&Rule::Cycle));
        assert!(rules.contains(&Rule::EdgeCount));
    }

    #[test]
    fn disconnected_forest_is_reported() {
        let tree = Tree::from_edges_unchecked(4, [(0, 1), (2, 3)]);
        let rules: Vec<_> = tree.check().iter().map(|v| v.rule).collect();
        assert!(rules.contains(&Rule::Disconnected));
    }

    #[test]
    fn eccentricity_of_path() {
        let t = Tree::new(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(t.eccentricities(), vec![4, 3, 2, 3, 4]);
        assert_eq!(t.leaves(), vec![0, 4]);
    }

    #[test]
    fn exchange_and_side() {
        let t = Tree::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let side = t.side_of(1, 2);
        assert_eq!(side, vec![false, false, true, true]);
        let t2 = t.exchanged((2, 1), (0, 3));
        assert_eq!(t2.edges(), &[(0, 1), (0, 3), (2, 3)]);
        assert!(t2.check().is_empty());
    }
}
