//! Tabu search over (tree, hub) pairs.
//!
//! The start is a Euclidean minimum spanning tree repaired to the degree
//! limits. Each iteration scores two move families: edge exchanges (cut a
//! tree edge, reconnect through one of the `replacement_candidates`
//! shortest feasible edges across the cut) and hub moves to another
//! candidate of the configured strategy. Tabu attributes are the added edge
//! (may not be removed), the removed edge (may not be re-added) and the hub
//! that was left (may not be re-entered). A tabu move is still accepted
//! when it strictly beats the best design seen so far.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{DesignConfig, DesignError, Evaluation, Evaluator};
use crate::hubselect::{candidate_hubs, HubStrategy};
use crate::instance::Instance;
use crate::num::Scalar;
use crate::rng::UnitStream;
use crate::topology::{orient, NodeId, StructureLimits, Tree};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("cannot build a design within the structure limits: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("objective drifted at iteration {iteration}: stored {stored}, recomputed {recomputed}")]
    Inconsistent { iteration: usize, stored: f64, recomputed: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Drives the perturbed starts (third start onwards).
    pub seed: u64,
    /// Iteration budget of each start.
    pub max_iterations: usize,
    /// Iterations without a new overall best before a start ends.
    pub stagnation_limit: usize,
    /// `None` means `7 + floor(|V| / 10)`.
    pub tabu_tenure: Option<usize>,
    pub hub_strategy: HubStrategy,
    /// Replacement edges tried per removed edge.
    pub replacement_candidates: usize,
    /// Additional searches after the MST start: first from the hub star, then
    /// from perturbed MSTs. The best result over all starts is kept.
    pub restarts: usize,
    /// Re-evaluate the current design from scratch every this many accepted moves.
    pub check_every: usize,
    pub design: DesignConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iterations: 2000,
            stagnation_limit: 500,
            tabu_tenure: None,
            hub_strategy: HubStrategy::Baseline,
            replacement_candidates: 4,
            restarts: 1,
            check_every: 100,
            design: DesignConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn tenure(&self, n: usize) -> usize {
        self.tabu_tenure.unwrap_or(7 + n / 10)
    }

    pub fn check(&self) -> Result<(), DesignError> {
        if self.max_iterations == 0 || self.stagnation_limit == 0 || self.replacement_candidates == 0 || self.check_every == 0
        {
            return Err(DesignError::Config(
                "iteration, stagnation, replacement and check limits must be positive".into(),
            ));
        }
        if self.tabu_tenure == Some(0) {
            return Err(DesignError::Config("tabu tenure must be positive".into()));
        }
        self.design.check()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Move {
    Exchange { remove: (NodeId, NodeId), add: (NodeId, NodeId) },
    Hub { from: NodeId, to: NodeId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub mv: Move,
    pub tree: Tree,
    pub hub: NodeId,
}

/// Best design for one scenario's standalone value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBest {
    pub value: f64,
    pub hub: NodeId,
    pub edges: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub best_objective: f64,
    pub iteration_found: usize,
    pub time_found_ms: f64,
    pub total_iterations: usize,
    pub total_time_ms: f64,
    pub time_per_iteration_ms: f64,
    /// Best objective after each iteration; entry 0 is the start design.
    pub best_so_far: Vec<f64>,
    /// Indexed by scenario A, B, C.
    pub scenario_best: Vec<ScenarioBest>,
    pub evaluations: usize,
    pub consistency_checks: usize,
    pub starts: usize,
}

impl SearchTrace {
    /// Equality on everything except wall-clock measurements.
    pub fn same_run(&self, other: &SearchTrace) -> bool {
        self.best_objective.to_bits() == other.best_objective.to_bits()
            && self.iteration_found == other.iteration_found
            && self.total_iterations == other.total_iterations
            && self.best_so_far.len() == other.best_so_far.len()
            && self.best_so_far.iter().zip(&other.best_so_far).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.scenario_best == other.scenario_best
            && self.evaluations == other.evaluations
            && self.consistency_checks == other.consistency_checks
            && self.starts == other.starts
    }
}

pub struct SearchOutcome<S> {
    pub best: Evaluation<S>,
    /// Re-evaluated best design per scenario A, B, C.
    pub scenario_best: [Evaluation<S>; 3],
    pub trace: SearchTrace,
}

/// Prim's algorithm over `weight(a, b)`; ties resolved by NodeId.
pub fn minimum_spanning_tree(n: usize, weight: impl Fn(NodeId, NodeId) -> f64) -> Tree {
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut link = vec![0; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return Tree::from_edges_unchecked(0, edges);
    }
    best[0] = 0.0;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
            .expect("a node remains");
        in_tree[u] = true;
        if u != 0 {
            edges.push((link[u], u));
        }
        for v in 0..n {
            if !in_tree[v] {
                let w = weight(u, v);
                if w < best[v] {
                    best[v] = w;
                    link[v] = u;
                }
            }
        }
    }
    Tree::from_edges_unchecked(n, edges)
}

fn degree_feasible(deg: &[usize], hub: NodeId, limits: &StructureLimits) -> bool {
    deg.iter()
        .enumerate()
        .all(|(v, &d)| if v == hub { d <= limits.hub_limit() } else { d <= limits.pmp_limit + 1 })
}

/// Moves overflow successors to the nearest node with spare capacity outside
/// their own subtree, never onto the hub, until every limit holds.
pub fn repair_to_limits(
    tree: Tree,
    hub: NodeId,
    limits: &StructureLimits,
    dist: impl Fn(NodeId, NodeId) -> f64,
) -> Result<Tree, SearchError> {
    let n = tree.node_count();
    let mut tree = tree;
    for _ in 0..n * n + 1 {
        let dt = orient(&tree, hub).map_err(|e| SearchError::Infeasible(e.to_string()))?;
        let limit_of = |v: NodeId| if v == hub { limits.hub_limit() } else { limits.pmp_limit };
        let Some(&u) = dt.order.iter().find(|&&v| dt.children[v].len() > limit_of(v)) else {
            return Ok(tree);
        };
        let mut kids = dt.children[u].clone();
        kids.sort_by(|&a, &b| dist(u, b).total_cmp(&dist(u, a)).then(a.cmp(&b)));
        let c = kids[0];
        let sub = tree.side_of(u, c);
        let target = (0..n)
            .filter(|&w| !sub[w] && w != u && w != hub && dt.children[w].len() < limits.pmp_limit)
            .min_by(|&a, &b| dist(c, a).total_cmp(&dist(c, b)).then(a.cmp(&b)));
        let Some(w) = target else {
            return Err(SearchError::Infeasible(format!("no node can adopt successor {c} of {u}")));
        };
        tree = tree.exchanged((u, c), (w, c));
    }
    Err(SearchError::Infeasible("repair did not converge".into()))
}

/// Hub after a topology change: unchanged if still a candidate, otherwise
/// the candidate nearest to it.
fn resolve_hub<S: Scalar>(ev: &Evaluator<S>, tree: &Tree, hub: NodeId, strategy: HubStrategy) -> NodeId {
    let cands = candidate_hubs(tree, strategy);
    if cands.contains(hub) {
        return hub;
    }
    let g = ev.geometry();
    *cands
        .nodes
        .iter()
        .min_by(|&&a, &&b| g.dist_km(hub, a).to_f64_lossy().total_cmp(&g.dist_km(hub, b).to_f64_lossy()).then(a.cmp(&b)))
        .expect("candidate set is never empty")
}

/// Feasible neighbours of `(tree, hub)`.
pub fn neighbors<S: Scalar>(ev: &Evaluator<S>, tree: &Tree, hub: NodeId, cfg: &SearchConfig) -> Vec<Candidate> {
    let n = tree.node_count();
    let limits = &ev.cfg.limits;
    let g = ev.geometry();
    let mut out = Vec::new();
    for &(a, b) in tree.edges() {
        let side_b = tree.side_of(a, b);
        let mut across: Vec<(NodeId, NodeId)> = Vec::new();
        for x in (0..n).filter(|&x| !side_b[x]) {
            for y in (0..n).filter(|&y| side_b[y]) {
                let e = if x < y { (x, y) } else { (y, x) };
                if e != (a, b) {
                    across.push(e);
                }
            }
        }
        across.sort_by(|p, q| g.dist_km(p.0, p.1).to_f64_lossy().total_cmp(&g.dist_km(q.0, q.1).to_f64_lossy()).then(p.cmp(q)));
        // The shortest feasible replacements, plus the shortest feasible one
        // that attaches the far component directly to the hub.
        let mut taken = 0;
        let mut hub_edge = false;
        for add in across {
            let touches_hub = add.0 == hub || add.1 == hub;
            if taken >= cfg.replacement_candidates && (hub_edge || !touches_hub) {
                if hub_edge {
                    break;
                }
                continue;
            }
            let next = tree.exchanged((a, b), add);
            let new_hub = resolve_hub(ev, &next, hub, cfg.hub_strategy);
            if degree_feasible(&next.degrees(), new_hub, limits) {
                out.push(Candidate {
                    mv: Move::Exchange { remove: (a, b), add },
                    tree: next,
                    hub: new_hub,
                });
                taken += 1;
                hub_edge |= touches_hub;
            }
        }
    }
    let deg = tree.degrees();
    for h in candidate_hubs(tree, cfg.hub_strategy).nodes {
        if h != hub && degree_feasible(&deg, h, limits) {
            out.push(Candidate {
                mv: Move::Hub { from: hub, to: h },
                tree: tree.clone(),
                hub: h,
            });
        }
    }
    out
}

/// Where a search start comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// Euclidean minimum spanning tree.
    Mst,
    /// Every node attached straight to the MST's hub.
    HubStar,
    /// MST of distances scaled by seeded factors in `[1, 2)`.
    Perturbed(u64),
}

/// Start tree and hub, repaired to the structure limits. The hub is the
/// strategy's first candidate on the MST (of the perturbed distances).
pub fn initial_design<S: Scalar>(ev: &Evaluator<S>, cfg: &SearchConfig, start: Start) -> Result<(Tree, NodeId), SearchError> {
    let n = ev.node_count();
    let g = ev.geometry();
    let dist = |a: NodeId, b: NodeId| g.dist_km(a, b).to_f64_lossy();
    let factors: Vec<f64> = match start {
        Start::Perturbed(seed) => {
            let mut rng = UnitStream::new(seed);
            let mut f = vec![1.0; n * n];
            for a in 0..n {
                for b in a + 1..n {
                    let v = 1.0 + rng.next_unit();
                    f[a * n + b] = v;
                    f[b * n + a] = v;
                }
            }
            f
        }
        _ => vec![1.0; n * n],
    };
    let mst = minimum_spanning_tree(n, |a, b| dist(a, b) * factors[a * n + b]);
    let hub = candidate_hubs(&mst, cfg.hub_strategy).first();
    let tree = match start {
        Start::HubStar => Tree::from_edges_unchecked(n, (0..n).filter(|&v| v != hub).map(|v| (hub, v))),
        _ => mst,
    };
    let tree = repair_to_limits(tree, hub, &ev.cfg.limits, dist)?;
    Ok((tree, hub))
}

/// Start of the `k`-th search: the MST, then the hub star, then perturbed MSTs.
fn start_of(k: usize, seed: u64) -> Start {
    match k {
        0 => Start::Mst,
        1 => Start::HubStar,
        _ => Start::Perturbed(restart_seed(seed, k)),
    }
}

struct Tracker<S> {
    best_value: S,
    best: (Tree, NodeId),
    scenario: [(S, Tree, NodeId); 3],
    evaluations: usize,
}

impl<S: Scalar> Tracker<S> {
    fn observe(&mut self, ev: &Evaluation<S>, tree: &Tree) -> bool {
        self.evaluations += 1;
        for (i, slot) in self.scenario.iter_mut().enumerate() {
            let v = ev.objective.scenario_values[i];
            if v > slot.0 {
                *slot = (v, tree.clone(), ev.hub());
            }
        }
        if ev.total() > self.best_value {
            self.best_value = ev.total();
            self.best = (tree.clone(), ev.hub());
            true
        } else {
            false
        }
    }
}

fn restart_seed(seed: u64, start: usize) -> u64 {
    let mut s = UnitStream::new(seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(start as u64));
    s.next_u64()
}

/// Runs the search from `cfg.restarts + 1` starts and keeps the best design.
pub fn tabu_search<S: Scalar>(inst: &Instance, cfg: &SearchConfig) -> Result<SearchOutcome<S>, SearchError> {
    cfg.check()?;
    let ev = Evaluator::<S>::new(inst, cfg.design.clone())?;
    let n = inst.size();
    let tenure = cfg.tenure(n);
    let clock = Instant::now();

    let (tree0, hub0) = initial_design(&ev, cfg, Start::Mst)?;
    let first = ev.evaluate(&tree0, hub0)?;
    let mut tracker = Tracker {
        best_value: S::neg_infinity(),
        best: (tree0.clone(), hub0),
        scenario: std::array::from_fn(|_| (S::neg_infinity(), tree0.clone(), hub0)),
        evaluations: 0,
    };
    tracker.observe(&first, &tree0);
    let mut best_so_far = vec![tracker.best_value.to_f64_lossy()];
    let mut iteration_found = 0;
    let mut time_found_ms = clock.elapsed().as_secs_f64() * 1e3;
    let mut iteration = 0usize;
    let mut checks = 0usize;

    for start in 0..=cfg.restarts {
        let (mut tree, mut hub) = if start == 0 {
            (tree0.clone(), hub0)
        } else {
            let (t, h) = initial_design(&ev, cfg, start_of(start, cfg.seed))?;
            let e = ev.evaluate(&t, h)?;
            if tracker.observe(&e, &t) {
                iteration_found = iteration;
                time_found_ms = clock.elapsed().as_secs_f64() * 1e3;
            }
            (t, h)
        };
        let mut value;
        let mut no_add: HashMap<(NodeId, NodeId), usize> = HashMap::new();
        let mut no_remove: HashMap<(NodeId, NodeId), usize> = HashMap::new();
        let mut no_hub = vec![0usize; n];
        let mut stagnant = 0usize;
        let mut accepted = 0usize;
        for local in 1..=cfg.max_iterations {
            iteration += 1;
            let best_before = tracker.best_value;
            let mut chosen: Option<(S, Candidate)> = None;
            for cand in neighbors(&ev, &tree, hub, cfg) {
                let Ok(e) = ev.evaluate(&cand.tree, cand.hub) else { continue };
                if tracker.observe(&e, &cand.tree) {
                    iteration_found = iteration;
                    time_found_ms = clock.elapsed().as_secs_f64() * 1e3;
                }
                let v = e.total();
                let tabu = match cand.mv {
                    Move::Exchange { remove, add } => {
                        no_add.get(&add).is_some_and(|&t| t >= local) || no_remove.get(&remove).is_some_and(|&t| t >= local)
                    }
                    Move::Hub { to, .. } => no_hub[to] >= local,
                };
                if tabu && !(v > best_before) {
                    continue;
                }
                let better = match &chosen {
                    None => true,
                    Some((bv, bc)) => v > *bv || (v == *bv && cand.mv < bc.mv),
                };
                if better {
                    chosen = Some((v, cand));
                }
            }
            let improved = tracker.best_value > best_before;
            best_so_far.push(tracker.best_value.to_f64_lossy());
            let Some((v, cand)) = chosen else { break };
            match cand.mv {
                Move::Exchange { remove, add } => {
                    no_add.insert(remove, local + tenure);
                    no_remove.insert(add, local + tenure);
                }
                Move::Hub { from, .. } => no_hub[from] = local + tenure,
            }
            tree = cand.tree;
            hub = cand.hub;
            value = v;
            accepted += 1;
            if accepted.is_multiple_of(cfg.check_every) {
                checks += 1;
                let again = ev.evaluate(&tree, hub)?.total();
                let tol = S::lit(1e-9) * value.abs().max(S::one());
                if (again - value).abs() > tol {
                    return Err(SearchError::Inconsistent {
                        iteration,
                        stored: value.to_f64_lossy(),
                        recomputed: again.to_f64_lossy(),
                    });
                }
            }
            stagnant = if improved { 0 } else { stagnant + 1 };
            if stagnant >= cfg.stagnation_limit {
                break;
            }
        }
    }

    let total_time_ms = clock.elapsed().as_secs_f64() * 1e3;
    let best = ev.evaluate(&tracker.best.0, tracker.best.1)?;
    let scenario_evals: Vec<Evaluation<S>> = tracker
        .scenario
        .iter()
        .map(|(_, t, h)| ev.evaluate(t, *h))
        .collect::<Result<_, _>>()?;
    let scenario_best = tracker
        .scenario
        .iter()
        .map(|(v, t, h)| ScenarioBest {
            value: v.to_f64_lossy(),
            hub: *h,
            edges: t.edges().to_vec(),
        })
        .collect();
    let trace = SearchTrace {
        best_objective: tracker.best_value.to_f64_lossy(),
        iteration_found,
        time_found_ms: time_found_ms.min(total_time_ms),
        total_iterations: iteration,
        total_time_ms,
        time_per_iteration_ms: total_time_ms / iteration.max(1) as f64,
        best_so_far,
        scenario_best,
        evaluations: tracker.evaluations,
        consistency_checks: checks,
        starts: cfg.restarts + 1,
    };
    let Ok::<[Evaluation<S>; 3], _>([a, b, c]) = scenario_evals.try_into() else {
        unreachable!("one evaluation per scenario")
    };
    Ok(SearchOutcome {
        best,
        scenario_best: [a, b, c],
        trace,
    })
}
