//! Full evaluation of a (tree, hub) pair and the design document format.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Geometry;
use crate::instance::Instance;
use crate::num::{db_to_linear, Scalar};
use crate::objective::{aggregate, p_eff, scenario_component, CConvention, ObjectiveBreakdown, ObjectiveError, WeightConfig};
use crate::phy::{LinkMetrics, PhyModel, PhyParams};
use crate::radio::{derive_radio, AntennaModel, Channel, ChannelPlan, RadioConfig, RadioError};
use crate::topology::{orient, scenario_loads, validate, DirectedTree, NodeId, Scenario, StructureLimits, TopologyError, Tree, Violation};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("design violates structure limits: {0:?}")]
    Infeasible(Vec<Violation>),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("design document: {0}")]
    Document(String),
}

/// Everything needed to turn a (tree, hub) pair into an objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub limits: StructureLimits,
    pub antenna: AntennaModel,
    pub plan: ChannelPlan,
    pub phy: PhyParams,
    pub weights: WeightConfig,
    pub lambda: f64,
    pub c_convention: CConvention,
    /// Greedy frequency re-assignment after the fixed heuristic.
    pub improve_frequencies: bool,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            limits: StructureLimits::default(),
            antenna: AntennaModel::default(),
            plan: ChannelPlan::default(),
            phy: PhyParams::default(),
            weights: WeightConfig::baseline(),
            lambda: 1.0,
            c_convention: CConvention::default(),
            improve_frequencies: false,
        }
    }
}

impl DesignConfig {
    pub fn check(&self) -> Result<(), DesignError> {
        if self.limits.pmp_limit == 0 {
            return Err(DesignError::Config("pmp_limit must be at least 1".into()));
        }
        self.antenna.check()?;
        self.plan.check()?;
        self.phy.check().map_err(DesignError::Config)?;
        self.weights.check()?;
        if !(0.0..=2.0).contains(&self.lambda) {
            return Err(ObjectiveError::LambdaOutOfRange(self.lambda).into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation<S> {
    pub dt: DirectedTree,
    pub radio: RadioConfig,
    pub links: LinkMetrics<S>,
    pub objective: ObjectiveBreakdown<S>,
}

impl<S: Scalar> Evaluation<S> {
    pub fn total(&self) -> S {
        self.objective.total
    }

    pub fn hub(&self) -> NodeId {
        self.dt.root
    }
}

/// Per-instance evaluator with precomputed geometry and propagation tables.
#[derive(Debug, Clone)]
pub struct Evaluator<S> {
    pub cfg: DesignConfig,
    geom: Geometry<S>,
    model: PhyModel<S>,
    p_eff: [S; 3],
    lambda: S,
}

impl<S: Scalar> Evaluator<S> {
    pub fn new(inst: &Instance, cfg: DesignConfig) -> Result<Self, DesignError> {
        cfg.check()?;
        let geom = Geometry::new(inst);
        let model = PhyModel::new(&geom, cfg.phy, cfg.plan);
        let n = inst.size();
        let p_eff = Scenario::ALL.map(|s| S::from_ratio(p_eff(cfg.weights.p, s, n, cfg.c_convention)));
        let lambda = S::lit(cfg.lambda);
        Ok(Self {
            cfg,
            geom,
            model,
            p_eff,
            lambda,
        })
    }

    pub fn geometry(&self) -> &Geometry<S> {
        &self.geom
    }

    pub fn node_count(&self) -> usize {
        self.geom.node_count()
    }

    /// Orients, validates, derives the radio configuration and scores.
    pub fn evaluate(&self, tree: &Tree, hub: NodeId) -> Result<Evaluation<S>, DesignError> {
        let dt = orient(tree, hub)?;
        self.evaluate_oriented(dt)
    }

    pub fn evaluate_oriented(&self, dt: DirectedTree) -> Result<Evaluation<S>, DesignError> {
        let violations = validate(&dt, &self.cfg.limits);
        if !violations.is_empty() {
            return Err(DesignError::Infeasible(violations));
        }
        let mut radio = derive_radio(&self.geom, &dt, &self.cfg.limits, &self.cfg.antenna, &self.cfg.plan)?;
        let mut links = self.model.link_metrics(&dt, &radio, &self.cfg.antenna);
        if self.cfg.improve_frequencies {
            (radio, links) = self.improve_frequencies(&dt, radio, links);
        }
        let objective = self.score(&dt, &links)?;
        Ok(Evaluation {
            dt,
            radio,
            links,
            objective,
        })
    }

    fn score(&self, dt: &DirectedTree, links: &LinkMetrics<S>) -> Result<ObjectiveBreakdown<S>, DesignError> {
        let comps = Scenario::ALL.map(|s| scenario_component(&links.tp, &scenario_loads(dt, s), self.p_eff[s.index()]));
        let [a, b, c] = comps;
        Ok(aggregate([a?, b?, c?], &self.cfg.weights, self.lambda)?)
    }

    fn total_interference_mw(links: &LinkMetrics<S>) -> S {
        links.interference_dbm.iter().map(|&d| db_to_linear(d)).sum()
    }

    /// Flips the slot of one transmit group at a time (BFS order) and keeps
    /// the flip whenever total co-frequency interference drops.
    fn improve_frequencies(
        &self,
        dt: &DirectedTree,
        mut radio: RadioConfig,
        mut links: LinkMetrics<S>,
    ) -> (RadioConfig, LinkMetrics<S>) {
        let mut current = Self::total_interference_mw(&links);
        for &u in &dt.order {
            for ch in [Channel::Ch0, Channel::Ch1] {
                let group: Vec<usize> = dt
                    .children[u]
                    .iter()
                    .filter_map(|&v| dt.edge_index(v))
                    .filter(|&e| radio.edge_channel[e] == ch)
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let mut trial = radio.clone();
                for &e in &group {
                    trial.edge_freq_slot[e] ^= 1;
                    trial.edge_freq_mhz[e] = self.cfg.plan.freq_mhz(ch, trial.edge_freq_slot[e]);
                }
                let trial_links = self.model.link_metrics(dt, &trial, &self.cfg.antenna);
                let total = Self::total_interference_mw(&trial_links);
                if total < current {
                    current = total;
                    radio = trial;
                    links = trial_links;
                }
            }
        }
        (radio, links)
    }
}

/// Serializable form of an evaluated design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDesign {
    pub instance_id: String,
    pub root: NodeId,
    /// Directed `[parent, child]` pairs, ordered by child.
    pub edges: Vec<[NodeId; 2]>,
    pub hub_groups: [Vec<NodeId>; 2],
    pub edge_channel: Vec<u8>,
    pub edge_freq_mhz: Vec<f64>,
    /// Per node: `ant0` / `ant1` hold active sectors or the string `"omni"`.
    pub beams: BTreeMap<String, BTreeMap<String, BeamSetting>>,
    pub tp_mbps: Vec<f64>,
    pub objective: DesignObjective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BeamSetting {
    Sectors(Vec<usize>),
    Omni(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignObjective {
    pub weights: String,
    pub lambda: f64,
    pub total: f64,
    /// `[f_min, f_mean, f]` per scenario A, B, C.
    pub scenarios: [[f64; 3]; 3],
}

impl NetworkDesign {
    pub fn from_evaluation<S: Scalar>(instance_id: &str, ev: &Evaluation<S>, weights: &WeightConfig) -> Self {
        let beams = ev
            .radio
            .antennas
            .iter()
            .enumerate()
            .map(|(v, ants)| {
                let per: BTreeMap<String, BeamSetting> = ants
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let s = if a.omni {
                            BeamSetting::Omni("omni".into())
                        } else {
                            BeamSetting::Sectors(a.sectors.clone())
                        };
                        (format!("ant{i}"), s)
                    })
                    .collect();
                (v.to_string(), per)
            })
            .collect();
        let c = &ev.objective.components;
        Self {
            instance_id: instance_id.to_string(),
            root: ev.dt.root,
            edges: ev.dt.edges().iter().map(|e| [e.from, e.to]).collect(),
            hub_groups: ev.radio.hub_partition.groups.clone(),
            edge_channel: ev.radio.edge_channel.iter().map(|c| c.index() as u8).collect(),
            edge_freq_mhz: ev.radio.edge_freq_mhz.clone(),
            beams,
            tp_mbps: ev.links.tp.iter().map(|t| t.to_f64_lossy()).collect(),
            objective: DesignObjective {
                weights: weights.name.clone(),
                lambda: ev.objective.lambda.to_f64_lossy(),
                total: ev.objective.total.to_f64_lossy(),
                scenarios: [0, 1, 2].map(|i| {
                    [
                        c[i].f_min.to_f64_lossy(),
                        c[i].f_mean.to_f64_lossy(),
                        ev.objective.scenario_values[i].to_f64_lossy(),
                    ]
                }),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("design serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DesignError> {
        serde_json::from_str(text).map_err(|e| DesignError::Document(e.to_string()))
    }

    pub fn tree(&self, n: usize) -> Result<Tree, DesignError> {
        Ok(Tree::new(n, self.edges.iter().map(|e| (e[0], e[1])))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_instance;

    fn star_design(n: usize) -> (Instance, Tree) {
        let inst = generate_instance(n, 3, 10.0).unwrap();
        let tree = Tree::new(n, (1..n).map(|v| (0, v))).unwrap();
        (inst, tree)
    }

    #[test]
    fn evaluation_is_consistent() {
        let (inst, tree) = star_design(8);
        let ev = Evaluator::<f64>::new(&inst, DesignConfig::default()).unwrap();
        let a = ev.evaluate(&tree, 0).unwrap();
        let b = ev.evaluate(&tree, 0).unwrap();
        assert_eq!(a.total(), b.total());
        assert_eq!(a.links.tp.len(), 7);
        assert!(a.total() > 0.0);
    }

    #[test]
    fn infeasible_hub_is_reported() {
        let (inst, tree) = star_design(8);
        let cfg = DesignConfig {
            limits: StructureLimits::new(3),
            ..DesignConfig::default()
        };
        let ev = Evaluator::<f64>::new(&inst, cfg).unwrap();
        assert!(matches!(ev.evaluate(&tree, 0), Err(DesignError::Infeasible(_))));
        // Rooted at a leaf, the centre has 6 successors on one channel.
        assert!(matches!(ev.evaluate(&tree, 1), Err(DesignError::Infeasible(_))));
    }

    #[test]
    fn bad_lambda_rejected() {
        let (inst, _) = star_design(5);
        let cfg = DesignConfig {
            lambda: 3.0,
            ..DesignConfig::default()
        };
        assert!(Evaluator::<f64>::new(&inst, cfg).is_err());
    }

    #[test]
    fn frequency_pass_never_adds_interference() {
        let inst = generate_instance(15, 11, 10.0).unwrap();
        let tree = Tree::new(15, (1..15).map(|v| ((v - 1) / 3, v))).unwrap();
        let plain = Evaluator::<f64>::new(&inst, DesignConfig::default()).unwrap();
        let improved = Evaluator::<f64>::new(
            &inst,
            DesignConfig {
                improve_frequencies: true,
                ..DesignConfig::default()
            },
        )
        .unwrap();
        let a = plain.evaluate(&tree, 0).unwrap();
        let b = improved.evaluate(&tree, 0).unwrap();
        let ia: f64 = a.links.interference_dbm.iter().map(|&d| db_to_linear(d)).sum();
        let ib: f64 = b.links.interference_dbm.iter().map(|&d| db_to_linear(d)).sum();
        assert!(ib <= ia);
    }

    #[test]
    fn document_round_trip() {
        let (inst, tree) = star_design(6);
        let ev = Evaluator::<f64>::new(&inst, DesignConfig::default()).unwrap();
        let e = ev.evaluate(&tree, 0).unwrap();
        let doc = NetworkDesign::from_evaluation(&inst.id, &e, &ev.cfg.weights);
        let back = NetworkDesign::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.tree(6).unwrap(), tree);
        assert!(doc.to_json().contains("\"ant0\""));
    }
}
