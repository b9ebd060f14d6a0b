//! Hub-child partition, channel and frequency assignment, and antenna beam
//! configuration for a rooted tree.
//!
//! Every node carries two antennas; antenna `i` is bound to channel `i`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Geometry;
use crate::num::Scalar;
use crate::topology::{DirectedTree, NodeId, StructureLimits};

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("hub has {degree} successors but two channel groups hold at most {limit}")]
    InfeasiblePartition { degree: usize, limit: usize },
    #[error("invalid antenna model: {0}")]
    InvalidAntenna(String),
    #[error("invalid channel plan: {0}")]
    InvalidPlan(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    Ch0,
    Ch1,
}

impl Channel {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Channel::Ch0
        } else {
            Channel::Ch1
        }
    }

    pub fn other(self) -> Self {
        match self {
            Channel::Ch0 => Channel::Ch1,
            Channel::Ch1 => Channel::Ch0,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ch{}", self.index())
    }
}

/// Two frequencies (MHz) per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPlan {
    pub ch0_mhz: [f64; 2],
    pub ch1_mhz: [f64; 2],
}

impl Default for ChannelPlan {
    fn default() -> Self {
        Self {
            ch0_mhz: [4500.0, 5000.0],
            ch1_mhz: [2000.0, 2400.0],
        }
    }
}

impl ChannelPlan {
    pub fn freq_mhz(&self, channel: Channel, slot: u8) -> f64 {
        let pair = match channel {
            Channel::Ch0 => &self.ch0_mhz,
            Channel::Ch1 => &self.ch1_mhz,
        };
        pair[slot as usize]
    }

    pub fn check(&self) -> Result<(), RadioError> {
        let all = [self.ch0_mhz[0], self.ch0_mhz[1], self.ch1_mhz[0], self.ch1_mhz[1]];
        if all.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(RadioError::InvalidPlan("frequencies must be positive".into()));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if all[i] == all[j] {
                    return Err(RadioError::InvalidPlan(format!("frequency {} MHz used twice", all[i])));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamMode {
    /// Concurrent transmission on all active sectors, power split among them.
    MultiBeam,
    /// One direction at a time; links on an antenna share airtime.
    SingleBeam,
}

/// Sectorized antenna: `beam_count` arcs of `360 / beam_count` degrees
/// anchored at azimuth 0 and indexed counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaModel {
    pub beam_count: u32,
    pub mode: BeamMode,
    pub omni_fallback: bool,
    pub fallback_threshold: usize,
    pub omni_gain_dbi: f64,
    pub sidelobe_rejection_db: f64,
}

impl Default for AntennaModel {
    fn default() -> Self {
        Self::omni_switch_24()
    }
}

impl AntennaModel {
    /// 24 beams with an omnidirectional fallback above 7 active beams.
    pub fn omni_switch_24() -> Self {
        Self {
            beam_count: 24,
            mode: BeamMode::MultiBeam,
            omni_fallback: true,
            fallback_threshold: 7,
            omni_gain_dbi: 0.0,
            sidelobe_rejection_db: 20.0,
        }
    }

    /// Always-directional multi-beam antenna.
    pub fn directional(beam_count: u32) -> Self {
        Self {
            beam_count,
            omni_fallback: false,
            ..Self::omni_switch_24()
        }
    }

    pub fn single_beam(beam_count: u32) -> Self {
        Self {
            beam_count,
            mode: BeamMode::SingleBeam,
            omni_fallback: false,
            ..Self::omni_switch_24()
        }
    }

    pub fn check(&self) -> Result<(), RadioError> {
        if self.beam_count == 0 {
            return Err(RadioError::InvalidAntenna("beam_count must be positive".into()));
        }
        if !(self.sidelobe_rejection_db >= 0.0) {
            return Err(RadioError::InvalidAntenna("sidelobe rejection must be non-negative".into()));
        }
        Ok(())
    }

    pub fn sector_width_deg(&self) -> f64 {
        360.0 / self.beam_count as f64
    }

    /// Ideal azimuthal directivity of one sector.
    pub fn peak_gain_dbi(&self) -> f64 {
        10.0 * (self.beam_count as f64).log10()
    }

    /// Sector containing `azimuth_deg`; a boundary direction belongs to the
    /// higher-index sector.
    pub fn sector_of<S: Scalar>(&self, azimuth_deg: S) -> usize {
        let idx = (azimuth_deg / S::lit(self.sector_width_deg())).floor();
        let idx = idx.to_usize().unwrap_or(0);
        idx.min(self.beam_count as usize - 1)
    }

    /// Whether an antenna with `active` sectors switches to omni.
    pub fn falls_back(&self, active: usize) -> bool {
        self.mode == BeamMode::MultiBeam && self.omni_fallback && active > self.fallback_threshold
    }
}

/// Successors of the hub split over its two channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubPartition {
    pub groups: [Vec<NodeId>; 2],
}

impl HubPartition {
    pub fn group_of(&self, v: NodeId) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&v))
    }
}

/// Active sectors of one antenna and the number of links it serves.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AntennaState {
    pub sectors: Vec<usize>,
    pub links: usize,
    pub omni: bool,
}

impl AntennaState {
    pub fn active_count(&self) -> usize {
        self.sectors.len()
    }

    pub fn covers(&self, sector: usize) -> bool {
        self.sectors.binary_search(&sector).is_ok()
    }
}

/// Radio configuration derived for one rooted tree. Edge-indexed vectors
/// are aligned with [`DirectedTree::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    pub hub_partition: HubPartition,
    pub edge_channel: Vec<Channel>,
    pub edge_freq_slot: Vec<u8>,
    pub edge_freq_mhz: Vec<f64>,
    /// `antennas[v][c]` is node `v`'s antenna on channel `c`.
    pub antennas: Vec<[AntennaState; 2]>,
}

/// Splits the hub's successors into two angularly contiguous groups.
///
/// Successors are sorted by azimuth from the hub; a split cuts the circular
/// order at two gaps. Among splits with both groups within the PMP limit,
/// the one with the largest total angular gap at the cuts wins; ties go to
/// the larger smaller-gap, then the more balanced split, then the lowest
/// starting NodeIds. Group 0 holds the smallest NodeId.
pub fn partition_hub_children<S: Scalar>(
    dt: &DirectedTree,
    geom: &Geometry<S>,
    limits: &StructureLimits,
) -> Result<HubPartition, RadioError> {
    let kids = &dt.children[dt.root];
    let k = kids.len();
    if k > limits.hub_limit() {
        return Err(RadioError::InfeasiblePartition {
            degree: k,
            limit: limits.hub_limit(),
        });
    }
    if k <= 1 {
        return Ok(HubPartition {
            groups: [kids.clone(), Vec::new()],
        });
    }
    let mut sorted: Vec<(f64, NodeId)> = kids
        .iter()
        .map(|&v| (geom.azimuth_deg(dt.root, v).to_f64_lossy(), v))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    // gap[i] lies between sorted[i] and sorted[i + 1] (circularly).
    let gaps: Vec<f64> = (0..k)
        .map(|i| {
            let next = sorted[(i + 1) % k].0;
            let g = next - sorted[i].0;
            if i + 1 == k {
                g + 360.0
            } else {
                g
            }
        })
        .collect();

    const EPS: f64 = 1e-9;
    let mut best: Option<(f64, f64, usize, (NodeId, NodeId), usize, usize)> = None;
    for i in 0..k {
        for j in i + 1..k {
            let size_a = j - i;
            let size_b = k - size_a;
            if size_a > limits.pmp_limit || size_b > limits.pmp_limit {
                continue;
            }
            let total = gaps[i] + gaps[j];
            let smaller = gaps[i].min(gaps[j]);
            let imbalance = size_a.abs_diff(size_b);
            let s1 = sorted[(i + 1) % k].1;
            let s2 = sorted[(j + 1) % k].1;
            let starts = (s1.min(s2), s1.max(s2));
            let better = match &best {
                None => true,
                Some((bt, bs, bi, bst, _, _)) => {
                    if (total - bt).abs() > EPS {
                        total > *bt
                    } else if (smaller - bs).abs() > EPS {
                        smaller > *bs
                    } else if imbalance != *bi {
                        imbalance < *bi
                    } else {
                        starts < *bst
                    }
                }
            };
            if better {
                best = Some((total, smaller, imbalance, starts, i, j));
            }
        }
    }
    let (_, _, _, _, i, j) = best.expect("k <= 2 * pmp_limit always admits a split");
    let mut a: Vec<NodeId> = (i + 1..=j).map(|t| sorted[t].1).collect();
    let mut b: Vec<NodeId> = (0..k).filter(|t| !(i + 1..=j).contains(t)).map(|t| sorted[t].1).collect();
    a.sort_unstable();
    b.sort_unstable();
    if b[0] < a[0] {
        std::mem::swap(&mut a, &mut b);
    }
    Ok(HubPartition { groups: [a, b] })
}

/// Hub group `g` transmits on channel `g`; every other node receives on one
/// channel and serves its successors on the other.
pub fn assign_channels(dt: &DirectedTree, partition: &HubPartition) -> Vec<Channel> {
    let mut inbound: Vec<Option<Channel>> = vec![None; dt.node_count()];
    let mut out = vec![Channel::Ch0; dt.edges().len()];
    for &u in &dt.order {
        for &v in &dt.children[u] {
            let ch = if u == dt.root {
                Channel::from_index(partition.group_of(v).unwrap_or(0))
            } else {
                inbound[u].map(Channel::other).unwrap_or(Channel::Ch0)
            };
            inbound[v] = Some(ch);
            if let Some(e) = dt.edge_index(v) {
                out[e] = ch;
            }
        }
    }
    out
}

/// Frequency slot (0 or 1 within the channel's pair) of every edge.
///
/// A transmitter uses one slot for its whole downstream group. Both hub
/// groups take slot 0. A relay's slot alternates with the group one level
/// up on the same channel, offset by its rank among siblings that also
/// relay (NodeId order), so neighbouring PMP groups land on different
/// frequencies.
pub fn assign_frequency_slots(dt: &DirectedTree, edge_channel: &[Channel]) -> Vec<u8> {
    let n = dt.node_count();
    let root = dt.root;
    let mut group_slot: Vec<u8> = vec![0; n];
    let slot_of_group = |w: NodeId, group_slot: &[u8]| -> u8 {
        if w == root {
            0
        } else {
            group_slot[w]
        }
    };
    for &u in &dt.order {
        let mut rank = [0u8; 2];
        for &v in &dt.children[u] {
            if dt.children[v].is_empty() {
                continue;
            }
            let ch_in = edge_channel[dt.edge_index(v).expect("child has an edge")];
            let base = if u == root {
                0
            } else {
                slot_of_group(dt.parent[u].expect("non-root has a parent"), &group_slot)
            };
            let r = &mut rank[ch_in.index()];
            group_slot[v] = (base + 1 + *r) % 2;
            *r = (*r + 1) % 2;
        }
    }
    dt.edges()
        .iter()
        .map(|e| slot_of_group(e.from, &group_slot))
        .collect()
}

pub fn assign_frequencies(dt: &DirectedTree, edge_channel: &[Channel], plan: &ChannelPlan) -> Vec<f64> {
    assign_frequency_slots(dt, edge_channel)
        .iter()
        .zip(edge_channel)
        .map(|(&slot, &ch)| plan.freq_mhz(ch, slot))
        .collect()
}

/// Minimal sector set per antenna: the sectors occupied by its neighbours.
pub fn configure_beams<S: Scalar>(
    geom: &Geometry<S>,
    dt: &DirectedTree,
    edge_channel: &[Channel],
    antenna: &AntennaModel,
) -> Vec<[AntennaState; 2]> {
    let n = dt.node_count();
    let mut neighbours: Vec<[Vec<NodeId>; 2]> = vec![[Vec::new(), Vec::new()]; n];
    for (e, edge) in dt.edges().iter().enumerate() {
        let c = edge_channel[e].index();
        neighbours[edge.from][c].push(edge.to);
        neighbours[edge.to][c].push(edge.from);
    }
    neighbours
        .iter()
        .enumerate()
        .map(|(v, per_channel)| {
            let state = |nbrs: &Vec<NodeId>| {
                let mut sectors: Vec<usize> = nbrs
                    .iter()
                    .map(|&w| antenna.sector_of(geom.azimuth_deg(v, w)))
                    .collect();
                sectors.sort_unstable();
                sectors.dedup();
                let omni = antenna.falls_back(sectors.len());
                AntennaState {
                    sectors,
                    links: nbrs.len(),
                    omni,
                }
            };
            [state(&per_channel[0]), state(&per_channel[1])]
        })
        .collect()
}

/// Full radio derivation for a rooted tree.
pub fn derive_radio<S: Scalar>(
    geom: &Geometry<S>,
    dt: &DirectedTree,
    limits: &StructureLimits,
    antenna: &AntennaModel,
    plan: &ChannelPlan,
) -> Result<RadioConfig, RadioError> {
    let hub_partition = partition_hub_children(dt, geom, limits)?;
    let edge_channel = assign_channels(dt, &hub_partition);
    let edge_freq_slot = assign_frequency_slots(dt, &edge_channel);
    let edge_freq_mhz = edge_freq_slot
        .iter()
        .zip(&edge_channel)
        .map(|(&s, &c)| plan.freq_mhz(c, s))
        .collect();
    let antennas = configure_beams(geom, dt, &edge_channel, antenna);
    Ok(RadioConfig {
        hub_partition,
        edge_channel,
        edge_freq_slot,
        edge_freq_mhz,
        antennas,
    })
}
