//! Parametric link model: free-space loss, sector directivity with power
//! splitting over active beams, co-frequency interference, and a capped
//! Shannon rate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::geometry::Geometry;
use crate::num::{db_to_linear, linear_to_db, Scalar};
use crate::radio::{AntennaModel, AntennaState, BeamMode, ChannelPlan, RadioConfig};
use crate::topology::{DirectedTree, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhyParams {
    pub tx_power_dbm: f64,
    pub noise_floor_dbm: f64,
    pub bandwidth_mhz: f64,
    pub rate_cap_mbps: f64,
    /// Free-space constants: `c0 + c_d * log10(d_km) + c_f * log10(f_mhz)`.
    pub pathloss: [f64; 3],
    pub min_sinr_db: f64,
    /// Switch co-frequency interference off (SNR-only links).
    pub interference: bool,
}

impl Default for PhyParams {
    fn default() -> Self {
        Self {
            tx_power_dbm: 30.0,
            noise_floor_dbm: -94.0,
            bandwidth_mhz: 20.0,
            rate_cap_mbps: 160.0,
            pathloss: [32.45, 20.0, 20.0],
            min_sinr_db: 0.0,
            interference: true,
        }
    }
}

impl PhyParams {
    pub fn check(&self) -> Result<(), String> {
        if !(self.rate_cap_mbps > 0.0) {
            return Err("rate_cap_mbps must be positive".into());
        }
        if !(self.bandwidth_mhz > 0.0) {
            return Err("bandwidth_mhz must be positive".into());
        }
        let all = [
            self.tx_power_dbm,
            self.noise_floor_dbm,
            self.min_sinr_db,
            self.pathloss[0],
            self.pathloss[1],
            self.pathloss[2],
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err("phy parameters must be finite".into());
        }
        Ok(())
    }

    pub fn path_loss_db<S: Scalar>(&self, d_km: S, f_mhz: S) -> S {
        S::lit(self.pathloss[0]) + S::lit(self.pathloss[1]) * d_km.log10() + S::lit(self.pathloss[2]) * f_mhz.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("path loss needs positive distance and frequency (d = {d_km} km, f = {f_mhz} MHz)")]
pub struct DomainError {
    pub d_km: f64,
    pub f_mhz: f64,
}

/// Free-space path loss in dB.
pub fn path_loss_db<S: Scalar>(d_km: S, f_mhz: S) -> Result<S, DomainError> {
    if !(d_km > S::zero()) || !(f_mhz > S::zero()) {
        return Err(DomainError {
            d_km: d_km.to_f64_lossy(),
            f_mhz: f_mhz.to_f64_lossy(),
        });
    }
    Ok(PhyParams::default().path_loss_db(d_km, f_mhz))
}

/// Gain of an antenna with `active_beam_count` lit sectors in one direction.
/// Outside the lit sectors only the sidelobe floor remains.
pub fn effective_gain_dbi<S: Scalar>(antenna: &AntennaModel, active_beam_count: usize, toward_sector_active: bool) -> S {
    let peak = S::lit(antenna.peak_gain_dbi());
    let count = match antenna.mode {
        BeamMode::SingleBeam => 1,
        BeamMode::MultiBeam => active_beam_count.max(1),
    };
    if antenna.falls_back(count) {
        S::lit(antenna.omni_gain_dbi)
    } else if toward_sector_active {
        peak - S::lit(10.0) * S::lit(count as f64).log10()
    } else {
        peak - S::lit(antenna.sidelobe_rejection_db)
    }
}

/// Per-edge results aligned with [`DirectedTree::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMetrics<S> {
    pub tp: Vec<S>,
    pub sinr_db: Vec<S>,
    pub signal_dbm: Vec<S>,
    /// Negative infinity when no co-frequency transmitter exists.
    pub interference_dbm: Vec<S>,
}

/// Precomputed propagation for one instance, parameter set and channel plan.
#[derive(Debug, Clone)]
pub struct PhyModel<S> {
    pub params: PhyParams,
    pub plan: ChannelPlan,
    n: usize,
    /// `tx_power - path_loss` in mW, indexed `[freq_index][a * n + b]`.
    rx_mw: [Vec<S>; 4],
    noise_mw: S,
    azimuth: Vec<S>,
}

fn freq_index(channel: usize, slot: u8) -> usize {
    channel * 2 + slot as usize
}

impl<S: Scalar> PhyModel<S> {
    pub fn new(geom: &Geometry<S>, params: PhyParams, plan: ChannelPlan) -> Self {
        let n = geom.node_count();
        let freqs = [plan.ch0_mhz[0], plan.ch0_mhz[1], plan.ch1_mhz[0], plan.ch1_mhz[1]];
        let table = |f: f64| {
            let mut t = vec![S::zero(); n * n];
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        let pl = params.path_loss_db(geom.dist_km(a, b), S::lit(f));
                        t[a * n + b] = db_to_linear(S::lit(params.tx_power_dbm) - pl);
                    }
                }
            }
            t
        };
        let mut azimuth = vec![S::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                azimuth[a * n + b] = geom.azimuth_deg(a, b);
            }
        }
        Self {
            params,
            plan,
            n,
            rx_mw: [table(freqs[0]), table(freqs[1]), table(freqs[2]), table(freqs[3])],
            noise_mw: db_to_linear(S::lit(params.noise_floor_dbm)),
            azimuth,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    fn gain_lin(&self, antenna: &AntennaModel, state: &AntennaState, from: NodeId, to: NodeId) -> S {
        let sector = antenna.sector_of(self.azimuth[from * self.n + to]);
        let covered = state.covers(sector);
        let db: S = if antenna.mode == BeamMode::MultiBeam && state.omni {
            S::lit(antenna.omni_gain_dbi)
        } else {
            effective_gain_dbi(antenna, state.active_count(), covered)
        };
        db_to_linear(db)
    }

    /// Throughput of every tree edge.
    ///
    /// Interference at the receiver of `u -> v` sums one emission from every
    /// other node transmitting on the same frequency, seen through that
    /// node's lit sectors and through `v`'s receive antenna.
    pub fn link_metrics(&self, dt: &DirectedTree, radio: &RadioConfig, antenna: &AntennaModel) -> LinkMetrics<S> {
        let edges = dt.edges();
        let m = edges.len();
        let single = antenna.mode == BeamMode::SingleBeam;
        // Distinct transmitters per frequency index.
        let mut transmitters: [Vec<NodeId>; 4] = Default::default();
        for (e, edge) in edges.iter().enumerate() {
            let fi = freq_index(radio.edge_channel[e].index(), radio.edge_freq_slot[e]);
            if !transmitters[fi].contains(&edge.from) {
                transmitters[fi].push(edge.from);
            }
        }
        let mut out = LinkMetrics {
            tp: Vec::with_capacity(m),
            sinr_db: Vec::with_capacity(m),
            signal_dbm: Vec::with_capacity(m),
            interference_dbm: Vec::with_capacity(m),
        };
        let cap = S::lit(self.params.rate_cap_mbps);
        let bw = S::lit(self.params.bandwidth_mhz);
        let min_sinr = S::lit(self.params.min_sinr_db);
        for (e, edge) in edges.iter().enumerate() {
            let (u, v) = (edge.from, edge.to);
            let c = radio.edge_channel[e].index();
            let fi = freq_index(c, radio.edge_freq_slot[e]);
            let table = &self.rx_mw[fi];
            let tx_state = &radio.antennas[u][c];
            let rx_state = &radio.antennas[v][c];
            let signal_mw =
                table[u * self.n + v] * self.gain_lin(antenna, tx_state, u, v) * self.gain_lin(antenna, rx_state, v, u);
            let mut interference_mw = S::zero();
            if self.params.interference {
                for &x in &transmitters[fi] {
                    if x == u || x == v {
                        continue;
                    }
                    let g_tx = self.gain_lin(antenna, &radio.antennas[x][c], x, v);
                    let g_rx = self.gain_lin(antenna, rx_state, v, x);
                    interference_mw = interference_mw + table[x * self.n + v] * g_tx * g_rx;
                }
            }
            let sinr_lin = signal_mw / (self.noise_mw + interference_mw);
            let sinr_db = linear_to_db(sinr_lin);
            let mut tp = if sinr_db < min_sinr {
                S::zero()
            } else {
                (bw * (S::one() + sinr_lin).log2()).min(cap)
            };
            if single {
                tp = tp / S::lit(tx_state.links.max(1) as f64);
            }
            out.tp.push(tp);
            out.sinr_db.push(sinr_db);
            out.signal_dbm.push(linear_to_db(signal_mw));
            out.interference_dbm.push(linear_to_db(interference_mw));
        }
        out
    }
}

/// Writes `edge,freq_mhz,channel,sinr_db,tp_mbps` rows.
pub fn write_link_csv<S: Scalar, W: Write>(
    w: W,
    dt: &DirectedTree,
    radio: &RadioConfig,
    lm: &LinkMetrics<S>,
) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["edge", "freq_mhz", "channel", "sinr_db", "tp_mbps"])?;
    for (e, edge) in dt.edges().iter().enumerate() {
        wr.write_record([
            format!("{}->{}", edge.from, edge.to),
            radio.edge_freq_mhz[e].to_string(),
            radio.edge_channel[e].to_string(),
            lm.sinr_db[e].to_string(),
            lm.tp[e].to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
