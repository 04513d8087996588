//! Physical topology primitives and the per-slot utility model.
//!
//! Tasks can be served at a small-cell base station (SBS) over one wireless
//! hop, or shipped through the macro base station (MBS) and the backbone to
//! the cloud. The value of renting an SBS for a user is the per-task delay
//! reduction `u~ = cloud_delay - edge_delay`; slot utility weighs that
//! reduction by the user's realized task demand.
//!
//! All quantities are SI: meters, seconds, Hz, bits/s, watts, cycles/s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coarse land-use class of an SBS's surroundings; drives which user
/// population mix shows up in its cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaType {
    School,
    Business,
    Public,
}

/// One small-cell base station with an attached edge server.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SbsConfig {
    pub id: usize,
    /// Position in meters within the scenario area.
    pub position: (f64, f64),
    /// Service radius in meters.
    pub range_m: f64,
    /// Edge server CPU speed in cycles/s.
    pub cpu_hz: f64,
    pub area_type: AreaType,
    /// Number of context dimensions this station monitors.
    pub context_dims: u32,
    /// Smoothness constants of the demand surface over this station's
    /// context space.
    pub holder_l: f64,
    pub holder_alpha: f64,
}

impl SbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.range_m > 0.0) || !(self.cpu_hz > 0.0) {
            return Err(Error::Config(format!("sbs {}: range and cpu must be positive", self.id)));
        }
        if self.context_dims < 1 {
            return Err(Error::Config(format!("sbs {}: context_dims must be >= 1", self.id)));
        }
        if !(self.holder_l > 0.0) || !(self.holder_alpha > 0.0) {
            return Err(Error::Config(format!("sbs {}: holder constants must be positive", self.id)));
        }
        Ok(())
    }
}

/// Cloud path parameters: remote CPU plus the backbone hop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CloudConfig {
    /// Cloud server CPU speed in cycles/s.
    pub cpu_hz: f64,
    /// Backbone rate interval in bits/s; one value is drawn per slot.
    pub backbone_bps_min: f64,
    pub backbone_bps_max: f64,
    /// Backbone round trip in seconds.
    pub round_trip_s: f64,
}

impl CloudConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cpu_hz > 0.0)
            || !(self.backbone_bps_min > 0.0)
            || !(self.backbone_bps_max >= self.backbone_bps_min)
            || !(self.round_trip_s > 0.0)
        {
            return Err(Error::Config("cloud parameters must be positive with max >= min".into()));
        }
        Ok(())
    }
}

/// Wireless channel parameters shared by all uplinks of one station class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Noise power in W.
    pub noise_w: f64,
    /// Interference power in W.
    pub interference_w: f64,
    /// Path loss exponent for the deterministic gain model.
    pub pathloss_exponent: f64,
    /// User equipment transmit power in W.
    pub user_tx_power_w: f64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) || !(self.noise_w > 0.0) || !(self.interference_w >= 0.0) {
            return Err(Error::Config("channel: bandwidth/noise must be positive, interference >= 0".into()));
        }
        if !(self.pathloss_exponent > 0.0) || !(self.user_tx_power_w > 0.0) {
            return Err(Error::Config("channel: pathloss exponent and tx power must be positive".into()));
        }
        Ok(())
    }
}

/// Workload shape of the single application being placed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskProfile {
    /// Input size of one task in bits.
    pub input_bits: f64,
    /// CPU cycles needed by one task.
    pub cycles: f64,
    /// Maximum tasks one user can request in one slot.
    pub d_max: u32,
}

impl TaskProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.input_bits > 0.0) || !(self.cycles > 0.0) || self.d_max < 1 {
            return Err(Error::Config("task profile fields must be positive".into()));
        }
        Ok(())
    }
}

/// One user's state within a single slot.
#[derive(Debug, Clone)]
pub struct UserSlotState {
    pub id: usize,
    pub position: (f64, f64),
    /// Full context vector in `[0,1]^D`; a station monitoring `d` dims sees
    /// the first `d` coordinates.
    pub context: Vec<f64>,
    /// `(sbs_id, uplink gain)` for every station whose range covers this
    /// user. Gains are strictly positive; out-of-range stations are absent.
    pub sbs_gains: Vec<(usize, f64)>,
    /// Uplink gain to the MBS (always positive; the MBS is ubiquitous).
    pub mbs_gain: f64,
}

impl UserSlotState {
    /// First `dims` context coordinates, as seen by a station monitoring
    /// that many dimensions.
    pub fn context_slice(&self, dims: u32) -> &[f64] {
        &self.context[..dims as usize]
    }

    pub fn gain_to(&self, sbs_id: usize) -> f64 {
        self.sbs_gains
            .iter()
            .find(|(id, _)| *id == sbs_id)
            .map(|(_, g)| *g)
            .unwrap_or(0.0)
    }
}

/// Deterministic path gain `(d / 1m)^(-exponent)`, zero beyond `range_m`.
///
/// Distances below the 1 m reference are clamped to it so the gain stays
/// finite for co-located endpoints.
pub fn channel_gain(distance_m: f64, range_m: f64, pathloss_exponent: f64) -> f64 {
    if distance_m > range_m {
        return 0.0;
    }
    distance_m.max(1.0).powf(-pathloss_exponent)
}

/// Shannon uplink rate `W * log2(1 + P*H/(N0 + I))` in bits/s; 0 when the
/// link is out of range (`gain == 0`).
pub fn uplink_rate(channel: &ChannelConfig, gain: f64, tx_power_w: f64) -> f64 {
    if gain <= 0.0 {
        return 0.0;
    }
    let snr = tx_power_w * gain / (channel.noise_w + channel.interference_w);
    channel.bandwidth_hz * (1.0 + snr).log2()
}

/// Per-task delay at an edge server: uplink transmission plus computation.
pub fn edge_delay(rate_bps: f64, task: &TaskProfile, sbs_cpu_hz: f64) -> Result<f64> {
    if !(rate_bps > 0.0) {
        return Err(Error::Unreachable("zero uplink rate: user outside SBS coverage".into()));
    }
    Ok(task.input_bits / rate_bps + task.cycles / sbs_cpu_hz)
}

/// Per-task delay through the cloud: MBS uplink, cloud computation, and the
/// backbone hop `input/backbone + round_trip`.
pub fn cloud_delay(
    mbs_rate_bps: f64,
    task: &TaskProfile,
    cloud: &CloudConfig,
    backbone_bps: f64,
) -> Result<f64> {
    if !(mbs_rate_bps > 0.0) {
        return Err(Error::Unreachable("zero MBS uplink rate: check MBS channel configuration".into()));
    }
    if !(backbone_bps > 0.0) {
        return Err(Error::Unreachable("backbone rate must be positive".into()));
    }
    Ok(task.input_bits / mbs_rate_bps
        + task.cycles / cloud.cpu_hz
        + task.input_bits / backbone_bps
        + cloud.round_trip_s)
}

/// Per-task delay reduction `u~ = cloud_delay - edge_delay` for one
/// user-station pair. May be negative: a slow edge server can lose to the
/// cloud, and the value is deliberately not clipped.
pub fn delay_reduction(
    edge_rate_bps: f64,
    mbs_rate_bps: f64,
    task: &TaskProfile,
    sbs_cpu_hz: f64,
    cloud: &CloudConfig,
    backbone_bps: f64,
) -> Result<f64> {
    let q_cloud = cloud_delay(mbs_rate_bps, task, cloud, backbone_bps)?;
    let q_edge = edge_delay(edge_rate_bps, task, sbs_cpu_hz)?;
    Ok(q_cloud - q_edge)
}

/// Slot utility: sum of `weight * demand` over all served users of all
/// rented stations. Callers flatten the per-station user lists; additivity
/// across stations is then immediate.
pub fn slot_utility(weights: &[f64], demands: &[f64]) -> Result<f64> {
    if weights.len() != demands.len() {
        return Err(Error::Parameter(format!(
            "weights ({}) and demands ({}) differ in length",
            weights.len(),
            demands.len()
        )));
    }
    Ok(weights.iter().zip(demands).map(|(u, d)| u * d).sum())
}
