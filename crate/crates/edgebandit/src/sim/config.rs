//! Scenario configuration: a single TOML document with a versioned schema.
//!
//! Every physical quantity is SI (meters, seconds, Hz, bits/s, watts,
//! cycles/s). Defaults reproduce the desk-scale reference scenario: ten
//! stations in a 1 km square, 150 m range, budget 3, 20 MHz channels,
//! 2.8 GHz edge servers against a 5.6 GHz cloud behind a 10-20 Mbps
//! backbone with 100 ms round trip.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demand::{self, DemandFunction, GaussianBump};
use crate::error::{Error, Result};
use crate::network::{ChannelConfig, CloudConfig, SbsConfig, TaskProfile};

pub const SCHEMA_VERSION: u32 = 1;

/// How users attach to stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    /// Each user connects only to its nearest covering station; coverage
    /// behaves as if disjoint.
    Nearest,
    /// Each user may be served by any covering station and offloads to the
    /// best-gain rented one.
    BestGain,
}

/// Which policy drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    Oracle,
    Seen,
    SeenO,
    Cucb,
    C2ucb,
    EpsGreedy,
    Random,
}

impl PolicyName {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyName::Oracle => "oracle",
            PolicyName::Seen => "seen",
            PolicyName::SeenO => "seen-o",
            PolicyName::Cucb => "cucb",
            PolicyName::C2ucb => "c2ucb",
            PolicyName::EpsGreedy => "eps-greedy",
            PolicyName::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "oracle" => PolicyName::Oracle,
            "seen" => PolicyName::Seen,
            "seen-o" | "seeno" => PolicyName::SeenO,
            "cucb" => PolicyName::Cucb,
            "c2ucb" => PolicyName::C2ucb,
            "eps-greedy" | "eps" => PolicyName::EpsGreedy,
            "random" => PolicyName::Random,
            other => return Err(Error::Config(format!("unknown policy `{other}`"))),
        })
    }

    pub fn all() -> [PolicyName; 7] {
        [
            PolicyName::Oracle,
            PolicyName::Seen,
            PolicyName::SeenO,
            PolicyName::Cucb,
            PolicyName::C2ucb,
            PolicyName::EpsGreedy,
            PolicyName::Random,
        ]
    }
}

/// Demand surface selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandSpec {
    /// The bundled default surface, instantiated at the scenario's
    /// context dimension.
    DefaultSurface,
    Constant { value: f64 },
    GaussianBumps { base: f64, bumps: Vec<BumpSpec> },
    /// Plain-text grid file with header `dims,h,d_max`.
    TableFile { path: String },
    TableInline { nodes_per_dim: u32, values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub height: f64,
    pub width: f64,
}

impl DemandSpec {
    pub fn build(&self, dims: u32, d_max: u32) -> Result<DemandFunction> {
        let d_max_f = d_max as f64;
        let f = match self {
            DemandSpec::DefaultSurface => {
                let f = demand::default_surface(dims);
                if f.d_max() != d_max_f {
                    return Err(Error::Config(format!(
                        "default demand surface is built for d_max = {}, task profile has {d_max}",
                        f.d_max()
                    )));
                }
                f
            }
            DemandSpec::Constant { value } => DemandFunction::constant(dims, *value, d_max_f)?,
            DemandSpec::GaussianBumps { base, bumps } => DemandFunction::gaussian_bumps(
                dims,
                d_max_f,
                *base,
                bumps
                    .iter()
                    .map(|b| GaussianBump { center: b.center.clone(), height: b.height, width: b.width })
                    .collect(),
            )?,
            DemandSpec::TableFile { path } => {
                let f = DemandFunction::from_table_file(Path::new(path))?;
                if f.dims() != dims || f.d_max() != d_max_f {
                    return Err(Error::Config(format!(
                        "demand table ({} dims, d_max {}) does not match scenario ({dims} dims, d_max {d_max})",
                        f.dims(),
                        f.d_max()
                    )));
                }
                f
            }
            DemandSpec::TableInline { nodes_per_dim, values } => {
                DemandFunction::table(dims, *nodes_per_dim, values.clone(), d_max_f)?
            }
        };
        Ok(f)
    }
}

/// Optional explicit station entry; absent fields fall back to the shared
/// scenario parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SbsEntry {
    pub position: (f64, f64),
    pub range_m: Option<f64>,
    pub cpu_hz: Option<f64>,
    pub area_type: Option<crate::network::AreaType>,
    pub context_dims: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Config schema version; readers reject unknown majors.
    pub schema: u32,
    pub name: String,

    /// Side of the square area in meters.
    pub area_m: f64,
    pub n_sbs: usize,
    pub budget: u32,
    pub horizon: u64,
    /// Default run seed; drivers usually supply their own list.
    pub seed: u64,
    /// Station placement seed, separate from the run seed so replications
    /// share one layout.
    pub placement_seed: u64,
    /// Mean users per station per slot (Poisson).
    pub arrival_rate: f64,
    pub association: Association,
    /// Probabilities of assigning each station the school / business /
    /// public area type.
    pub area_type_weights: [f64; 3],
    /// Global context dimension D; stations monitor their first `D_n`
    /// coordinates.
    pub context_dims: u32,
    /// Optional per-station dims (length n_sbs); empty means all stations
    /// monitor all `context_dims` coordinates.
    pub sbs_context_dims: Vec<u32>,
    pub sbs_range_m: f64,
    pub sbs_cpu_hz: f64,
    /// Smoothness exponent used for partition tuning.
    pub holder_alpha: f64,
    /// If set, uniformly rescale station ranges so the measured overlap
    /// degree approaches this target (0 = shrink to disjoint coverage).
    pub overlap_target: Option<f64>,
    /// Hard cap on overlap component size (decision enumeration is
    /// exponential in it).
    pub component_cap: u32,
    /// Metrics checkpoint period in slots.
    pub mse_every: u64,
    /// Grid step for the overlap-degree estimate, meters.
    pub overlap_grid_m: f64,
    /// Exploration probability of the epsilon-greedy baseline.
    pub epsilon: f64,
    /// Cells per dimension of the c2ucb aggregate-context partition;
    /// 0 = horizon-tuned automatically.
    pub c2ucb_cells: u32,
    /// Max users per station used for UCB reward normalization;
    /// 0 = derived from the arrival rate.
    pub norm_max_users: f64,
    /// Record per-user slot detail in traces (memory-heavy on long runs).
    pub record_users: bool,
    pub policy: PolicyName,

    pub task: TaskProfile,
    pub channel: ChannelConfig,
    /// MBS uplink channel; `None` reuses `channel`.
    pub mbs_channel: Option<ChannelConfig>,
    pub cloud: CloudConfig,
    pub demand: DemandSpec,
    /// Explicit stations; empty means scatter `n_sbs` randomly.
    pub sbs: Vec<SbsEntry>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            name: "default".into(),
            area_m: 1000.0,
            n_sbs: 10,
            budget: 3,
            horizon: 500,
            seed: 1,
            placement_seed: 42,
            arrival_rate: 8.0,
            association: Association::Nearest,
            area_type_weights: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            context_dims: 2,
            sbs_context_dims: Vec::new(),
            sbs_range_m: 150.0,
            sbs_cpu_hz: 2.8e9,
            holder_alpha: 1.0,
            overlap_target: None,
            component_cap: 12,
            mse_every: 20,
            overlap_grid_m: 1.0,
            epsilon: 0.1,
            c2ucb_cells: 0,
            norm_max_users: 0.0,
            record_users: false,
            policy: PolicyName::Seen,
            task: TaskProfile { input_bits: 1e6, cycles: 2e8, d_max: 10 },
            channel: ChannelConfig {
                bandwidth_hz: 20e6,
                noise_w: 1e-13,
                interference_w: 0.0,
                pathloss_exponent: 3.5,
                user_tx_power_w: 0.01,
            },
            mbs_channel: None,
            cloud: CloudConfig {
                cpu_hz: 5.6e9,
                backbone_bps_min: 1e7,
                backbone_bps_max: 2e7,
                round_trip_s: 0.1,
            },
            demand: DemandSpec::DefaultSurface,
            sbs: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad scenario config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn mbs_channel(&self) -> &ChannelConfig {
        self.mbs_channel.as_ref().unwrap_or(&self.channel)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {} (this build reads {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if self.n_sbs == 0 || self.horizon == 0 {
            return Err(Error::Config("n_sbs and horizon must be positive".into()));
        }
        if self.budget < 1 || self.budget as usize > self.n_sbs {
            return Err(Error::Config(format!(
                "budget {} outside [1, {}]",
                self.budget, self.n_sbs
            )));
        }
        if !(self.area_m > 0.0) || !(self.sbs_range_m > 0.0) || !(self.sbs_cpu_hz > 0.0) {
            return Err(Error::Config("area, range, and cpu must be positive".into()));
        }
        if !(self.arrival_rate >= 0.0) {
            return Err(Error::Config("arrival_rate must be non-negative".into()));
        }
        if self.context_dims < 1 {
            return Err(Error::Config("context_dims must be >= 1".into()));
        }
        if !self.sbs_context_dims.is_empty() {
            if self.sbs_context_dims.len() != self.n_sbs {
                return Err(Error::Config("sbs_context_dims must list one value per station".into()));
            }
            for &d in &self.sbs_context_dims {
                if d < 1 || d > self.context_dims {
                    return Err(Error::Config(format!(
                        "per-station dims must lie in [1, {}]",
                        self.context_dims
                    )));
                }
            }
        }
        let wsum: f64 = self.area_type_weights.iter().sum();
        if !(wsum > 0.0) || self.area_type_weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Config("area_type_weights must be non-negative and sum > 0".into()));
        }
        if !(self.holder_alpha > 0.0) {
            return Err(Error::Config("holder_alpha must be positive".into()));
        }
        if let Some(t) = self.overlap_target {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::Config(format!("overlap_target {t} outside [0,1)")));
            }
        }
        if !(self.overlap_grid_m > 0.0) {
            return Err(Error::Config("overlap_grid_m must be positive".into()));
        }
        if !(0.0 < self.epsilon && self.epsilon < 1.0) {
            return Err(Error::Config("epsilon must be in (0,1)".into()));
        }
        if self.mse_every == 0 {
            return Err(Error::Config("mse_every must be positive".into()));
        }
        if !self.sbs.is_empty() && self.sbs.len() != self.n_sbs {
            return Err(Error::Config("explicit sbs list must have n_sbs entries".into()));
        }
        self.task.validate()?;
        self.channel.validate()?;
        if let Some(mbs) = &self.mbs_channel {
            mbs.validate()?;
        }
        self.cloud.validate()?;
        Ok(())
    }

    /// Context dimension monitored by station `n`.
    pub fn dims_of(&self, n: usize) -> u32 {
        self.sbs_context_dims.get(n).copied().unwrap_or(self.context_dims)
    }

    /// Build the scenario's demand surface.
    pub fn demand_function(&self) -> Result<DemandFunction> {
        self.demand.build(self.context_dims, self.task.d_max)
    }

    /// Shared station fields applied to a generated position.
    pub(crate) fn station_at(
        &self,
        id: usize,
        position: (f64, f64),
        area_type: crate::network::AreaType,
        holder_l: f64,
    ) -> SbsConfig {
        SbsConfig {
            id,
            position,
            range_m: self.sbs_range_m,
            cpu_hz: self.sbs_cpu_hz,
            area_type,
            context_dims: self.dims_of(id),
            holder_l,
            holder_alpha: self.holder_alpha,
        }
    }
}
