//! Learning substrate: context vectors, uniform hypercube partitions of
//! `[0,1]^D`, and per-cell sample-mean demand estimators.
//!
//! Each base station observes user contexts in its own `[0,1]^{D_n}` space.
//! The space is split into `h^D` identical hypercubes and demand is learned
//! independently per cell via a running sample mean. The granularity `h` and
//! the exploration control threshold `K(t)` come from the horizon-tuned
//! schedule below.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A user context: coordinates in `[0,1]`, one per monitored dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVector(Vec<f64>);

impl ContextVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Parameter("context must have at least one dimension".into()));
        }
        for (i, &c) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&c) || !c.is_finite() {
                return Err(Error::Domain(format!("context coordinate {i} = {c} outside [0,1]")));
            }
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }
}

impl std::ops::Deref for ContextVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Index of one hypercube, componentwise in `[0, h-1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex(pub Vec<u32>);

/// Horizon-tuned cells per dimension: `ceil(T^(1/(3*alpha + D)))`.
pub fn partition_granularity(horizon: u64, alpha: f64, dims: u32) -> Result<u32> {
    if horizon < 1 {
        return Err(Error::Parameter("horizon must be >= 1".into()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    if dims < 1 {
        return Err(Error::Parameter("dims must be >= 1".into()));
    }
    let exponent = 1.0 / (3.0 * alpha + dims as f64);
    Ok(ceil_pow(horizon as f64, exponent))
}

// Ceiling of base^exp that tolerates float noise when the true power is an
// integer (e.g. 32^(1/5) must give 2, not 3).
fn ceil_pow(base: f64, exponent: f64) -> u32 {
    let v = base.powf(exponent);
    let nearest = v.round();
    if (v - nearest).abs() < 1e-9 {
        nearest as u32
    } else {
        v.ceil() as u32
    }
}

/// Exploration control threshold `K(t) = t^(2*alpha/(3*alpha + D)) * ln(t)`.
///
/// A cell with a visit counter below `K(t)` marks its station as
/// under-explored in slot `t`. `K(1) = 0`, so slot 1 always exploits.
pub fn control_threshold(t: u64, alpha: f64, dims: u32) -> Result<f64> {
    if t < 1 {
        return Err(Error::Parameter("slot index must be >= 1".into()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    if dims < 1 {
        return Err(Error::Parameter("dims must be >= 1".into()));
    }
    let z = 2.0 * alpha / (3.0 * alpha + dims as f64);
    Ok((t as f64).powf(z) * (t as f64).ln())
}

/// Uniform grid over `[0,1]^dims` with `cells_per_dim` half-open boxes per
/// axis; the top edge of the last box is closed so `locate` is total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextPartition {
    dims: u32,
    cells_per_dim: u32,
}

impl ContextPartition {
    pub fn new(dims: u32, cells_per_dim: u32) -> Result<Self> {
        if dims < 1 || cells_per_dim < 1 {
            return Err(Error::Parameter("dims and cells_per_dim must be >= 1".into()));
        }
        Ok(Self { dims, cells_per_dim })
    }

    /// Partition tuned for a horizon and smoothness exponent.
    pub fn for_horizon(horizon: u64, alpha: f64, dims: u32) -> Result<Self> {
        Self::new(dims, partition_granularity(horizon, alpha, dims)?)
    }

    pub fn dims(&self) -> u32 {
        self.dims
    }

    pub fn cells_per_dim(&self) -> u32 {
        self.cells_per_dim
    }

    /// Total number of cells, `h^D`.
    pub fn cell_count(&self) -> u64 {
        (self.cells_per_dim as u64).pow(self.dims)
    }

    /// Map a context to its cell: `idx_k = min(floor(x_k * h), h - 1)`.
    pub fn locate(&self, x: &[f64]) -> Result<CellIndex> {
        if x.len() != self.dims as usize {
            return Err(Error::Parameter(format!(
                "context has {} dims, partition expects {}",
                x.len(),
                self.dims
            )));
        }
        let h = self.cells_per_dim;
        let mut idx = Vec::with_capacity(x.len());
        for (k, &c) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&c) || !c.is_finite() {
                return Err(Error::Domain(format!("coordinate {k} = {c} outside [0,1]")));
            }
            idx.push(((c * h as f64).floor() as u32).min(h - 1));
        }
        Ok(CellIndex(idx))
    }

    /// Geometric center of a cell.
    pub fn cell_center(&self, cell: &CellIndex) -> Vec<f64> {
        let h = self.cells_per_dim as f64;
        cell.0.iter().map(|&i| (i as f64 + 0.5) / h).collect()
    }

    /// All cell indices in lexicographic order. Intended for small grids
    /// (metrics and tests); the learner itself never materializes this.
    pub fn all_cells(&self) -> Vec<CellIndex> {
        let mut out = Vec::with_capacity(self.cell_count() as usize);
        let mut cur = vec![0u32; self.dims as usize];
        loop {
            out.push(CellIndex(cur.clone()));
            let mut k = self.dims as usize;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                cur[k] += 1;
                if cur[k] < self.cells_per_dim {
                    break;
                }
                cur[k] = 0;
            }
        }
    }
}

/// Running statistics of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub count: u64,
    pub mean: f64,
}

impl CellStats {
    const EMPTY: CellStats = CellStats { count: 0, mean: 0.0 };
}

/// Per-cell visit counters and sample-mean demand estimates.
///
/// Cells are materialized lazily on first update; an unvisited cell reports
/// count 0 and mean 0. A `BTreeMap` keeps iteration order deterministic so
/// downstream float reductions are bit-stable across runs.
#[derive(Debug, Clone)]
pub struct EstimatorStore {
    cells: BTreeMap<CellIndex, CellStats>,
    d_max: f64,
}

impl EstimatorStore {
    pub fn new(d_max: f64) -> Result<Self> {
        if !(d_max > 0.0) || !d_max.is_finite() {
            return Err(Error::Parameter(format!("d_max must be positive, got {d_max}")));
        }
        Ok(Self { cells: BTreeMap::new(), d_max })
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Fold one observed demand into the cell's running mean:
    /// `mean <- (mean*count + demand) / (count + 1)`, `count <- count + 1`.
    pub fn update(&mut self, cell: &CellIndex, demand: f64) -> Result<()> {
        if !(0.0..=self.d_max).contains(&demand) || !demand.is_finite() {
            return Err(Error::Domain(format!(
                "demand {demand} outside [0, {}]",
                self.d_max
            )));
        }
        let entry = self.cells.entry(cell.clone()).or_insert(CellStats::EMPTY);
        let c = entry.count as f64;
        entry.mean = (entry.mean * c + demand) / (c + 1.0);
        entry.count += 1;
        Ok(())
    }

    pub fn stats(&self, cell: &CellIndex) -> CellStats {
        self.cells.get(cell).copied().unwrap_or(CellStats::EMPTY)
    }

    pub fn mean(&self, cell: &CellIndex) -> f64 {
        self.stats(cell).mean
    }

    pub fn count(&self, cell: &CellIndex) -> u64 {
        self.stats(cell).count
    }

    /// Visited cells in deterministic (lexicographic) order.
    pub fn visited(&self) -> impl Iterator<Item = (&CellIndex, &CellStats)> {
        self.cells.iter()
    }

    pub fn visited_len(&self) -> usize {
        self.cells.len()
    }
}
