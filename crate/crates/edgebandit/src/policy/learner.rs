//! Shared learning state of the SEEN-family policies: per-station context
//! partitions, per-cell demand estimators, the under-explored test, and the
//! slot sequencing guards.

use std::collections::BTreeSet;

use crate::context::{control_threshold, CellIndex, ContextPartition, EstimatorStore};
use crate::error::{Error, Result};
use crate::network::SbsConfig;
use crate::policy::{SlotInput, SlotOutcome};

pub(crate) struct Learner {
    pub partitions: Vec<ContextPartition>,
    pub stores: Vec<EstimatorStore>,
    pub alphas: Vec<f64>,
    pub dims: Vec<u32>,
    pub budget: u32,
    /// Slots fully processed (select + observe).
    pub slot: u64,
    /// Per station: slots in which it was rented while under-explored.
    pub ue_selected: Vec<u64>,
    /// Under-explored set of the pending slot, tallied in observe.
    pub pending_ue: BTreeSet<usize>,
}

impl Learner {
    pub fn new(stations: &[SbsConfig], horizon: u64, budget: u32, d_max: f64) -> Result<Self> {
        if budget < 1 || budget as usize > stations.len() {
            return Err(Error::Config(format!(
                "budget {budget} outside [1, {}]",
                stations.len()
            )));
        }
        let mut partitions = Vec::with_capacity(stations.len());
        let mut stores = Vec::with_capacity(stations.len());
        for s in stations {
            s.validate()?;
            partitions.push(ContextPartition::for_horizon(horizon, s.holder_alpha, s.context_dims)?);
            stores.push(EstimatorStore::new(d_max)?);
        }
        Ok(Self {
            alphas: stations.iter().map(|s| s.holder_alpha).collect(),
            dims: stations.iter().map(|s| s.context_dims).collect(),
            partitions,
            stores,
            budget,
            slot: 0,
            ue_selected: vec![0; stations.len()],
            pending_ue: BTreeSet::new(),
        })
    }

    pub fn cell_of(&self, n: usize, input: &SlotInput, user: usize) -> Result<CellIndex> {
        let x = &input.users[user].context;
        if x.len() < self.dims[n] as usize {
            return Err(Error::Protocol(format!(
                "user context has {} dims, station {n} monitors {}",
                x.len(),
                self.dims[n]
            )));
        }
        self.partitions[n].locate(&x[..self.dims[n] as usize])
    }

    /// Stations with at least one current user in a cell whose counter is
    /// below `K(t)`. Stations without users are never under-explored.
    pub fn under_explored(&self, input: &SlotInput) -> Result<BTreeSet<usize>> {
        let mut out = BTreeSet::new();
        for n in 0..input.n_sbs {
            let threshold = control_threshold(input.t, self.alphas[n], self.dims[n])?;
            for &m in &input.sbs_users[n] {
                let cell = self.cell_of(n, input, m)?;
                if (self.stores[n].count(&cell) as f64) < threshold {
                    out.insert(n);
                    break;
                }
            }
        }
        Ok(out)
    }

    /// `sum over station n's users of weight * d_hat(cell)`.
    pub fn estimated_utility(&self, input: &SlotInput, n: usize) -> Result<f64> {
        let mut score = 0.0;
        for &m in &input.sbs_users[n] {
            let cell = self.cell_of(n, input, m)?;
            let link = input.users[m]
                .link_to(n)
                .ok_or_else(|| Error::Protocol(format!("user {m} listed for station {n} without a link")))?;
            score += link.weight * self.stores[n].mean(&cell);
        }
        Ok(score)
    }

    pub fn check_select(&self, input: &SlotInput, n_sbs: usize) -> Result<()> {
        if input.t != self.slot + 1 {
            return Err(Error::Protocol(format!(
                "select called for slot {}, expected {}",
                input.t,
                self.slot + 1
            )));
        }
        if input.budget != self.budget || input.n_sbs != n_sbs {
            return Err(Error::Config("slot input does not match policy construction".into()));
        }
        Ok(())
    }

    /// Demand may only be reported for users reachable by a selected
    /// station, and must be reported for every user of a selected station.
    pub fn check_observe(&self, input: &SlotInput, outcome: &SlotOutcome<'_>) -> Result<BTreeSet<usize>> {
        if input.t != self.slot + 1 {
            return Err(Error::Protocol(format!(
                "observe called for slot {}, expected {}",
                input.t,
                self.slot + 1
            )));
        }
        let selected: BTreeSet<usize> = outcome.selected.iter().copied().collect();
        for (m, d) in outcome.observed_demand.iter().enumerate() {
            if d.is_some() && !input.users[m].covering.iter().any(|l| selected.contains(&l.sbs)) {
                return Err(Error::Protocol(format!(
                    "demand reported for user {m} of unselected stations"
                )));
            }
        }
        for &n in &selected {
            for &m in &input.sbs_users[n] {
                if outcome.observed_demand[m].is_none() {
                    return Err(Error::Protocol(format!(
                        "missing demand for user {m} of selected station {n}"
                    )));
                }
            }
        }
        Ok(selected)
    }

    /// Close the slot: tally under-explored selections and advance time.
    pub fn finish_observe(&mut self, input: &SlotInput, selected: &BTreeSet<usize>) {
        for &n in selected {
            if self.pending_ue.contains(&n) {
                self.ue_selected[n] += 1;
            }
        }
        self.slot = input.t;
        self.pending_ue.clear();
    }
}
