//! SEEN: the contextual-combinatorial bandit policy for disjoint coverage.
//!
//! Each station partitions its own context space by the horizon-tuned
//! granularity and keeps per-cell sample-mean demand estimates. A station
//! counts as under-explored in slot `t` if one of its current users falls
//! into a cell visited fewer than `K(t)` times. Slots with under-explored
//! stations explore (renting them, randomly when there are more than `b`);
//! otherwise the policy exploits by renting the top-`b` stations ranked by
//! estimated utility `sum_m weight * d_hat(cell_m)`. Greedy top-`b` is
//! exact here because per-station scores are additive and independent.

use std::collections::BTreeSet;

use rand_chacha::ChaCha20Rng;

use crate::context::EstimatorStore;
use crate::error::Result;
use crate::network::SbsConfig;
use crate::policy::learner::Learner;
use crate::policy::{sample_subset, top_k_by_score, Phase, Policy, Selection, SlotInput, SlotOutcome};

pub struct Seen {
    learner: Learner,
}

impl Seen {
    pub fn new(stations: &[SbsConfig], horizon: u64, budget: u32, d_max: f64) -> Result<Self> {
        Ok(Self { learner: Learner::new(stations, horizon, budget, d_max)? })
    }

    /// Stations whose current users hit an insufficiently visited cell.
    pub fn under_explored(&self, input: &SlotInput) -> Result<BTreeSet<usize>> {
        self.learner.under_explored(input)
    }

    /// Estimated utility of renting station `n` this slot.
    pub fn estimated_utility(&self, input: &SlotInput, n: usize) -> Result<f64> {
        self.learner.estimated_utility(input, n)
    }

    pub fn ue_selection_counts(&self) -> &[u64] {
        &self.learner.ue_selected
    }

    fn scores(&self, input: &SlotInput) -> Result<Vec<f64>> {
        (0..input.n_sbs)
            .map(|n| self.learner.estimated_utility(input, n))
            .collect()
    }
}

impl Policy for Seen {
    fn name(&self) -> &'static str {
        "seen"
    }

    fn select(&mut self, input: &SlotInput, rng: &mut ChaCha20Rng) -> Result<Selection> {
        self.learner.check_select(input, self.learner.stores.len())?;
        let b = self.learner.budget as usize;
        let ue = self.learner.under_explored(input)?;
        self.learner.pending_ue = ue.clone();
        let q = ue.len();

        let selection = if q == 0 {
            let scores = self.scores(input)?;
            Selection { sbs: top_k_by_score(&scores, |_| true, b), phase: Phase::Exploit }
        } else if q >= b {
            let pool: Vec<usize> = ue.iter().copied().collect();
            Selection { sbs: sample_subset(rng, &pool, b), phase: Phase::Explore }
        } else {
            let scores = self.scores(input)?;
            let mut sbs: Vec<usize> = ue.iter().copied().collect();
            sbs.extend(top_k_by_score(&scores, |n| !ue.contains(&n), b - q));
            sbs.sort_unstable();
            Selection { sbs, phase: Phase::Explore }
        };
        debug_assert_eq!(selection.sbs.len(), b);
        Ok(selection)
    }

    fn observe(&mut self, input: &SlotInput, outcome: &SlotOutcome<'_>) -> Result<()> {
        let selected = self.learner.check_observe(input, outcome)?;
        for &n in &selected {
            for &m in &input.sbs_users[n] {
                let demand = outcome.observed_demand[m].expect("validated above");
                let cell = self.learner.cell_of(n, input, m)?;
                self.learner.stores[n].update(&cell, demand as f64)?;
            }
        }
        self.learner.finish_observe(input, &selected);
        Ok(())
    }

    fn estimator(&self, sbs: usize) -> Option<&EstimatorStore> {
        self.learner.stores.get(sbs)
    }

    fn ue_selection_count(&self, sbs: usize) -> Option<u64> {
        self.learner.ue_selected.get(sbs).copied()
    }
}
