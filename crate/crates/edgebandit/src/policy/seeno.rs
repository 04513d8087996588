//! SEEN-O: the SEEN extension for overlapping coverage.
//!
//! Renting decisions inside one overlap component are coupled, so the
//! exploitation step picks at most one subset per component by solving the
//! knapsack-with-conflicts exactly on current estimates. Exploration works
//! as in SEEN, except that when fewer than `b` stations are under-explored
//! the remaining budget is spent via the restricted knapsack that forces
//! every under-explored station of a touched component into its decision.
//!
//! A served user informs every station that covers it, not just the serving
//! one, so one slot can advance the estimates behind several component-wise
//! decisions at once.

use std::collections::BTreeSet;

use rand_chacha::ChaCha20Rng;

use crate::context::EstimatorStore;
use crate::error::{Error, Result};
use crate::network::SbsConfig;
use crate::overlap::{
    build_explore_kcg, decision_profit, decision_profit_excluding, enumerate_decisions,
    find_components, Component, ComponentUser, Decision, ExploreRestriction, KcgClass,
    KcgInstance, KcgOption, OverlapGraph,
};
use crate::policy::learner::Learner;
use crate::policy::{sample_subset, Phase, Policy, Selection, SlotInput, SlotOutcome};

pub struct Seeno {
    learner: Learner,
    components: Vec<Component>,
    decisions: Vec<Vec<Decision>>,
}

impl Seeno {
    pub fn new(
        stations: &[SbsConfig],
        graph: &OverlapGraph,
        horizon: u64,
        budget: u32,
        d_max: f64,
        component_cap: u32,
    ) -> Result<Self> {
        if graph.n_vertices() != stations.len() {
            return Err(Error::Config("overlap graph does not match station list".into()));
        }
        let components = find_components(graph);
        let decisions = components
            .iter()
            .map(|c| enumerate_decisions(c, component_cap))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            learner: Learner::new(stations, horizon, budget, d_max)?,
            components,
            decisions,
        })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn ue_selection_counts(&self) -> &[u64] {
        &self.learner.ue_selected
    }

    /// Per-component users with their in-component links, weights, and
    /// current demand estimates, in ascending user order.
    fn component_users(&self, input: &SlotInput, comp: &Component) -> Result<Vec<ComponentUser>> {
        let members: BTreeSet<usize> = comp.members.iter().copied().collect();
        let mut out = Vec::new();
        for (m, user) in input.users.iter().enumerate() {
            let mut gains = Vec::new();
            let mut weights = Vec::new();
            let mut estimates = Vec::new();
            for link in &user.covering {
                if members.contains(&link.sbs) {
                    let cell = self.learner.cell_of(link.sbs, input, m)?;
                    gains.push((link.sbs, link.gain));
                    weights.push(link.weight);
                    estimates.push(self.learner.stores[link.sbs].mean(&cell));
                }
            }
            if !gains.is_empty() {
                out.push(ComponentUser { gains, weights, estimates });
            }
        }
        Ok(out)
    }

    /// Full exploitation instance: every decision of every component,
    /// profits from current estimates.
    fn exploit_instance(&self, input: &SlotInput) -> Result<KcgInstance> {
        let mut classes = Vec::with_capacity(self.components.len());
        for (comp, decisions) in self.components.iter().zip(&self.decisions) {
            let users = self.component_users(input, comp)?;
            let options = decisions
                .iter()
                .enumerate()
                .map(|(idx, z)| KcgOption {
                    decision: idx,
                    cost: z.cost(),
                    profit: decision_profit(&z.sbs, &users),
                })
                .collect();
            classes.push(KcgClass { options });
        }
        Ok(KcgInstance { classes, budget: self.learner.budget })
    }

    fn union_of_chosen(&self, chosen: &[Option<usize>], kept: Option<&[Vec<usize>]>) -> Vec<usize> {
        let mut sbs = Vec::new();
        for (k, slot) in chosen.iter().enumerate() {
            if let Some(opt_idx) = slot {
                let decision_idx = match kept {
                    Some(kept) => kept[k][*opt_idx],
                    None => *opt_idx,
                };
                sbs.extend_from_slice(&self.decisions[k][decision_idx].sbs);
            }
        }
        sbs.sort_unstable();
        sbs.dedup();
        sbs
    }
}

impl Policy for Seeno {
    fn name(&self) -> &'static str {
        "seen-o"
    }

    fn select(&mut self, input: &SlotInput, rng: &mut ChaCha20Rng) -> Result<Selection> {
        self.learner.check_select(input, self.learner.stores.len())?;
        let b = self.learner.budget as usize;
        let ue = self.learner.under_explored(input)?;
        self.learner.pending_ue = ue.clone();
        let q = ue.len();

        if q == 0 {
            let inst = self.exploit_instance(input)?;
            let sol = crate::overlap::solve_kcg(&inst)?;
            let sbs = self.union_of_chosen(&sol.chosen, None);
            debug_assert!(sbs.len() <= b);
            return Ok(Selection { sbs, phase: Phase::Exploit });
        }
        if q >= b {
            let pool: Vec<usize> = ue.iter().copied().collect();
            return Ok(Selection { sbs: sample_subset(rng, &pool, b), phase: Phase::Explore });
        }

        // 0 < q < b: force the under-explored stations, spend the rest via
        // the restricted knapsack
        let mut profit_store = Vec::with_capacity(self.components.len());
        for (comp, decisions) in self.components.iter().zip(&self.decisions) {
            let users = self.component_users(input, comp)?;
            let excluded: Vec<usize> = ue.iter().copied().collect();
            let profits: Vec<f64> = decisions
                .iter()
                .map(|z| decision_profit_excluding(&z.sbs, &users, &excluded))
                .collect();
            profit_store.push(profits);
        }
        let restrictions: Vec<ExploreRestriction<'_>> = self
            .components
            .iter()
            .zip(&self.decisions)
            .zip(&profit_store)
            .map(|((comp, decisions), profits)| ExploreRestriction {
                members: &comp.members,
                decisions,
                restricted_profits: profits,
            })
            .collect();
        let (inst, kept) = build_explore_kcg(&restrictions, &ue, self.learner.budget)?;
        let sol = crate::overlap::solve_kcg(&inst)?;
        let mut sbs = self.union_of_chosen(&sol.chosen, Some(&kept));
        sbs.extend(ue.iter().copied());
        sbs.sort_unstable();
        sbs.dedup();
        debug_assert!(sbs.len() <= b);
        Ok(Selection { sbs, phase: Phase::Explore })
    }

    fn observe(&mut self, input: &SlotInput, outcome: &SlotOutcome<'_>) -> Result<()> {
        let selected = self.learner.check_observe(input, outcome)?;
        // a served user's demand updates every station covering it
        for (m, demand) in outcome.observed_demand.iter().enumerate() {
            let Some(d) = demand else { continue };
            for link in &input.users[m].covering {
                let cell = self.learner.cell_of(link.sbs, input, m)?;
                self.learner.stores[link.sbs].update(&cell, *d as f64)?;
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
