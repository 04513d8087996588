//! The clairvoyant oracle and the four comparison policies.
//!
//! - [`Oracle`]: knows the true expected demand; per slot it solves the
//!   placement exactly (greedy top-b under disjoint coverage, the conflict
//!   knapsack under overlap). Regret is measured against it.
//! - [`Cucb`]: UCB1 over super-arms, one arm per b-subset of stations.
//! - [`C2ucb`]: UCB1 over super-arms with statistics kept separately per
//!   cell of a shared partition of the slot's aggregate context.
//! - [`EpsGreedy`]: random subset with probability epsilon, otherwise the
//!   top-b stations by historical mean observed demand (context-free).
//! - [`Random`]: a uniformly random b-subset every slot.
//!
//! UCB rewards are slot utilities normalized into `[0,1]` by a scenario
//! cap supplied at construction.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::context::{CellIndex, ContextPartition};
use crate::demand::DemandFunction;
use crate::error::{Error, Result};
use crate::overlap::{
    decision_profit, enumerate_decisions, find_components, Component, ComponentUser, Decision,
    KcgClass, KcgInstance, KcgOption, OverlapGraph,
};
use crate::policy::{sample_subset, top_k_by_score, Phase, Policy, Selection, SlotInput, SlotOutcome};

/// Refuse super-arm enumerations beyond this many subsets.
const MAX_SUPER_ARMS: usize = 100_000;

fn enumerate_super_arms(n: usize, b: u32) -> Result<Vec<Vec<usize>>> {
    let count = (0..b as usize).fold(1usize, |acc, i| {
        acc.saturating_mul(n - i) / (i + 1)
    });
    if count > MAX_SUPER_ARMS {
        return Err(Error::Capacity(format!(
            "C({n},{b}) = {count} super-arms exceeds the {MAX_SUPER_ARMS} cap; \
             use a smaller budget or fewer stations for the UCB baselines"
        )));
    }
    Ok((0..n).combinations(b as usize).collect())
}

/// Play counts and mean rewards per super-arm.
#[derive(Debug, Clone)]
struct SuperArmStats {
    counts: Vec<u64>,
    means: Vec<f64>,
    plays: u64,
}

impl SuperArmStats {
    fn new(n_arms: usize) -> Self {
        Self { counts: vec![0; n_arms], means: vec![0.0; n_arms], plays: 0 }
    }

    fn first_unplayed(&self) -> Option<usize> {
        self.counts.iter().position(|&c| c == 0)
    }

    /// UCB1 index with exploration bonus `sqrt(2 ln t / count)`; ties to
    /// the lowest arm index.
    fn ucb_argmax(&self, t: f64) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..self.counts.len() {
            let score = self.means[i] + (2.0 * t.ln() / self.counts[i] as f64).sqrt();
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        best
    }

    fn update(&mut self, arm: usize, reward: f64) {
        let c = self.counts[arm] as f64;
        self.means[arm] = (self.means[arm] * c + reward) / (c + 1.0);
        self.counts[arm] += 1;
        self.plays += 1;
    }
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

enum OracleMode {
    TopB,
    Kcg { components: Vec<Component>, decisions: Vec<Vec<Decision>> },
}

/// Clairvoyant benchmark: scores placements with the true expected demand.
pub struct Oracle {
    mu: DemandFunction,
    mode: OracleMode,
    budget: u32,
}

impl Oracle {
    /// Oracle for disjoint coverage: greedy top-b on true expected utility.
    pub fn top_b(mu: DemandFunction, budget: u32) -> Self {
        Self { mu, mode: OracleMode::TopB, budget }
    }

    /// Oracle for overlapping coverage: exact knapsack over component-wise
    /// decisions with true-mean profits.
    pub fn kcg(mu: DemandFunction, graph: &OverlapGraph, budget: u32, component_cap: u32) -> Result<Self> {
        let components = find_components(graph);
        let decisions = components
            .iter()
            .map(|c| enumerate_decisions(c, component_cap))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mu, mode: OracleMode::Kcg { components, decisions }, budget })
    }

    fn true_means(&self, input: &SlotInput) -> Result<Vec<f64>> {
        input
            .users
            .iter()
            .map(|u| self.mu.expected_demand(&u.context))
            .collect()
    }

    /// Expected utility of an arbitrary selection under the true demand,
    /// honoring best-gain association. This is the quantity regret compares.
    pub fn expected_utility_of(&self, input: &SlotInput, selected: &[usize]) -> Result<f64> {
        let mus = self.true_means(input)?;
        let mut total = 0.0;
        for (m, user) in input.users.iter().enumerate() {
            let mut best: Option<(f64, usize, f64)> = None; // gain, id, weight
            for link in &user.covering {
                if !selected.contains(&link.sbs) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bg, bid, _)) => link.gain > bg || (link.gain == bg && link.sbs < bid),
                };
                if better {
                    best = Some((link.gain, link.sbs, link.weight));
                }
            }
            if let Some((_, _, weight)) = best {
                total += weight * mus[m];
            }
        }
        Ok(total)
    }
}

impl Policy for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn select(&mut self, input: &SlotInput, _rng: &mut ChaCha20Rng) -> Result<Selection> {
        let mus = self.true_means(input)?;
        let sbs = match &self.mode {
            OracleMode::TopB => {
                let mut scores = vec![0.0; input.n_sbs];
                for (n, users) in input.sbs_users.iter().enumerate() {
                    for &m in users {
                        let link = input.users[m].link_to(n).ok_or_else(|| {
                            Error::Protocol(format!("user {m} listed for station {n} without a link"))
                        })?;
                        scores[n] += link.weight * mus[m];
                    }
                }
                top_k_by_score(&scores, |_| true, self.budget as usize)
            }
            OracleMode::Kcg { components, decisions } => {
                let mut classes = Vec::with_capacity(components.len());
                for (comp, decs) in components.iter().zip(decisions) {
                    let users = component_users_with(input, comp, &mus);
                    let options = decs
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
                let inst = KcgInstance { classes, budget: self.budget };
                let sol = crate::overlap::solve_kcg(&inst)?;
                let mut sbs = Vec::new();
                for (k, chosen) in sol.chosen.iter().enumerate() {
                    if let Some(opt) = chosen {
                        sbs.extend_from_slice(&decisions[k][*opt].sbs);
                    }
                }
                sbs.sort_unstable();
                sbs.dedup();
                sbs
            }
        };
        Ok(Selection { sbs, phase: Phase::Exploit })
    }

    fn observe(&mut self, _input: &SlotInput, _outcome: &SlotOutcome<'_>) -> Result<()> {
        Ok(())
    }
}

/// Users of one component with per-link weights and the supplied demand
/// figures (true means here; the policies use their own estimates).
fn component_users_with(input: &SlotInput, comp: &Component, demand: &[f64]) -> Vec<ComponentUser> {
    let mut out = Vec::new();
    for (m, user) in input.users.iter().enumerate() {
        let mut gains = Vec::new();
        let mut weights = Vec::new();
        let mut estimates = Vec::new();
        for link in &user.covering {
            if comp.members.binary_search(&link.sbs).is_ok() {
                gains.push((link.sbs, link.gain));
                weights.push(link.weight);
                estimates.push(demand[m]);
            }
        }
        if !gains.is_empty() {
            out.push(ComponentUser { gains, weights, estimates });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// cUCB
// ---------------------------------------------------------------------------

/// UCB1 over all b-subsets of stations, context-free.
pub struct Cucb {
    arms: Vec<Vec<usize>>,
    arm_index: BTreeMap<Vec<usize>, usize>,
    stats: SuperArmStats,
    norm_cap: f64,
}

impl Cucb {
    pub fn new(n_sbs: usize, budget: u32, norm_cap: f64) -> Result<Self> {
        if !(norm_cap > 0.0) {
            return Err(Error::Config("utility normalization cap must be positive".into()));
        }
        let arms = enumerate_super_arms(n_sbs, budget)?;
        let arm_index = arms.iter().cloned().zip(0..).collect();
        let stats = SuperArmStats::new(arms.len());
        Ok(Self { arms, arm_index, stats, norm_cap })
    }

    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    /// Current UCB index of one arm (for trace-level verification).
    pub fn index_of(&self, arm: usize, t: u64) -> f64 {
        self.stats.means[arm] + (2.0 * (t as f64).ln() / self.stats.counts[arm] as f64).sqrt()
    }
}

impl Policy for Cucb {
    fn name(&self) -> &'static str {
        "cucb"
    }

    fn select(&mut self, input: &SlotInput, _rng: &mut ChaCha20Rng) -> Result<Selection> {
        let arm = match self.stats.first_unplayed() {
            Some(i) => return Ok(Selection { sbs: self.arms[i].clone(), phase: Phase::Explore }),
            None => self.stats.ucb_argmax(input.t as f64),
        };
        Ok(Selection { sbs: self.arms[arm].clone(), phase: Phase::Exploit })
    }

    fn observe(&mut self, _input: &SlotInput, outcome: &SlotOutcome<'_>) -> Result<()> {
        let arm = *self
            .arm_index
            .get(outcome.selected)
            .ok_or_else(|| Error::Protocol("observed selection is not a super-arm".into()))?;
        let reward = (outcome.realized_utility / self.norm_cap).clamp(0.0, 1.0);
        self.stats.update(arm, reward);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// c2UCB
// ---------------------------------------------------------------------------

/// UCB1 over super-arms with per-cell statistics on a shared partition of
/// the aggregate context (the mean of all user contexts this slot).
pub struct C2ucb {
    arms: Vec<Vec<usize>>,
    arm_index: BTreeMap<Vec<usize>, usize>,
    partition: ContextPartition,
    cells: BTreeMap<CellIndex, SuperArmStats>,
    norm_cap: f64,
}

impl C2ucb {
    pub fn new(n_sbs: usize, budget: u32, dims: u32, cells_per_dim: u32, norm_cap: f64) -> Result<Self> {
        if !(norm_cap > 0.0) {
            return Err(Error::Config("utility normalization cap must be positive".into()));
        }
        let arms = enumerate_super_arms(n_sbs, budget)?;
        let arm_index = arms.iter().cloned().zip(0..).collect();
        Ok(Self {
            arms,
            arm_index,
            partition: ContextPartition::new(dims, cells_per_dim)?,
            cells: BTreeMap::new(),
            norm_cap,
        })
    }

    /// Mean of all user contexts; the partition's center when no users are
    /// present.
    fn aggregate_context(&self, input: &SlotInput) -> Vec<f64> {
        let d = self.partition.dims() as usize;
        if input.users.is_empty() {
            return vec![0.5; d];
        }
        let mut agg = vec![0.0; d];
        for u in &input.users {
            for k in 0..d {
                agg[k] += u.context.get(k).copied().unwrap_or(0.5);
            }
        }
        for a in &mut agg {
            *a /= input.users.len() as f64;
        }
        agg
    }

    fn cell_for(&self, input: &SlotInput) -> Result<CellIndex> {
        self.partition.locate(&self.aggregate_context(input))
    }

    /// Per-cell mean rewards (tally-oracle hook for tests).
    pub fn cell_means(&self, cell: &CellIndex) -> Option<&[f64]> {
        self.cells.get(cell).map(|s| s.means.as_slice())
    }
}

impl Policy for C2ucb {
    fn name(&self) -> &'static str {
        "c2ucb"
    }

    fn select(&mut self, input: &SlotInput, _rng: &mut ChaCha20Rng) -> Result<Selection> {
        let cell = self.cell_for(input)?;
        let n_arms = self.arms.len();
        let stats = self.cells.entry(cell).or_insert_with(|| SuperArmStats::new(n_arms));
        // the cell's local round index: plays so far plus the current one,
        // so a single-cell partition reduces exactly to plain UCB1
        let (arm, phase) = match stats.first_unplayed() {
            Some(i) => (i, Phase::Explore),
            None => (stats.ucb_argmax((stats.plays + 1) as f64), Phase::Exploit),
        };
        Ok(Selection { sbs: self.arms[arm].clone(), phase })
    }

    fn observe(&mut self, input: &SlotInput, outcome: &SlotOutcome<'_>) -> Result<()> {
        let cell = self.cell_for(input)?;
        let arm = *self
            .arm_index
            .get(outcome.selected)
            .ok_or_else(|| Error::Protocol("observed selection is not a super-arm".into()))?;
        let reward = (outcome.realized_utility / self.norm_cap).clamp(0.0, 1.0);
        let n_arms = self.arms.len();
        self.cells
            .entry(cell)
            .or_insert_with(|| SuperArmStats::new(n_arms))
            .update(arm, reward);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// epsilon-greedy
// ---------------------------------------------------------------------------

/// Context-free epsilon-greedy over per-station historical demand.
pub struct EpsGreedy {
    epsilon: f64,
    budget: u32,
    rent_counts: Vec<u64>,
    demand_means: Vec<f64>,
}

impl EpsGreedy {
    pub fn new(n_sbs: usize, budget: u32, epsilon: f64) -> Result<Self> {
        if !(0.0 < epsilon && epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must be in (0,1), got {epsilon}")));
        }
        Ok(Self {
            epsilon,
            budget,
            rent_counts: vec![0; n_sbs],
            demand_means: vec![0.0; n_sbs],
        })
    }

    pub fn demand_means(&self) -> &[f64] {
        &self.demand_means
    }
}

impl Policy for EpsGreedy {
    fn name(&self) -> &'static str {
        "eps-greedy"
    }

    fn select(&mut self, input: &SlotInput, rng: &mut ChaCha20Rng) -> Result<Selection> {
        let pool: Vec<usize> = (0..input.n_sbs).collect();
        if rng.random::<f64>() < self.epsilon {
            return Ok(Selection {
                sbs: sample_subset(rng, &pool, self.budget as usize),
                phase: Phase::Explore,
            });
        }
        Ok(Selection {
            sbs: top_k_by_score(&self.demand_means, |_| true, self.budget as usize),
            phase: Phase::Exploit,
        })
    }

    fn observe(&mut self, _input: &SlotInput, outcome: &SlotOutcome<'_>) -> Result<()> {
        for &n in outcome.selected {
            let total: u32 = outcome
                .serving
                .iter()
                .zip(outcome.observed_demand)
                .filter(|(s, _)| **s == Some(n))
                .filter_map(|(_, d)| *d)
                .sum();
            let c = self.rent_counts[n] as f64;
            self.demand_means[n] = (self.demand_means[n] * c + total as f64) / (c + 1.0);
            self.rent_counts[n] += 1;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Random
// ---------------------------------------------------------------------------

/// Uniformly random b-subset each slot.
pub struct Random {
    budget: u32,
}

impl Random {
    pub fn new(budget: u32) -> Self {
        Self { budget }
    }
}

impl Policy for Random {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(&mut self, input: &SlotInput, rng: &mut ChaCha20Rng) -> Result<Selection> {
        let pool: Vec<usize> = (0..input.n_sbs).collect();
        Ok(Selection { sbs: sample_subset(rng, &pool, self.budget as usize), phase: Phase::Explore })
    }

    fn observe(&mut self, _input: &SlotInput, _outcome: &SlotOutcome<'_>) -> Result<()> {
        Ok(())
    }
}
