//! Placement policies and the slot-level interface they share.
//!
//! Every policy sees the same per-slot observation ([`SlotInput`]): which
//! users are present, which stations can reach them at what gain, and the
//! per-task delay reduction each pairing would yield. A policy answers with
//! a set of station ids to rent, and after the slot closes it receives the
//! realized outcome (who was served, what demand they produced).
//!
//! Association semantics are encoded in the input itself: under disjoint
//! coverage each user's `covering` list has exactly one entry, under
//! overlapping coverage it lists every in-range station. Policies never
//! look at the scenario directly, which keeps paired comparisons honest.

pub(crate) mod learner;
pub mod seen;
pub mod seeno;

use rand_chacha::ChaCha20Rng;

use crate::error::Result;

/// One user-station link visible this slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveringLink {
    pub sbs: usize,
    /// Uplink channel gain (> 0; out-of-range stations are not listed).
    pub gain: f64,
    /// Per-task delay reduction if this station serves the user.
    pub weight: f64,
}

/// A user as policies see it: the monitored context plus the stations that
/// could serve it this slot.
#[derive(Debug, Clone)]
pub struct UserView {
    /// Full context in `[0,1]^D`; stations project to their own dims.
    pub context: Vec<f64>,
    /// Links to stations allowed to serve this user, sorted by station id.
    pub covering: Vec<CoveringLink>,
}

impl UserView {
    pub fn link_to(&self, sbs: usize) -> Option<&CoveringLink> {
        self.covering.iter().find(|l| l.sbs == sbs)
    }
}

/// Everything a policy may look at when selecting in slot `t`.
#[derive(Debug, Clone)]
pub struct SlotInput {
    /// 1-based slot index.
    pub t: u64,
    pub n_sbs: usize,
    pub budget: u32,
    pub users: Vec<UserView>,
    /// Per station: indices into `users` of the users it could serve.
    pub sbs_users: Vec<Vec<usize>>,
}

/// Whether the slot's choice was driven by learning pressure or by the
/// current utility estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Explore,
    Exploit,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Explore => "explore",
            Phase::Exploit => "exploit",
        }
    }
}

/// A slot decision: sorted station ids plus the phase label.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub sbs: Vec<usize>,
    pub phase: Phase,
}

/// Realized outcome of a slot, reported back to the policy.
#[derive(Debug, Clone)]
pub struct SlotOutcome<'a> {
    pub selected: &'a [usize],
    /// Per user: the station that served it, `None` for cloud fallback.
    pub serving: &'a [Option<usize>],
    /// Per user: observed demand; `Some` exactly for served users.
    pub observed_demand: &'a [Option<u32>],
    /// Realized slot utility of the selection.
    pub realized_utility: f64,
}

/// A placement policy: select b stations each slot, then learn from what
/// the rented stations observed.
pub trait Policy {
    fn name(&self) -> &'static str;

    fn select(&mut self, input: &SlotInput, rng: &mut ChaCha20Rng) -> Result<Selection>;

    fn observe(&mut self, input: &SlotInput, outcome: &SlotOutcome<'_>) -> Result<()>;

    /// Demand estimator of one station, where the policy keeps one.
    fn estimator(&self, _sbs: usize) -> Option<&crate::context::EstimatorStore> {
        None
    }

    /// How often a station was selected while under-explored.
    fn ue_selection_count(&self, _sbs: usize) -> Option<u64> {
        None
    }
}

/// Uniformly random k-subset of `pool`, returned sorted.
///
/// Shared by every randomized policy so that policies consuming the same
/// stream in matched branches draw identical subsets.
pub fn sample_subset(rng: &mut ChaCha20Rng, pool: &[usize], k: usize) -> Vec<usize> {
    debug_assert!(k <= pool.len());
    let picks = rand::seq::index::sample(rng, pool.len(), k);
    let mut out: Vec<usize> = picks.iter().map(|i| pool[i]).collect();
    out.sort_unstable();
    out
}

/// Greedy top-k station ids by score, ties to the lowest id. Scores are
/// indexed by station id; `eligible` filters the pool.
pub fn top_k_by_score(scores: &[f64], eligible: impl Fn(usize) -> bool, k: usize) -> Vec<usize> {
    let mut ranked: Vec<usize> = (0..scores.len()).filter(|&n| eligible(n)).collect();
    ranked.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    ranked.truncate(k);
    ranked.sort_unstable();
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn subset_sampling_is_seed_deterministic() {
        let pool: Vec<usize> = (0..10).collect();
        let a = sample_subset(&mut ChaCha20Rng::seed_from_u64(5), &pool, 3);
        let b = sample_subset(&mut ChaCha20Rng::seed_from_u64(5), &pool, 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn subset_sampling_marginals_are_uniform() {
        // each element of a 10-pool should land in a 3-subset ~ 30% of draws
        let pool: Vec<usize> = (0..10).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let mut hits = [0u32; 10];
        let trials = 20_000;
        for _ in 0..trials {
            for id in sample_subset(&mut rng, &pool, 3) {
                hits[id] += 1;
            }
        }
        for h in hits {
            let frac = h as f64 / trials as f64;
            assert!((frac - 0.3).abs() < 0.02, "inclusion fraction {frac}");
        }
    }

    #[test]
    fn top_k_breaks_ties_by_lowest_id() {
        let scores = [1.0, 3.0, 3.0, 0.5, 3.0];
        assert_eq!(top_k_by_score(&scores, |_| true, 2), vec![1, 2]);
        assert_eq!(top_k_by_score(&scores, |n| n != 1, 2), vec![2, 4]);
        assert_eq!(top_k_by_score(&scores, |_| true, 4), vec![0, 1, 2, 4]);
    }
}
