//! Budget-constrained edge service placement under demand uncertainty.
//!
//! An application provider can rent computing capacity at `b` of `N`
//! small-cell base stations per time slot. How valuable a station is
//! depends on who is currently in its cell and what they will request —
//! which is unknown upfront and must be learned online. This crate
//! provides:
//!
//! - the wireless/compute delay model that turns a placement into utility
//!   ([`network`]),
//! - hypercube context partitioning with per-cell sample-mean estimators
//!   ([`context`]),
//! - smooth ground-truth demand surfaces and bounded samplers ([`demand`]),
//! - the SEEN contextual-combinatorial bandit policy for disjoint coverage
//!   and the SEEN-O extension for overlapping coverage, built on an exact
//!   conflict-knapsack solver ([`policy`], [`overlap`]),
//! - oracle and baseline policies for comparison ([`baselines`]),
//! - a deterministic, seedable experiment harness with regret/MSE metrics
//!   and stable file outputs ([`sim`]).

pub mod baselines;
pub mod context;
pub mod demand;
pub mod error;
pub mod network;
pub mod overlap;
pub mod policy;
pub mod sim;

pub use error::{Error, Result};

// Book chapters double as doctests so the guide can never drift from the
// library API. `cargo test --doc` compiles and runs every snippet.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            #[allow(dead_code)]
            struct $name;
        };
    }

    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(DelayModel, "../../../book/src/delay-model.md");
    chapter!(Demand, "../../../book/src/demand.md");
    chapter!(ContextLearning, "../../../book/src/context-learning.md");
    chapter!(Seen, "../../../book/src/seen.md");
    chapter!(Overlap, "../../../book/src/overlap.md");
    chapter!(Baselines, "../../../book/src/baselines.md");
    chapter!(Experiments, "../../../book/src/experiments.md");
    chapter!(FileFormats, "../../../book/src/file-formats.md");
}
