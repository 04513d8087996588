//! The per-slot experiment protocol, metrics, and replication control.
//!
//! Each slot proceeds in order: observe contexts, select stations (policy),
//! serve users, then observe demands and update. The oracle is evaluated on
//! the same realized contexts and weights with the true demand surface, so
//! the pseudo-regret increment `oracle_expected - policy_expected` isolates
//! decision quality from population randomness and is non-negative by
//! construction.
//!
//! All randomness flows through named ChaCha streams derived from the run
//! seed (population, demand realization, policy, backbone), so a `(config,
//! seed)` pair fully determines every output byte, and policies under paired
//! seeds face identical environments.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::baselines::{C2ucb, Cucb, EpsGreedy, Oracle, Random};
use crate::context::{partition_granularity, ContextPartition};
use crate::demand::{sample_demand, DemandFunction};
use crate::error::{Error, Result};
use crate::network::{channel_gain, cloud_delay, edge_delay, uplink_rate};
use crate::policy::seen::Seen;
use crate::policy::seeno::Seeno;
use crate::policy::{CoveringLink, Phase, Policy, Selection, SlotInput, SlotOutcome, UserView};
use crate::sim::config::{Association, PolicyName, ScenarioConfig};
use crate::sim::population::generate_population;
use crate::sim::topology::{generate_topology, Topology};

// Stream ids for the per-run ChaCha substreams.
const STREAM_POPULATION: u64 = 10;
const STREAM_DEMAND: u64 = 20;
const STREAM_POLICY: u64 = 30;
const STREAM_BACKBONE: u64 = 40;

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Per-user slot record kept when `record_users` is enabled.
#[derive(Debug, Clone)]
pub struct UserTraceRecord {
    pub context: Vec<f64>,
    pub covering: Vec<usize>,
    pub serving: Option<usize>,
    /// Delay-reduction weight at the serving station (0 on cloud fallback).
    pub weight: f64,
    pub demand: u32,
}

/// One slot of a trajectory.
#[derive(Debug, Clone)]
pub struct SlotTrace {
    pub t: u64,
    pub phase: Phase,
    pub selected: Vec<usize>,
    pub realized_utility: f64,
    /// Expected utility of the oracle selection under the true demand.
    pub oracle_expected: f64,
    /// Expected utility of the policy selection under the true demand.
    pub policy_expected: f64,
    pub regret_increment: f64,
    pub cum_utility: f64,
    pub cum_regret: f64,
    pub n_users: usize,
    pub edge_demand: u64,
    pub total_demand: u64,
    pub users: Option<Vec<UserTraceRecord>>,
}

/// Periodic estimation-quality snapshot.
#[derive(Debug, Clone, Copy)]
pub struct Checkpoint {
    pub t: u64,
    /// Mean squared error over visited cells, against the true demand at
    /// cell centers. NaN for policies without estimators.
    pub mse_visited: f64,
    /// Same, over all cells with unvisited estimates counted as 0.
    pub mse_all: f64,
    /// Fraction of realized demand served at the edge so far.
    pub edge_frac: f64,
}

#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub policy: String,
    pub seed: u64,
    pub horizon: u64,
    pub final_cum_utility: f64,
    pub final_cum_regret: f64,
    pub edge_fraction: f64,
    pub cloud_fraction: f64,
    pub overlap_degree: f64,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub traces: Vec<SlotTrace>,
    pub report: MetricsReport,
    /// Per station: slots selected while under-explored (SEEN family only).
    pub ue_counts: Option<Vec<u64>>,
    /// Per station: partition cells-per-dim used by the learner.
    pub partition_h: Vec<u32>,
}

/// Upper bound on a single user's per-task delay reduction, from the
/// scenario geometry: worst-case cloud delay (corner user, slowest
/// backbone) minus best-case edge delay (user at 1 m of the fastest
/// station).
pub fn delay_reduction_cap(cfg: &ScenarioConfig, topo: &Topology) -> f64 {
    let corner_dist = {
        let (cx, cy) = topo.mbs_position;
        let corners = [(0.0, 0.0), (topo.area_m, 0.0), (0.0, topo.area_m), (topo.area_m, topo.area_m)];
        corners
            .iter()
            .map(|(x, y)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt())
            .fold(0.0f64, f64::max)
    };
    let mbs_ch = cfg.mbs_channel();
    let mbs_rate_min = uplink_rate(
        mbs_ch,
        channel_gain(corner_dist, f64::INFINITY, mbs_ch.pathloss_exponent),
        mbs_ch.user_tx_power_w,
    );
    let cloud_max = cloud_delay(mbs_rate_min, &cfg.task, &cfg.cloud, cfg.cloud.backbone_bps_min)
        .unwrap_or(f64::INFINITY);
    let edge_min = topo
        .sbs
        .iter()
        .map(|s| {
            let rate = uplink_rate(&cfg.channel, 1.0, cfg.channel.user_tx_power_w);
            edge_delay(rate, &cfg.task, s.cpu_hz).unwrap_or(f64::INFINITY)
        })
        .fold(f64::INFINITY, f64::min);
    (cloud_max - edge_min).max(1e-9)
}

/// Normalization cap for UCB rewards: `b * M_max * u_max * d_max`.
pub fn utility_cap(cfg: &ScenarioConfig, topo: &Topology) -> f64 {
    let m_max = if cfg.norm_max_users > 0.0 {
        cfg.norm_max_users
    } else {
        3.0 * cfg.arrival_rate + 5.0
    };
    cfg.budget as f64 * m_max * delay_reduction_cap(cfg, topo) * cfg.task.d_max as f64
}

/// Instantiate the configured policy against a topology.
pub fn build_policy(cfg: &ScenarioConfig, topo: &Topology, mu: &DemandFunction) -> Result<Box<dyn Policy>> {
    let d_max = cfg.task.d_max as f64;
    let overlapping = cfg.association == Association::BestGain && topo.graph.edge_count() > 0;
    Ok(match cfg.policy {
        PolicyName::Seen => {
            if overlapping {
                return Err(Error::Config(
                    "policy `seen` assumes disjoint coverage; this scenario overlaps under \
                     best-gain association (use `seen-o` or association = \"nearest\")"
                        .into(),
                ));
            }
            Box::new(Seen::new(&topo.sbs, cfg.horizon, cfg.budget, d_max)?)
        }
        PolicyName::SeenO => Box::new(Seeno::new(
            &topo.sbs,
            &topo.graph,
            cfg.horizon,
            cfg.budget,
            d_max,
            cfg.component_cap,
        )?),
        PolicyName::Oracle => Box::new(reference_oracle(cfg, topo, mu)?),
        PolicyName::Cucb => Box::new(Cucb::new(cfg.n_sbs, cfg.budget, utility_cap(cfg, topo))?),
        PolicyName::C2ucb => {
            let cells = if cfg.c2ucb_cells > 0 {
                cfg.c2ucb_cells
            } else {
                partition_granularity(cfg.horizon, cfg.holder_alpha, cfg.context_dims)?
            };
            Box::new(C2ucb::new(
                cfg.n_sbs,
                cfg.budget,
                cfg.context_dims,
                cells,
                utility_cap(cfg, topo),
            )?)
        }
        PolicyName::EpsGreedy => Box::new(EpsGreedy::new(cfg.n_sbs, cfg.budget, cfg.epsilon)?),
        PolicyName::Random => Box::new(Random::new(cfg.budget)),
    })
}

/// The regret reference: top-b under nearest association, the exact
/// knapsack under best-gain association.
pub fn reference_oracle(cfg: &ScenarioConfig, topo: &Topology, mu: &DemandFunction) -> Result<Oracle> {
    Ok(match cfg.association {
        Association::Nearest => Oracle::top_b(mu.clone(), cfg.budget),
        Association::BestGain => Oracle::kcg(mu.clone(), &topo.graph, cfg.budget, cfg.component_cap)?,
    })
}

/// Assemble what policies can see in one slot.
pub fn build_slot_input(
    cfg: &ScenarioConfig,
    topo: &Topology,
    t: u64,
    users: &[crate::network::UserSlotState],
    backbone_bps: f64,
) -> Result<SlotInput> {
    let mbs_ch = cfg.mbs_channel();
    let mut views = Vec::with_capacity(users.len());
    let mut sbs_users = vec![Vec::new(); topo.sbs.len()];
    for (m, u) in users.iter().enumerate() {
        let mbs_rate = uplink_rate(mbs_ch, u.mbs_gain, mbs_ch.user_tx_power_w);
        let q_cloud = cloud_delay(mbs_rate, &cfg.task, &cfg.cloud, backbone_bps)?;
        let eligible: Vec<(usize, f64)> = match cfg.association {
            Association::BestGain => u.sbs_gains.clone(),
            Association::Nearest => {
                // nearest covering station = highest gain; ties to lowest id
                u.sbs_gains
                    .iter()
                    .copied()
                    .max_by(|a, b| {
                        a.1.partial_cmp(&b.1)
                            .unwrap_or(std::cmp::Ordering::Equal)
                            .then(b.0.cmp(&a.0))
                    })
                    .into_iter()
                    .collect()
            }
        };
        let mut covering = Vec::with_capacity(eligible.len());
        for (sbs, gain) in eligible {
            let rate = uplink_rate(&cfg.channel, gain, cfg.channel.user_tx_power_w);
            let weight = q_cloud - edge_delay(rate, &cfg.task, topo.sbs[sbs].cpu_hz)?;
            covering.push(CoveringLink { sbs, gain, weight });
            sbs_users[sbs].push(m);
        }
        covering.sort_by_key(|l| l.sbs);
        views.push(UserView { context: u.context.clone(), covering });
    }
    Ok(SlotInput {
        t,
        n_sbs: topo.sbs.len(),
        budget: cfg.budget,
        users: views,
        sbs_users,
    })
}

/// Highest-gain selected station covering the user, ties to lowest id.
pub fn resolve_serving(input: &SlotInput, selected: &[usize]) -> Vec<Option<usize>> {
    input
        .users
        .iter()
        .map(|u| {
            let mut best: Option<&CoveringLink> = None;
            for link in &u.covering {
                if !selected.contains(&link.sbs) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => link.gain > b.gain || (link.gain == b.gain && link.sbs < b.sbs),
                };
                if better {
                    best = Some(link);
                }
            }
            best.map(|l| l.sbs)
        })
        .collect()
}

/// Expected utility of a selection under the true demand surface.
fn expected_utility(input: &SlotInput, serving: &[Option<usize>], mus: &[f64]) -> f64 {
    let mut total = 0.0;
    for (m, s) in serving.iter().enumerate() {
        if let Some(n) = s {
            let link = input.users[m].link_to(*n).expect("serving implies covering");
            total += link.weight * mus[m];
        }
    }
    total
}

/// Execute the full slot protocol for `t = 1..=horizon` with the
/// configured policy. Deterministic in `(config, seed)`.
pub fn run_experiment(cfg: &ScenarioConfig, seed: u64) -> Result<ExperimentResult> {
    cfg.validate()?;
    let topo = generate_topology(cfg)?;
    let mu = cfg.demand_function()?;
    let mut policy = build_policy(cfg, &topo, &mu)?;
    let mut oracle = reference_oracle(cfg, &topo, &mu)?;

    let mut pop_rng = stream(seed, STREAM_POPULATION);
    let mut demand_rng = stream(seed, STREAM_DEMAND);
    let mut policy_rng = stream(seed, STREAM_POLICY);
    let mut backbone_rng = stream(seed, STREAM_BACKBONE);
    let mut oracle_rng = stream(seed, 99);

    let mut traces = Vec::with_capacity(cfg.horizon as usize);
    let mut checkpoints = Vec::new();
    let mut cum_utility = 0.0;
    let mut cum_regret = 0.0;
    let mut edge_demand_total = 0u64;
    let mut demand_total = 0u64;

    for t in 1..=cfg.horizon {
        let users = generate_population(cfg, &topo, &mut pop_rng);
        let backbone_bps =
            backbone_rng.random_range(cfg.cloud.backbone_bps_min..=cfg.cloud.backbone_bps_max);
        let input = build_slot_input(cfg, &topo, t, &users, backbone_bps)?;

        // true means and realized demands for every present user
        let mus: Vec<f64> = input
            .users
            .iter()
            .map(|u| mu.expected_demand(&u.context))
            .collect::<Result<_>>()?;
        let demands: Vec<u32> = mus
            .iter()
            .map(|&m| sample_demand(&mut demand_rng, m, cfg.task.d_max))
            .collect::<Result<_>>()?;

        let Selection { sbs: selected, phase } = policy.select(&input, &mut policy_rng)?;
        let serving = resolve_serving(&input, &selected);

        let oracle_sel = oracle.select(&input, &mut oracle_rng)?;
        let oracle_serving = resolve_serving(&input, &oracle_sel.sbs);
        let oracle_expected = expected_utility(&input, &oracle_serving, &mus);
        let policy_expected = expected_utility(&input, &serving, &mus);
        let regret_increment = oracle_expected - policy_expected;

        let mut realized_utility = 0.0;
        let mut edge_demand = 0u64;
        let mut total_demand = 0u64;
        let observed: Vec<Option<u32>> = serving
            .iter()
            .enumerate()
            .map(|(m, s)| s.map(|_| demands[m]))
            .collect();
        for (m, s) in serving.iter().enumerate() {
            total_demand += demands[m] as u64;
            if let Some(n) = s {
                let link = input.users[m].link_to(*n).expect("serving implies covering");
                realized_utility += link.weight * demands[m] as f64;
                edge_demand += demands[m] as u64;
            }
        }

        policy.observe(
            &input,
            &SlotOutcome {
                selected: &selected,
                serving: &serving,
                observed_demand: &observed,
                realized_utility,
            },
        )?;

        cum_utility += realized_utility;
        cum_regret += regret_increment;
        edge_demand_total += edge_demand;
        demand_total += total_demand;

        let user_records = cfg.record_users.then(|| {
            input
                .users
                .iter()
                .enumerate()
                .map(|(m, u)| UserTraceRecord {
                    context: u.context.clone(),
                    covering: u.covering.iter().map(|l| l.sbs).collect(),
                    serving: serving[m],
                    weight: serving[m]
                        .and_then(|n| u.link_to(n))
                        .map(|l| l.weight)
                        .unwrap_or(0.0),
                    demand: demands[m],
                })
                .collect()
        });
        traces.push(SlotTrace {
            t,
            phase,
            selected,
            realized_utility,
            oracle_expected,
            policy_expected,
            regret_increment,
            cum_utility,
            cum_regret,
            n_users: users.len(),
            edge_demand,
            total_demand,
            users: user_records,
        });

        if t % cfg.mse_every == 0 || t == cfg.horizon {
            let (mse_visited, mse_all) = compute_mse(policy.as_ref(), cfg, &topo, &mu)?;
            let edge_frac = if demand_total > 0 {
                edge_demand_total as f64 / demand_total as f64
            } else {
                0.0
            };
            checkpoints.push(Checkpoint { t, mse_visited, mse_all, edge_frac });
        }
    }

    let (edge_fraction, cloud_fraction) = demand_allocation(&traces);
    let ue_counts: Option<Vec<u64>> = policy
        .ue_selection_count(0)
        .map(|_| (0..cfg.n_sbs).map(|n| policy.ue_selection_count(n).unwrap_or(0)).collect());
    let partition_h = topo
        .sbs
        .iter()
        .map(|s| partition_granularity(cfg.horizon, s.holder_alpha, s.context_dims))
        .collect::<Result<Vec<_>>>()?;

    let report = MetricsReport {
        policy: cfg.policy.as_str().to_string(),
        seed,
        horizon: cfg.horizon,
        final_cum_utility: cum_utility,
        final_cum_regret: cum_regret,
        edge_fraction,
        cloud_fraction,
        overlap_degree: topo.overlap_degree,
        checkpoints,
    };
    let result = ExperimentResult { traces, report, ue_counts, partition_h };
    check_invariants(&result, cfg)?;
    Ok(result)
}

/// Demand-estimation MSE of the policy's estimators against the true
/// surface at cell centers (centers of hidden dimensions taken at 0.5).
/// `(NaN, NaN)` for policies without estimators.
pub fn compute_mse(
    policy: &dyn Policy,
    cfg: &ScenarioConfig,
    topo: &Topology,
    mu: &DemandFunction,
) -> Result<(f64, f64)> {
    let mut visited_sq = 0.0;
    let mut visited_n = 0u64;
    let mut all_sq = 0.0;
    let mut all_n = 0u64;
    let mut any = false;
    for s in &topo.sbs {
        let Some(store) = policy.estimator(s.id) else { continue };
        any = true;
        let partition = ContextPartition::for_horizon(cfg.horizon, s.holder_alpha, s.context_dims)?;
        let center_mu = |cell: &crate::context::CellIndex| -> Result<f64> {
            let mut center = partition.cell_center(cell);
            center.resize(cfg.context_dims as usize, 0.5);
            mu.expected_demand(&center)
        };
        for (cell, stats) in store.visited() {
            let err = stats.mean - center_mu(cell)?;
            visited_sq += err * err;
            visited_n += 1;
        }
        for cell in partition.all_cells() {
            let err = store.mean(&cell) - center_mu(&cell)?;
            all_sq += err * err;
            all_n += 1;
        }
    }
    if !any {
        return Ok((f64::NAN, f64::NAN));
    }
    let mse_visited = if visited_n > 0 { visited_sq / visited_n as f64 } else { 0.0 };
    let mse_all = if all_n > 0 { all_sq / all_n as f64 } else { 0.0 };
    Ok((mse_visited, mse_all))
}

/// Fractions of realized demand served at the edge vs falling back to the
/// cloud. Unserved users' demand counts as cloud. Fractions sum to 1 when
/// any demand was realized.
pub fn demand_allocation(traces: &[SlotTrace]) -> (f64, f64) {
    let edge: u64 = traces.iter().map(|tr| tr.edge_demand).sum();
    let total: u64 = traces.iter().map(|tr| tr.total_demand).sum();
    if total == 0 {
        return (0.0, 0.0);
    }
    let e = edge as f64 / total as f64;
    (e, 1.0 - e)
}

/// Least-squares slope of `ln y` against `ln x`. Points with
/// non-positive coordinates are skipped.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len() as f64;
    if logs.len() < 2 {
        return f64::NAN;
    }
    let mx = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let cov: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Runtime invariants every finished trajectory must satisfy:
/// selection sizes respect the budget, pseudo-regret increments are
/// non-negative, cumulative regret is non-decreasing, and the SEEN-family
/// exploration-count bound holds per station.
pub fn check_invariants(result: &ExperimentResult, cfg: &ScenarioConfig) -> Result<()> {
    let exact_b = !matches!(cfg.policy, PolicyName::SeenO)
        && !(matches!(cfg.policy, PolicyName::Oracle) && cfg.association == Association::BestGain);
    let mut prev_cum = 0.0;
    for tr in &result.traces {
        let k = tr.selected.len();
        if exact_b && k != cfg.budget as usize {
            return Err(Error::Protocol(format!(
                "slot {}: selected {k} stations, expected exactly {}",
                tr.t, cfg.budget
            )));
        }
        if k > cfg.budget as usize {
            return Err(Error::Protocol(format!(
                "slot {}: selected {k} stations over budget {}",
                tr.t, cfg.budget
            )));
        }
        if tr.regret_increment < -1e-6 {
            return Err(Error::Protocol(format!(
                "slot {}: negative pseudo-regret increment {}",
                tr.t, tr.regret_increment
            )));
        }
        if tr.cum_regret < prev_cum - 1e-6 {
            return Err(Error::Protocol(format!("slot {}: cumulative regret decreased", tr.t)));
        }
        prev_cum = tr.cum_regret;
    }
    if let Some(ue) = &result.ue_counts {
        for (n, &count) in ue.iter().enumerate() {
            let h = result.partition_h[n] as f64;
            let dims = cfg.dims_of(n);
            let z = 2.0 * cfg.holder_alpha / (3.0 * cfg.holder_alpha + dims as f64);
            let t = cfg.horizon as f64;
            let bound = h.powi(dims as i32) * (t.powf(z) * t.ln()).ceil();
            if (count as f64) > bound {
                return Err(Error::Protocol(format!(
                    "station {n}: {count} under-explored selections exceed the bound {bound}"
                )));
            }
        }
    }
    Ok(())
}

/// Run one experiment per seed, in parallel, results in seed order.
pub fn run_replications(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<ExperimentResult>> {
    seeds
        .par_iter()
        .map(|&s| run_experiment(cfg, s))
        .collect()
}
