//! Coverage-overlap machinery: the overlap graph, connected components,
//! component-wise decision enumeration, best-gain user association, and an
//! exact solver for the resulting knapsack-with-conflicts problem.
//!
//! When service ranges overlap, renting decisions couple: a user reachable
//! by several stations offloads to the best rented one, so stations in one
//! connected component of the overlap graph must be decided jointly. Every
//! nonempty subset `z` of a component is a candidate decision with cost
//! `|z|` and a profit that accounts for how users re-associate under `z`.
//! At most one decision per component may be chosen (the decisions of one
//! component form a conflict clique), which turns the per-slot problem into
//! a multiple-choice knapsack solved exactly by dynamic programming.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Undirected graph over station ids; an edge means the two coverage disks
/// geometrically overlap.
#[derive(Debug, Clone)]
pub struct OverlapGraph {
    n: usize,
    adj: Vec<BTreeSet<usize>>,
}

impl OverlapGraph {
    /// Build from positions and ranges: edge iff
    /// `distance(i, j) < range_i + range_j`.
    pub fn from_geometry(stations: &[((f64, f64), f64)]) -> Self {
        let n = stations.len();
        let mut g = Self { n, adj: vec![BTreeSet::new(); n] };
        for i in 0..n {
            for j in (i + 1)..n {
                let (pi, ri) = stations[i];
                let (pj, rj) = stations[j];
                let d = ((pi.0 - pj.0).powi(2) + (pi.1 - pj.1).powi(2)).sqrt();
                if d < ri + rj {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    pub fn with_vertices(n: usize) -> Self {
        Self { n, adj: vec![BTreeSet::new(); n] }
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        if i != j {
            self.adj[i].insert(j);
            self.adj[j].insert(i);
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(&j)
    }
}

/// A maximal set of stations mutually connected through coverage overlap.
/// Members are sorted ascending; isolated stations form singletons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub members: Vec<usize>,
}

/// Connected components via breadth-first search, ordered by smallest
/// member. The output partitions the vertex set.
pub fn find_components(graph: &OverlapGraph) -> Vec<Component> {
    let mut seen = vec![false; graph.n];
    let mut out = Vec::new();
    for start in 0..graph.n {
        if seen[start] {
            continue;
        }
        let mut members = vec![start];
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &graph.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        out.push(Component { members });
    }
    out
}

/// One joint renting decision inside a component: a nonempty subset of its
/// members, with cost equal to its size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub sbs: Vec<usize>,
}

impl Decision {
    pub fn cost(&self) -> u32 {
        self.sbs.len() as u32
    }

    pub fn contains(&self, id: usize) -> bool {
        self.sbs.binary_search(&id).is_ok()
    }
}

/// All `2^|C| - 1` nonempty subsets of a component, in ascending bitmask
/// order over the sorted members (so singletons of small ids come first).
///
/// Enumeration is exponential by construction; components larger than
/// `cap` members are refused with guidance rather than ground through.
pub fn enumerate_decisions(component: &Component, cap: u32) -> Result<Vec<Decision>> {
    let k = component.members.len();
    if k as u32 > cap {
        return Err(Error::Capacity(format!(
            "component {{{:?}}} has {k} stations (cap {cap}): decision enumeration needs 2^{k}-1 \
             subsets; reduce coverage ranges or raise the component cap knowingly",
            component.members
        )));
    }
    let mut out = Vec::with_capacity((1usize << k) - 1);
    for mask in 1usize..(1 << k) {
        let sbs: Vec<usize> = (0..k)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| component.members[i])
            .collect();
        out.push(Decision { sbs });
    }
    Ok(out)
}

/// Per-user inputs for association and profit evaluation within one
/// component. The three vectors are parallel: entry `i` describes the link
/// to covering station `gains[i].0`.
#[derive(Debug, Clone)]
pub struct ComponentUser {
    /// `(station id, uplink gain)` for covering stations, gains > 0.
    pub gains: Vec<(usize, f64)>,
    /// Per-task delay reduction at each covering station.
    pub weights: Vec<f64>,
    /// Demand figure used for scoring (estimate or true mean).
    pub estimates: Vec<f64>,
}

/// Best-gain association: each user maps to the highest-gain station of
/// `z` that covers it (ties to the lowest id); users covered by no station
/// of `z` are unserved and fall back to the cloud.
///
/// Returns, per user, the index into that user's `gains` slice.
pub fn associate(users: &[ComponentUser], z: &[usize]) -> Vec<Option<usize>> {
    users
        .iter()
        .map(|u| {
            let mut best: Option<(usize, f64, usize)> = None; // (slot, gain, id)
            for (slot, &(id, gain)) in u.gains.iter().enumerate() {
                if gain <= 0.0 || !z.contains(&id) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((_, bg, bid)) => gain > bg || (gain == bg && id < bid),
                };
                if better {
                    best = Some((slot, gain, id));
                }
            }
            best.map(|(slot, _, _)| slot)
        })
        .collect()
}

/// Profit of decision `z`: sum over served users of `weight * estimate` at
/// their serving station.
pub fn decision_profit(z: &[usize], users: &[ComponentUser]) -> f64 {
    decision_profit_excluding(z, users, &[])
}

/// Profit restricted to serving stations outside `excluded` (used by the
/// exploration-phase instance, where already-rented stations' contributions
/// are not paid for again). Association still runs over the full `z`.
pub fn decision_profit_excluding(z: &[usize], users: &[ComponentUser], excluded: &[usize]) -> f64 {
    let assoc = associate(users, z);
    let mut total = 0.0;
    for (u, slot) in users.iter().zip(&assoc) {
        if let Some(i) = slot {
            let id = u.gains[*i].0;
            if !excluded.contains(&id) {
                total += u.weights[*i] * u.estimates[*i];
            }
        }
    }
    total
}

/// One selectable option inside a class: a decision index (into the
/// caller's decision list for that component) plus its cost and profit.
#[derive(Debug, Clone)]
pub struct KcgOption {
    pub decision: usize,
    pub cost: u32,
    pub profit: f64,
}

/// The options of one component. Picking no option is always allowed;
/// picking two is a conflict.
#[derive(Debug, Clone, Default)]
pub struct KcgClass {
    pub options: Vec<KcgOption>,
}

/// A knapsack-with-conflict-cliques instance: one class per component and
/// a shared integer budget.
#[derive(Debug, Clone)]
pub struct KcgInstance {
    pub classes: Vec<KcgClass>,
    pub budget: u32,
}

/// Exact solution: the chosen option index per class (or `None`) and the
/// optimal total profit.
#[derive(Debug, Clone, PartialEq)]
pub struct KcgSolution {
    pub chosen: Vec<Option<usize>>,
    pub profit: f64,
}

impl KcgSolution {
    pub fn total_cost(&self, inst: &KcgInstance) -> u32 {
        self.chosen
            .iter()
            .zip(&inst.classes)
            .filter_map(|(c, class)| c.map(|i| class.options[i].cost))
            .sum()
    }
}

/// Exact optimum by dynamic programming over classes (multiple-choice
/// knapsack: the conflicts form one clique per class), `O(total options * budget)`.
///
/// Tie-break among optima: classes are scanned in order and within a class
/// options in ascending index, with "no option" considered last — so the
/// reconstruction takes the first option that still reaches the optimum.
/// On instances of singleton classes with non-negative profits this
/// reproduces greedy top-b selection with lowest-id tie-breaking.
pub fn solve_kcg(inst: &KcgInstance) -> Result<KcgSolution> {
    let b = inst.budget as usize;
    let k = inst.classes.len();
    for class in &inst.classes {
        for opt in &class.options {
            if !opt.profit.is_finite() {
                return Err(Error::Parameter("non-finite profit in knapsack instance".into()));
            }
        }
    }
    // suffix[i][r]: best profit achievable from classes i.. with budget r
    let mut suffix = vec![vec![0.0f64; b + 1]; k + 1];
    for i in (0..k).rev() {
        for r in 0..=b {
            let mut best = suffix[i + 1][r];
            for opt in &inst.classes[i].options {
                let c = opt.cost as usize;
                if c <= r {
                    let v = opt.profit + suffix[i + 1][r - c];
                    if v > best {
                        best = v;
                    }
                }
            }
            suffix[i][r] = best;
        }
    }
    // forward reconstruction: earliest option achieving the optimum
    let mut chosen = vec![None; k];
    let mut r = b;
    for i in 0..k {
        let target = suffix[i][r];
        for (j, opt) in inst.classes[i].options.iter().enumerate() {
            let c = opt.cost as usize;
            if c <= r && opt.profit + suffix[i + 1][r - c] == target {
                chosen[i] = Some(j);
                r -= c;
                break;
            }
        }
        // None when no option attains the target within budget
    }
    Ok(KcgSolution { chosen, profit: suffix[0][b] })
}

/// Inputs for assembling the exploration-phase restricted instance.
pub struct ExploreRestriction<'a> {
    /// Sorted members of the component.
    pub members: &'a [usize],
    /// Decisions of one component, as produced by [`enumerate_decisions`].
    pub decisions: &'a [Decision],
    /// Profit of each decision with already-rented stations' contributions
    /// removed (see [`decision_profit_excluding`]).
    pub restricted_profits: &'a [f64],
}

/// Build the restricted knapsack for exploration slots where `0 < q < b`
/// stations are force-rented for being under-explored.
///
/// Per component: drop decisions that omit any of its under-explored
/// members, and drop singleton decisions `{n}` with `n` under-explored
/// (already rented). Costs count only stations outside the forced set, and
/// the budget shrinks to `b - q`. A component that is entirely
/// under-explored keeps only its full decision at cost 0 — already paid
/// for, so choosing it is free and changes nothing.
///
/// Returns the instance plus, per class, the surviving decision indices.
pub fn build_explore_kcg(
    components: &[ExploreRestriction<'_>],
    under_explored: &BTreeSet<usize>,
    budget: u32,
) -> Result<(KcgInstance, Vec<Vec<usize>>)> {
    let q = under_explored.len() as u32;
    if q == 0 || q >= budget {
        return Err(Error::Parameter(format!(
            "explore restriction requires 0 < |under-explored| < budget, got q={q}, b={budget}"
        )));
    }
    let mut classes = Vec::with_capacity(components.len());
    let mut survivors = Vec::with_capacity(components.len());
    for comp in components {
        let mut class = KcgClass::default();
        let mut kept = Vec::new();
        for (idx, z) in comp.decisions.iter().enumerate() {
            // all under-explored members of this component must be in z
            let omits_ue = comp
                .members
                .iter()
                .any(|n| under_explored.contains(n) && !z.contains(*n));
            if omits_ue {
                continue;
            }
            // singleton of an already-rented station
            if z.sbs.len() == 1 && under_explored.contains(&z.sbs[0]) {
                continue;
            }
            let cost = z.sbs.iter().filter(|n| !under_explored.contains(n)).count() as u32;
            class.options.push(KcgOption {
                decision: idx,
                cost,
                profit: comp.restricted_profits[idx],
            });
            kept.push(idx);
        }
        classes.push(class);
        survivors.push(kept);
    }
    Ok((KcgInstance { classes, budget: budget - q }, survivors))
}

impl KcgInstance {
    /// Plain-text listing of classes, costs, and profits, for solver
    /// cross-validation against external tools.
    pub fn debug_dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "budget {}", self.budget).unwrap();
        for (i, class) in self.classes.iter().enumerate() {
            writeln!(s, "class {i} ({} options)", class.options.len()).unwrap();
            for opt in &class.options {
                writeln!(
                    s,
                    "  decision {} cost {} profit {:.9}",
                    opt.decision, opt.cost, opt.profit
                )
                .unwrap();
            }
        }
        s
    }
}
