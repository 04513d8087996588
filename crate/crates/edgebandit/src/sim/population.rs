//! Per-slot user population: Poisson arrivals per station, positions
//! uniform in the coverage disk, and context vectors drawn from an
//! area-type-dependent mixture of user profiles.
//!
//! Profiles shape where in context space users sit: students concentrate
//! near the low end of every coordinate, workers near the high end, and
//! general users are uniform. School zones attract mostly students,
//! business areas mostly workers, and public areas an even blend, so the
//! demand surface seen at a station depends on its surroundings and on the
//! slot-to-slot draw of who showed up.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};

use crate::network::{channel_gain, AreaType, UserSlotState};
use crate::sim::config::ScenarioConfig;
use crate::sim::topology::Topology;

/// User profile kinds driving the context distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Student,
    Worker,
    General,
}

/// Mixture over profiles for one area type: school zones skew to students,
/// business areas to workers, public areas are even.
pub fn profile_mixture(area: AreaType) -> [f64; 3] {
    match area {
        AreaType::School => [0.6, 0.2, 0.2],
        AreaType::Business => [0.2, 0.6, 0.2],
        AreaType::Public => [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    }
}

/// Draw a profile kind from an area type's mixture.
pub fn sample_profile(rng: &mut ChaCha20Rng, area: AreaType) -> ProfileKind {
    let weights = profile_mixture(area);
    let mut u = rng.random_range(0.0..1.0f64);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return [ProfileKind::Student, ProfileKind::Worker, ProfileKind::General][i];
        }
        u -= w;
    }
    ProfileKind::General
}

/// Context atoms of the demographic profiles: discrete feature
/// combinations, each a point in `[0,1]^D` with a weight, sitting at odd
/// multiples of 1/16 (the eighth-grid cell centers). A point never
/// straddles a partition boundary, so each populated cell carries the full
/// weight of its atoms.
///
/// Each profile concentrates in two quarter cells (students in the
/// low-corner hot zone and the low diagonal, workers mirrored at the high
/// end, general users off-diagonal in the valley), with four equal-weight
/// atoms per quarter cell arranged symmetrically around its center. Coarse
/// quarter-grid partitions see one well-filled cell per group whose mean
/// demand equals the center value (the surface is multilinear), while
/// finer partitions resolve the atoms individually — so longer horizons
/// genuinely have more to learn. Coordinates repeat the 2-D pattern across
/// dimensions.
pub fn profile_atoms(kind: ProfileKind, dims: u32) -> Vec<(Vec<f64>, f64)> {
    let d = dims as usize;
    let repeat = |a: f64, b: f64| -> Vec<f64> {
        (0..d).map(|k| if k % 2 == 0 { a } else { b }).collect()
    };
    // the four symmetric offsets inside a quarter cell centered at c:
    // (c +- 1/16, c +- 1/16) via the two per-dim node values
    let quad = |c0: f64, c1: f64, w: f64| -> Vec<(Vec<f64>, f64)> {
        let lo0 = c0 - 0.0625;
        let hi0 = c0 + 0.0625;
        let lo1 = c1 - 0.0625;
        let hi1 = c1 + 0.0625;
        vec![
            (repeat(lo0, lo1), w / 4.0),
            (repeat(lo0, hi1), w / 4.0),
            (repeat(hi0, lo1), w / 4.0),
            (repeat(hi0, hi1), w / 4.0),
        ]
    };
    let mut atoms = match kind {
        ProfileKind::Student => {
            let mut v = quad(0.125, 0.125, 0.6);
            v.extend(quad(0.375, 0.375, 0.4));
            v
        }
        ProfileKind::Worker => {
            let mut v = quad(0.875, 0.875, 0.6);
            v.extend(quad(0.625, 0.625, 0.4));
            v
        }
        ProfileKind::General => {
            let mut v = quad(0.375, 0.625, 0.5);
            v.extend(quad(0.625, 0.375, 0.5));
            v
        }
    };
    // dims == 1 collapses pairs onto shared first coordinates; weights
    // simply add up when points coincide
    atoms.retain(|(_, w)| *w > 0.0);
    atoms
}

/// Draw a full context vector for one profile kind.
pub fn sample_context(rng: &mut ChaCha20Rng, kind: ProfileKind, dims: u32) -> Vec<f64> {
    let atoms = profile_atoms(kind, dims);
    let mut u = rng.random_range(0.0..1.0f64);
    for (point, w) in &atoms {
        if u < *w {
            return point.clone();
        }
        u -= w;
    }
    atoms.last().expect("profiles have atoms").0.clone()
}

/// Draw one slot's population. Users arrive per station (Poisson at the
/// configured rate), are placed uniformly in that station's disk, and get
/// gains to every covering station plus the MBS.
pub fn generate_population(cfg: &ScenarioConfig, topo: &Topology, rng: &mut ChaCha20Rng) -> Vec<UserSlotState> {
    let mut users = Vec::new();
    if cfg.arrival_rate <= 0.0 {
        return users;
    }
    let poisson = Poisson::new(cfg.arrival_rate).expect("positive rate");
    let exponent = cfg.channel.pathloss_exponent;
    let mbs_exponent = cfg.mbs_channel().pathloss_exponent;
    for home in &topo.sbs {
        let count = poisson.sample(rng) as usize;
        for _ in 0..count {
            // uniform in the disk
            let radius = home.range_m * rng.random_range(0.0..1.0f64).sqrt();
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let position = (home.position.0 + radius * angle.cos(), home.position.1 + radius * angle.sin());
            let kind = sample_profile(rng, home.area_type);
            let context = sample_context(rng, kind, cfg.context_dims);

            let mut sbs_gains = Vec::new();
            for s in &topo.sbs {
                let d = dist(position, s.position);
                let g = channel_gain(d, s.range_m, exponent);
                if g > 0.0 {
                    sbs_gains.push((s.id, g));
                }
            }
            let mbs_gain = channel_gain(dist(position, topo.mbs_position), f64::INFINITY, mbs_exponent);
            users.push(UserSlotState {
                id: users.len(),
                position,
                context,
                sbs_gains,
                mbs_gain,
            });
        }
    }
    users
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}
