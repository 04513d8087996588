//! Ground-truth demand surfaces and bounded demand sampling.
//!
//! A [`DemandFunction`] maps a context `x` in `[0,1]^D` to the expected
//! per-user task demand `mu(x)` in `[0, d_max]`, together with declared
//! smoothness constants `(L, alpha)` such that
//! `|mu(x) - mu(x')| <= L * ||x - x'||^alpha`. Realized demands are drawn
//! as `Binomial(d_max, mu(x)/d_max)`, which keeps them integer-valued,
//! bounded, and with the right mean.
//!
//! Two surface families are bundled: sums of Gaussian bumps (smooth,
//! analytic Lipschitz constant) and multilinear grid tables, which can be
//! loaded from a plain-text file for measured demand surfaces.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// One isotropic Gaussian bump `height * exp(-||x - center||^2 / (2 width^2))`.
#[derive(Debug, Clone)]
pub struct GaussianBump {
    pub center: Vec<f64>,
    pub height: f64,
    pub width: f64,
}

#[derive(Debug, Clone)]
enum Surface {
    /// `base + sum of bumps`, clamped into `[0, d_max]`.
    Bumps { base: f64, bumps: Vec<GaussianBump> },
    /// Multilinear interpolation over `nodes_per_dim^dims` lattice values at
    /// coordinates `j / (nodes_per_dim - 1)`; row-major, first dim slowest.
    Table { nodes_per_dim: u32, values: Vec<f64> },
}

/// Expected-demand surface over `[0,1]^dims` with declared smoothness.
#[derive(Debug, Clone)]
pub struct DemandFunction {
    surface: Surface,
    dims: u32,
    d_max: f64,
    holder_l: f64,
    holder_alpha: f64,
    name: String,
}

// Margin applied to analytically derived Lipschitz constants so that float
// rounding in the verifier cannot flag a true bound as violated.
const L_CUSHION: f64 = 1.01;

impl DemandFunction {
    /// Sum-of-bumps surface. The declared Lipschitz constant is the analytic
    /// bound `sum(height_i / (width_i * sqrt(e)))`; clamping preserves it.
    pub fn gaussian_bumps(dims: u32, d_max: f64, base: f64, bumps: Vec<GaussianBump>) -> Result<Self> {
        if dims < 1 || !(d_max > 0.0) {
            return Err(Error::Parameter("dims >= 1 and d_max > 0 required".into()));
        }
        if !(0.0..=d_max).contains(&base) {
            return Err(Error::Parameter(format!("base {base} outside [0, {d_max}]")));
        }
        let mut l = 0.0;
        for b in &bumps {
            if b.center.len() != dims as usize {
                return Err(Error::Parameter("bump center dimension mismatch".into()));
            }
            if !(b.width > 0.0) || !(b.height >= 0.0) {
                return Err(Error::Parameter("bump width must be positive, height non-negative".into()));
            }
            l += b.height / (b.width * std::f64::consts::E.sqrt());
        }
        Ok(Self {
            surface: Surface::Bumps { base, bumps },
            dims,
            d_max,
            holder_l: (l * L_CUSHION).max(1e-9),
            holder_alpha: 1.0,
            name: "gaussian_bumps".into(),
        })
    }

    /// Constant surface `mu(x) = value`.
    pub fn constant(dims: u32, value: f64, d_max: f64) -> Result<Self> {
        let mut f = Self::gaussian_bumps(dims, d_max, value, Vec::new())?;
        f.name = "constant".into();
        Ok(f)
    }

    /// Grid table with `nodes_per_dim^dims` values in row-major order
    /// (first dimension slowest). `nodes_per_dim == 1` means constant.
    pub fn table(dims: u32, nodes_per_dim: u32, values: Vec<f64>, d_max: f64) -> Result<Self> {
        if dims < 1 || nodes_per_dim < 1 || !(d_max > 0.0) {
            return Err(Error::Parameter("dims, nodes_per_dim >= 1 and d_max > 0 required".into()));
        }
        let expected = (nodes_per_dim as usize).checked_pow(dims).ok_or_else(|| {
            Error::Capacity(format!("table of {nodes_per_dim}^{dims} nodes overflows"))
        })?;
        if values.len() != expected {
            return Err(Error::Parameter(format!(
                "table needs {expected} values ({nodes_per_dim}^{dims}), got {}",
                values.len()
            )));
        }
        for &v in &values {
            if !(0.0..=d_max).contains(&v) {
                return Err(Error::Domain(format!("table value {v} outside [0, {d_max}]")));
            }
        }
        let l = table_lipschitz(dims, nodes_per_dim, &values);
        Ok(Self {
            surface: Surface::Table { nodes_per_dim, values },
            dims,
            d_max,
            holder_l: (l * L_CUSHION).max(1e-9),
            holder_alpha: 1.0,
            name: "table".into(),
        })
    }

    /// Load a grid table from a plain-text file.
    ///
    /// Format: one header line `dims,h,d_max`, then the `h^dims` cell means
    /// in row-major order, comma-separated, any number of values per line.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parameter("empty demand table file".into()))?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parameter(format!("header must be `dims,h,d_max`, got `{header}`")));
        }
        let dims: u32 = fields[0]
            .parse()
            .map_err(|_| Error::Parameter(format!("bad dims `{}`", fields[0])))?;
        let nodes: u32 = fields[1]
            .parse()
            .map_err(|_| Error::Parameter(format!("bad h `{}`", fields[1])))?;
        let d_max: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Parameter(format!("bad d_max `{}`", fields[2])))?;
        let mut values = Vec::new();
        for line in lines {
            for tok in line.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                values.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::Parameter(format!("bad table value `{tok}`")))?,
                );
            }
        }
        let mut f = Self::table(dims, nodes, values, d_max)?;
        f.name = "csv_table".into();
        Ok(f)
    }

    pub fn dims(&self) -> u32 {
        self.dims
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn holder_l(&self) -> f64 {
        self.holder_l
    }

    pub fn holder_alpha(&self) -> f64 {
        self.holder_alpha
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Expected demand `mu(x)`, guaranteed inside `[0, d_max]`.
    pub fn expected_demand(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dims as usize {
            return Err(Error::Domain(format!(
                "context has {} dims, demand function expects {}",
                x.len(),
                self.dims
            )));
        }
        for &c in x {
            if !(0.0..=1.0).contains(&c) || !c.is_finite() {
                return Err(Error::Domain(format!("coordinate {c} outside [0,1]")));
            }
        }
        let raw = match &self.surface {
            Surface::Bumps { base, bumps } => {
                let mut v = *base;
                for b in bumps {
                    let r2: f64 = x
                        .iter()
                        .zip(&b.center)
                        .map(|(a, c)| (a - c) * (a - c))
                        .sum();
                    v += b.height * (-r2 / (2.0 * b.width * b.width)).exp();
                }
                v
            }
            Surface::Table { nodes_per_dim, values } => {
                multilinear(*nodes_per_dim, values, x)
            }
        };
        Ok(raw.clamp(0.0, self.d_max))
    }

    /// Check the smoothness condition `|mu(x)-mu(x')| <= L ||x-x'||^alpha`
    /// on `n_pairs` random pairs. Reports the worst observed ratio; a tiny
    /// relative slack (1e-9) absorbs float rounding in the norm.
    pub fn verify_holder(&self, l: f64, alpha: f64, n_pairs: usize, rng: &mut ChaCha20Rng) -> HolderReport {
        let mut worst = 0.0f64;
        let mut pass = true;
        for _ in 0..n_pairs {
            let x: Vec<f64> = (0..self.dims).map(|_| rng.random_range(0.0..=1.0)).collect();
            let y: Vec<f64> = (0..self.dims).map(|_| rng.random_range(0.0..=1.0)).collect();
            let dist: f64 = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist == 0.0 {
                continue;
            }
            let gap = (self.expected_demand(&x).unwrap() - self.expected_demand(&y).unwrap()).abs();
            let ratio = gap / dist.powf(alpha);
            worst = worst.max(ratio);
            if gap > l * dist.powf(alpha) * (1.0 + 1e-9) + 1e-12 {
                pass = false;
            }
        }
        HolderReport { pass, worst_ratio: worst, pairs: n_pairs }
    }
}

/// Outcome of a smoothness check.
#[derive(Debug, Clone, Copy)]
pub struct HolderReport {
    pub pass: bool,
    /// Max observed `|mu(x)-mu(x')| / ||x-x'||^alpha`.
    pub worst_ratio: f64,
    pub pairs: usize,
}

fn table_lipschitz(dims: u32, nodes: u32, values: &[f64]) -> f64 {
    if nodes < 2 {
        return 0.0;
    }
    // per-axis bound: (nodes-1) * max adjacent difference along that axis
    let mut sum_sq = 0.0;
    let n = nodes as usize;
    for axis in 0..dims as usize {
        // stride of the axis in row-major order, first dim slowest
        let stride = n.pow(dims - 1 - axis as u32);
        let mut max_diff = 0.0f64;
        for (i, &v) in values.iter().enumerate() {
            let along = (i / stride) % n;
            if along + 1 < n {
                max_diff = max_diff.max((values[i + stride] - v).abs());
            }
        }
        let axis_l = max_diff * (nodes - 1) as f64;
        sum_sq += axis_l * axis_l;
    }
    sum_sq.sqrt()
}

fn multilinear(nodes: u32, values: &[f64], x: &[f64]) -> f64 {
    if nodes == 1 {
        return values[0];
    }
    let n = nodes as usize;
    let dims = x.len();
    // lower node index and fractional offset per dim
    let mut lo = Vec::with_capacity(dims);
    let mut frac = Vec::with_capacity(dims);
    for &c in x {
        let scaled = c * (nodes - 1) as f64;
        let i = (scaled.floor() as usize).min(n - 2);
        lo.push(i);
        frac.push(scaled - i as f64);
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dims) {
        let mut weight = 1.0;
        let mut index = 0usize;
        for (k, (&i, &f)) in lo.iter().zip(&frac).enumerate() {
            let hi = (corner >> k) & 1 == 1;
            weight *= if hi { f } else { 1.0 - f };
            index = index * n + i + hi as usize;
        }
        acc += weight * values[index];
    }
    acc
}

/// Seeded bounded-demand sampler: `Binomial(d_max, mu/d_max)`.
#[derive(Debug, Clone)]
pub struct DemandSampler {
    rng: ChaCha20Rng,
    d_max: u32,
}

impl DemandSampler {
    pub fn new(rng: ChaCha20Rng, d_max: u32) -> Self {
        Self { rng, d_max }
    }

    pub fn sample(&mut self, mu: f64) -> Result<u32> {
        sample_demand(&mut self.rng, mu, self.d_max)
    }
}

/// Draw one realized demand with mean `mu` from `{0, ..., d_max}`.
pub fn sample_demand(rng: &mut ChaCha20Rng, mu: f64, d_max: u32) -> Result<u32> {
    if !(0.0..=d_max as f64).contains(&mu) || !mu.is_finite() {
        return Err(Error::Domain(format!("mean demand {mu} outside [0, {d_max}]")));
    }
    let p = mu / d_max as f64;
    let bin = Binomial::new(d_max as u64, p)
        .map_err(|e| Error::Parameter(format!("binomial: {e}")))?;
    Ok(bin.sample(rng) as u32)
}

/// The demand surfaces shipped with the library, each paired with its
/// declared smoothness constants. Used by the conformance checks and as
/// scenario defaults.
pub fn bundled() -> Vec<DemandFunction> {
    let mut out = Vec::new();
    for dims in 2..=4u32 {
        out.push(default_surface(dims));
    }
    out.push(default_bumps(2));
    out.push(
        DemandFunction::table(
            2,
            3,
            vec![0.5, 1.0, 0.5, 1.0, 4.0, 1.0, 0.5, 1.0, 0.5],
            10.0,
        )
        .expect("bundled table is valid"),
    );
    out.push(DemandFunction::constant(2, 3.0, 10.0).expect("constant is valid"));
    out
}

// Node heights of the 2-D reference surface at the quarter-point lattice.
// Two demand hot zones sit on the low and high diagonal blocks with a flat
// valley between them; the hand-picked corners make neighbouring quarter
// cells differ strongly, so context resolves real value differences.
const SURFACE_NODES_2D: [[f64; 5]; 5] = [
    [9.0, 7.0, 2.0, 1.0, 1.0],
    [7.0, 9.0, 2.0, 1.0, 1.0],
    [2.0, 2.0, 2.0, 2.0, 2.0],
    [1.0, 1.0, 2.0, 8.0, 7.0],
    [1.0, 1.0, 2.0, 7.0, 9.0],
];

/// Default demand surface for a given context dimension: a multilinear
/// table on the quarter-point lattice with hot zones around `[0.25]^D` and
/// `[0.75]^D` and a low valley between them.
///
/// Higher dimensions average the 2-D reference over consecutive coordinate
/// pairs, which keeps the value range and block structure; `dims == 1`
/// takes the 2-D diagonal.
pub fn default_surface(dims: u32) -> DemandFunction {
    let n = 5usize;
    let total = n.pow(dims);
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims as usize];
    for _ in 0..total {
        let v = if dims == 1 {
            SURFACE_NODES_2D[idx[0]][idx[0]]
        } else {
            let pairs = dims as usize - 1;
            idx.windows(2)
                .map(|w| SURFACE_NODES_2D[w[0]][w[1]])
                .sum::<f64>()
                / pairs as f64
        };
        values.push(v);
        for k in (0..dims as usize).rev() {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
    let mut f = DemandFunction::table(dims, 5, values, 10.0).expect("default surface is valid");
    f.name = "default_surface".into();
    f
}

/// Two well-separated Gaussian bumps over a small base level.
pub fn default_bumps(dims: u32) -> DemandFunction {
    let lo = vec![0.25; dims as usize];
    let hi = vec![0.75; dims as usize];
    DemandFunction::gaussian_bumps(
        dims,
        10.0,
        0.5,
        vec![
            GaussianBump { center: lo, height: 6.0, width: 0.35 },
            GaussianBump { center: hi, height: 5.0, width: 0.30 },
        ],
    )
    .expect("default bumps are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn constant_surface() {
        let f = DemandFunction::constant(3, 2.5, 10.0).unwrap();
        for x in [[0.0, 0.0, 0.0], [0.5, 0.2, 0.9], [1.0, 1.0, 1.0]] {
            assert_relative_eq!(f.expected_demand(&x).unwrap(), 2.5);
        }
        assert!(f.expected_demand(&[0.5, 0.5]).is_err());
        assert!(f.expected_demand(&[0.5, 0.5, 1.2]).is_err());
    }

    #[test]
    fn bump_peak_found_by_grid_oracle() {
        let f = DemandFunction::gaussian_bumps(
            2,
            10.0,
            0.0,
            vec![GaussianBump { center: vec![0.4, 0.6], height: 5.0, width: 0.2 }],
        )
        .unwrap();
        // grid search over 100x100 points: the max must sit at the center
        let mut best = (0.0, [0.0, 0.0]);
        for i in 0..=100 {
            for j in 0..=100 {
                let x = [i as f64 / 100.0, j as f64 / 100.0];
                let v = f.expected_demand(&x).unwrap();
                if v > best.0 {
                    best = (v, x);
                }
            }
        }
        assert_relative_eq!(best.0, f.expected_demand(&[0.4, 0.6]).unwrap());
        assert_relative_eq!(best.1[0], 0.4);
        assert_relative_eq!(best.1[1], 0.6);
    }

    #[test]
    fn bilinear_center() {
        let f = DemandFunction::table(2, 2, vec![0.0, 1.0, 1.0, 0.0], 1.0).unwrap();
        assert_relative_eq!(f.expected_demand(&[0.5, 0.5]).unwrap(), 0.5);
        assert_relative_eq!(f.expected_demand(&[0.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(f.expected_demand(&[0.0, 1.0]).unwrap(), 1.0);
        assert_relative_eq!(f.expected_demand(&[1.0, 0.25]).unwrap(), 0.75);
    }

    #[test]
    fn table_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demand.csv");
        std::fs::write(&path, "2,2,1\n0,1\n1,0\n").unwrap();
        let f = DemandFunction::from_table_file(&path).unwrap();
        assert_eq!(f.dims(), 2);
        assert_relative_eq!(f.expected_demand(&[0.5, 0.5]).unwrap(), 0.5);

        std::fs::write(&path, "2,2\n0,1\n").unwrap();
        assert!(DemandFunction::from_table_file(&path).is_err());
    }

    #[test]
    fn sampler_respects_bounds_and_mean() {
        let mut s = DemandSampler::new(rng(7), 10);
        for _ in 0..100 {
            assert_eq!(s.sample(0.0).unwrap(), 0);
            assert_eq!(s.sample(10.0).unwrap(), 10);
        }
        // mean d_max/2 over 1e5 draws: within 3 sigma of the binomial mean
        let mut s = DemandSampler::new(rng(8), 10);
        let n = 100_000;
        let mut sum = 0u64;
        for _ in 0..n {
            sum += s.sample(5.0).unwrap() as u64;
        }
        let mean = sum as f64 / n as f64;
        // sd of the sample mean: sqrt(10 * 0.25 / n)
        let sigma = (10.0 * 0.5 * 0.5 / n as f64).sqrt();
        assert!((mean - 5.0).abs() < 3.0 * sigma, "mean {mean} too far from 5.0");
        assert!(s.sample(-0.1).is_err());
        assert!(s.sample(10.1).is_err());
    }

    #[test]
    fn sampler_reproducible() {
        let mut a = DemandSampler::new(rng(99), 10);
        let mut b = DemandSampler::new(rng(99), 10);
        for i in 0..200 {
            let mu = (i % 11) as f64;
            assert_eq!(a.sample(mu).unwrap(), b.sample(mu).unwrap());
        }
    }

    #[test]
    fn holder_check_pass_and_fail() {
        // constant: any positive L passes with ratio 0
        let c = DemandFunction::constant(2, 4.0, 10.0).unwrap();
        let rep = c.verify_holder(1e-6, 1.0, 1000, &mut rng(1));
        assert!(rep.pass);
        assert_eq!(rep.worst_ratio, 0.0);

        // mu(x) = x1 (as a 2-node table): 1-Lipschitz in the first coordinate
        let plane = DemandFunction::table(2, 2, vec![0.0, 0.0, 1.0, 1.0], 1.0).unwrap();
        let rep = plane.verify_holder(1.0, 1.0, 10_000, &mut rng(2));
        assert!(rep.pass, "worst ratio {}", rep.worst_ratio);
        assert!(rep.worst_ratio <= 1.0 + 1e-9);

        // declaring L = 0.5 must fail: the pair (0,y)-(1,y) has ratio 1
        let rep = plane.verify_holder(0.5, 1.0, 10_000, &mut rng(3));
        assert!(!rep.pass);
    }

    #[test]
    fn bundled_surfaces_satisfy_declared_constants() {
        for f in bundled() {
            let rep = f.verify_holder(f.holder_l(), f.holder_alpha(), 2000, &mut rng(11));
            assert!(
                rep.pass,
                "{} violates declared L={} (worst ratio {})",
                f.name(),
                f.holder_l(),
                rep.worst_ratio
            );
        }
    }
}
