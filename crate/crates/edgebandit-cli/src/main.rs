//! Batch experiment runner for the edgebandit library.
//!
//! Three subcommands cover the workflow: `run` executes one policy and
//! writes trace/metrics files, `compare` runs a policy set on paired seeds
//! and emits a cumulative-utility table, and `sweep` repeats a comparison
//! along one scenario axis. Everything is seeded and file outputs are
//! byte-stable; there is no interactive surface.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use edgebandit::sim::output::{self, Curve, SweepRow};
use edgebandit::sim::{self, PolicyName, ScenarioConfig};

#[derive(Parser)]
#[command(name = "edgebandit", version, about = "Edge service placement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario config (TOML); omitted = built-in default scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated run seeds, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Also emit SVG plots next to the CSVs.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy; write per-seed trace and metrics files.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Policy override (oracle|seen|seen-o|cucb|c2ucb|eps-greedy|random).
        #[arg(long)]
        policy: Option<String>,
    },
    /// Paired-seed comparison of several policies on one scenario.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated policies; default compares all six.
        #[arg(long, value_delimiter = ',')]
        policies: Vec<String>,
    },
    /// Repeat a comparison along one axis: budget|overlap|context_dims|horizon.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Axis spec, e.g. `budget=1,2,3` or `overlap=0,0.1,0.2`.
        #[arg(long)]
        sweep: String,
        /// Comma-separated policies; default compares all six.
        #[arg(long, value_delimiter = ',')]
        policies: Vec<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    init_thread_pool()?;
    match cli.command {
        Command::Run { common, policy } => cmd_run(&common, policy.as_deref()),
        Command::Compare { common, policies } => {
            let list = parse_policies(&policies)?;
            cmd_compare(&common, &list).map(|_| ())
        }
        Command::Sweep { common, sweep, policies } => {
            let list = parse_policies(&policies)?;
            cmd_sweep(&common, &sweep, &list)
        }
    }
}

/// EDGEBANDIT_THREADS caps the worker pool; unset = rayon default.
fn init_thread_pool() -> Result<()> {
    if let Ok(v) = std::env::var("EDGEBANDIT_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("EDGEBANDIT_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("EDGEBANDIT_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool already initialized")?;
    }
    Ok(())
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig> {
    let cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ScenarioConfig::default(),
    };
    Ok(cfg)
}

fn seeds_of(common: &CommonArgs, cfg: &ScenarioConfig) -> Vec<u64> {
    if common.seeds.is_empty() {
        vec![cfg.seed]
    } else {
        common.seeds.clone()
    }
}

fn parse_policies(list: &[String]) -> Result<Vec<PolicyName>> {
    if list.is_empty() {
        return Ok(vec![
            PolicyName::Oracle,
            PolicyName::Seen,
            PolicyName::SeenO,
            PolicyName::Cucb,
            PolicyName::C2ucb,
            PolicyName::EpsGreedy,
            PolicyName::Random,
        ]);
    }
    list.iter()
        .map(|s| PolicyName::parse(s).map_err(anyhow::Error::from))
        .collect()
}

fn cmd_run(common: &CommonArgs, policy: Option<&str>) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(p) = policy {
        cfg.policy = PolicyName::parse(p)?;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&common.out)?;
    let seeds = seeds_of(common, &cfg);

    let results = sim::run_replications(&cfg, &seeds)?;
    for res in &results {
        let tag = format!("{}_seed{}", res.report.policy, res.report.seed);
        output::write_trace_csv(&common.out.join(format!("trace_{tag}.csv")), &res.traces)?;
        output::write_metrics_csv(&common.out.join(format!("metrics_{tag}.csv")), &res.report)?;
        if common.svg {
            let curves = vec![
                Curve {
                    name: "cum_utility".into(),
                    values: res.traces.iter().map(|t| t.cum_utility).collect(),
                },
                Curve {
                    name: "cum_regret".into(),
                    values: res.traces.iter().map(|t| t.cum_regret).collect(),
                },
            ];
            output::write_curves_svg(
                &common.out.join(format!("run_{tag}.svg")),
                &format!("{} seed {}", res.report.policy, res.report.seed),
                &curves,
            )?;
        }
        let last_mse = res
            .report
            .checkpoints
            .last()
            .map(|c| c.mse_visited)
            .unwrap_or(f64::NAN);
        println!(
            "{} seed={} utility={:.3} regret={:.3} mse={:.4} edge_frac={:.3}",
            res.report.policy,
            res.report.seed,
            res.report.final_cum_utility,
            res.report.final_cum_regret,
            last_mse,
            res.report.edge_fraction,
        );
    }
    Ok(())
}

/// Mean final (utility, regret) per policy over paired seeds; also writes
/// the per-slot mean cumulative-utility table.
fn cmd_compare(common: &CommonArgs, policies: &[PolicyName]) -> Result<Vec<(PolicyName, f64, f64)>> {
    let cfg = load_config(common)?;
    compare_at(common, &cfg, policies, &common.out, "compare")
}

fn compare_at(
    common: &CommonArgs,
    base: &ScenarioConfig,
    policies: &[PolicyName],
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<(PolicyName, f64, f64)>> {
    if policies.is_empty() {
        bail!("at least one policy required");
    }
    std::fs::create_dir_all(out_dir)?;
    let seeds = seeds_of(common, base);
    let mut curves = Vec::new();
    let mut summary = Vec::new();
    for &p in policies {
        let mut cfg = base.clone();
        cfg.policy = p;
        cfg.validate()?;
        let results = sim::run_replications(&cfg, &seeds)
            .with_context(|| format!("running policy {}", p.as_str()))?;
        let slots = cfg.horizon as usize;
        let mut mean_curve = vec![0.0f64; slots];
        let mut final_u = 0.0;
        let mut final_r = 0.0;
        for res in &results {
            for (i, tr) in res.traces.iter().enumerate() {
                mean_curve[i] += tr.cum_utility;
            }
            final_u += res.report.final_cum_utility;
            final_r += res.report.final_cum_regret;
        }
        let k = results.len() as f64;
        for v in &mut mean_curve {
            *v /= k;
        }
        final_u /= k;
        final_r /= k;
        println!(
            "{}: mean final utility {:.3}, mean final regret {:.3} ({} seeds)",
            p.as_str(),
            final_u,
            final_r,
            seeds.len()
        );
        curves.push(Curve { name: p.as_str().to_string(), values: mean_curve });
        summary.push((p, final_u, final_r));
    }
    output::write_compare_csv(&out_dir.join(format!("{stem}.csv")), &curves)?;
    if common.svg {
        output::write_curves_svg(
            &out_dir.join(format!("{stem}.svg")),
            "mean cumulative utility",
            &curves,
        )?;
    }
    Ok(summary)
}

fn cmd_sweep(common: &CommonArgs, sweep: &str, policies: &[PolicyName]) -> Result<()> {
    let base = load_config(common)?;
    let (axis, raw_values) = sweep
        .split_once('=')
        .context("sweep must look like `axis=v1,v2,...`")?;
    let values: Vec<&str> = raw_values.split(',').filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    std::fs::create_dir_all(&common.out)?;

    let mut rows = Vec::new();
    for value in &values {
        let mut cfg = base.clone();
        apply_axis(&mut cfg, axis, value)?;
        let dir_tag = value.replace('.', "p");
        let sub = common.out.join(format!("{axis}_{dir_tag}"));
        println!("[sweep] {axis} = {value}");
        let summary = compare_at(common, &cfg, policies, &sub, "compare")?;
        for (p, u, r) in summary {
            rows.push(SweepRow {
                axis: axis.to_string(),
                axis_value: value.to_string(),
                policy: p.as_str().to_string(),
                final_utility: u,
                final_regret: r,
            });
        }
    }
    output::write_sweep_csv(&common.out.join("sweep.csv"), &rows)?;
    Ok(())
}

fn apply_axis(cfg: &mut ScenarioConfig, axis: &str, value: &str) -> Result<()> {
    match axis {
        "budget" => {
            cfg.budget = value.parse().with_context(|| format!("bad budget `{value}`"))?;
        }
        "overlap" => {
            let t: f64 = value.parse().with_context(|| format!("bad overlap `{value}`"))?;
            cfg.overlap_target = Some(t);
            cfg.association = sim::Association::BestGain;
        }
        "context_dims" => {
            cfg.context_dims = value.parse().with_context(|| format!("bad context_dims `{value}`"))?;
            cfg.sbs_context_dims.clear();
        }
        "horizon" => {
            cfg.horizon = value.parse().with_context(|| format!("bad horizon `{value}`"))?;
        }
        other => bail!("unknown sweep axis `{other}` (budget|overlap|context_dims|horizon)"),
    }
    Ok(())
}
