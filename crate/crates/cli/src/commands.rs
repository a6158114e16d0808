use std::fs;
use std::path::{Path, PathBuf};

use banditlb::bounds::{evaluate_bound, BoundKind, BoundParams, BoundQuery};
use banditlb::runner::{run_plan, scaling_fit, worst_case_over_targets, ExperimentPlan, RegretStats, Statistic};

use crate::config::{parse_plan, DEFAULT_SEED};
use crate::error::CliError;
use crate::output::{opt_real, real, write_csv};
use crate::verify::{run_suite, Check, SuiteOptions, MIN_SCALING_REPLICATIONS, SUITES};

pub const REGRET_HEADER: &[&str] = &[
    "env_family",
    "env_params",
    "target_arm",
    "policy",
    "T",
    "replications",
    "mean_regret",
    "stderr",
    "q50",
    "q90",
    "q_delta",
    "tail_threshold",
    "tail_freq",
    "seed",
];
pub const BOUNDS_HEADER: &[&str] = &["bound", "params", "value", "hypotheses_ok", "violated_conditions"];
pub const VERIFY_HEADER: &[&str] = &["suite", "check", "value", "lower", "upper", "passed", "detail"];
pub const SCALING_HEADER: &[&str] = &["policy", "statistic", "exponent", "intercept", "residual", "points"];

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Simulate { config: PathBuf, overrides: Vec<String> },
    Bounds { config: Option<PathBuf>, bound: Option<String>, params: Vec<String> },
    Verify { suite: String, replications: Option<usize> },
    Scaling { config: PathBuf, overrides: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| banditlb::Error::Capacity(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    match &cfg.command {
        Command::Simulate { config, overrides } => cmd_simulate(cfg, config, overrides),
        Command::Bounds { config, bound, params } => cmd_bounds(cfg, config.as_deref(), bound.as_deref(), params),
        Command::Verify { suite, replications } => cmd_verify(cfg, suite, *replications),
        Command::Scaling { config, overrides } => cmd_scaling(cfg, config, overrides),
    }
}

fn load_plan(cfg: &RunConfig, path: &Path, overrides: &[String]) -> Result<ExperimentPlan, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut plan = parse_plan(&text, overrides)?;
    if let Some(seed) = cfg.seed {
        plan.master_seed = seed;
    }
    Ok(plan)
}

fn run(cfg: &RunConfig, plan: &ExperimentPlan) -> Result<RegretStats, CliError> {
    let stats = in_pool(cfg.workers, || run_plan(plan))??;
    let mut warned = Vec::new();
    for c in &stats.cells {
        if let Some(v) = c.verdict.as_ref().filter(|v| !v.ok()) {
            let key = (v.bound, c.cell.horizon);
            if !warned.contains(&key) {
                eprintln!("warning: {} hypotheses fail at T = {}: {}", v.bound, c.cell.horizon, v.violated().join("; "));
                warned.push(key);
            }
        }
    }
    Ok(stats)
}

pub fn regret_rows(stats: &RegretStats) -> Vec<Vec<String>> {
    stats
        .cells
        .iter()
        .map(|c| {
            vec![
                c.cell.family.name().to_string(),
                c.cell.family.params(),
                c.cell.target.map(|j| (j + 1).to_string()).unwrap_or_default(),
                c.cell.policy.label(),
                c.cell.horizon.to_string(),
                c.replications.to_string(),
                real(c.mean),
                real(c.stderr),
                opt_real(c.quantile(0.5)),
                opt_real(c.quantile(0.9)),
                opt_real(c.q_delta),
                opt_real(c.tail_threshold),
                opt_real(c.tail_freq),
                stats.master_seed.to_string(),
            ]
        })
        .collect()
}

fn with_csv_quantiles(mut plan: ExperimentPlan) -> ExperimentPlan {
    plan.quantiles = vec![0.5, 0.9];
    plan
}

fn cmd_simulate(cfg: &RunConfig, config: &Path, overrides: &[String]) -> Result<(), CliError> {
    let plan = with_csv_quantiles(load_plan(cfg, config, overrides)?);
    let stats = run(cfg, &plan)?;
    let path = write_csv(&cfg.out, "regret.csv", REGRET_HEADER, &regret_rows(&stats))?;
    println!("wrote {} ({} cells)", path.display(), stats.cells.len());
    Ok(())
}

fn cmd_scaling(cfg: &RunConfig, config: &Path, overrides: &[String]) -> Result<(), CliError> {
    let plan = with_csv_quantiles(load_plan(cfg, config, overrides)?);
    if plan.horizons.len() < 4 {
        return Err(CliError::Config(format!(
            "plan.t_grid: scaling needs at least 4 horizons, got {}",
            plan.horizons.len()
        )));
    }
    if plan.replications < MIN_SCALING_REPLICATIONS {
        return Err(banditlb::Error::Capacity(format!(
            "scaling needs at least {MIN_SCALING_REPLICATIONS} replications to resolve the exponent, got {}",
            plan.replications
        ))
        .into());
    }
    let stats = run(cfg, &plan)?;
    let mut rows = Vec::new();
    if plan.family.has_targets() {
        let worst = worst_case_over_targets(&stats, Statistic::Mean)?;
        for p in &plan.policies {
            let label = p.label();
            let points: Vec<(f64, f64)> =
                worst.iter().filter(|w| w.policy == label).map(|w| (w.horizon as f64, w.value)).collect();
            let fit = scaling_fit(&points)?;
            rows.push(scaling_row(&label, "worst_target_mean", fit, points.len()));
        }
    } else {
        for p in &plan.policies {
            let label = p.label();
            let points = stats.mean_curve(&label, None);
            let fit = scaling_fit(&points)?;
            rows.push(scaling_row(&label, "mean", fit, points.len()));
        }
    }
    write_csv(&cfg.out, "regret.csv", REGRET_HEADER, &regret_rows(&stats))?;
    let path = write_csv(&cfg.out, "scaling.csv", SCALING_HEADER, &rows)?;
    for r in &rows {
        println!("{}: exponent {}", r[0], r[2]);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn scaling_row(policy: &str, statistic: &str, fit: banditlb::runner::ScalingFit, n: usize) -> Vec<String> {
    vec![
        policy.to_string(),
        statistic.to_string(),
        real(fit.exponent),
        real(fit.intercept),
        real(fit.residual),
        n.to_string(),
    ]
}

/// Parses `name=value` bound parameters; names as in [`BoundKind::parameters`].
pub fn parse_bound_params(params: &[String]) -> Result<BoundParams, CliError> {
    let mut out = BoundParams::default();
    for p in params {
        let (name, value) = p
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{p}: expected name=value")))?;
        let (name, value) = (name.trim(), value.trim());
        let bad = || CliError::Config(format!("{name}: cannot parse `{value}`"));
        let real = || value.parse::<f64>().map_err(|_| bad());
        match name {
            "K" => out.arms = Some(value.parse().map_err(|_| bad())?),
            "T" => out.rounds = Some(value.parse().map_err(|_| bad())?),
            "delta" => out.delta = Some(real()?),
            "alpha" => out.alpha = Some(real()?),
            "C" => out.regret_constant = Some(real()?),
            "rho" => out.rho = Some(real()?),
            "L_star" => out.l_star = Some(real()?),
            "Q_T" => out.q_t = Some(real()?),
            "c" => out.c = real()?,
            other => return Err(CliError::Config(format!("{other}: unknown bound parameter"))),
        }
    }
    Ok(out)
}

fn parse_bound_kind(name: &str) -> Result<BoundKind, CliError> {
    BoundKind::parse(name).ok_or_else(|| {
        let known: Vec<&str> = BoundKind::ALL.iter().map(|k| k.id()).collect();
        CliError::Config(format!("bound: unknown bound `{name}`, expected one of {}", known.join(", ")))
    })
}

/// Reads `[bound]` sections (`name = ...` plus parameters) from a file.
fn bound_queries_from_file(path: &Path) -> Result<Vec<BoundQuery>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut groups: Vec<Vec<String>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line == "[bound]" {
            groups.push(Vec::new());
        } else if line.starts_with('[') {
            return Err(CliError::Config(format!("line {}: only [bound] sections are allowed", i + 1)));
        } else {
            groups
                .last_mut()
                .ok_or_else(|| CliError::Config(format!("line {}: key outside [bound]", i + 1)))?
                .push(line.replace(' ', ""));
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let name = g
                .iter()
                .find_map(|kv| kv.strip_prefix("name="))
                .ok_or_else(|| CliError::Config("bound.name: missing key".into()))?;
            let kind = parse_bound_kind(name)?;
            let rest: Vec<String> = g.iter().filter(|kv| !kv.starts_with("name=")).cloned().collect();
            Ok(BoundQuery::new(kind, parse_bound_params(&rest)?))
        })
        .collect()
}

pub fn bound_rows(queries: &[BoundQuery]) -> Result<Vec<Vec<String>>, CliError> {
    queries
        .iter()
        .map(|q| {
            let v = evaluate_bound(q, true)?;
            Ok(vec![
                q.kind.id().to_string(),
                q.params.describe(q.kind),
                real(v.value),
                v.verdict.ok().to_string(),
                v.verdict.violated().join("; "),
            ])
        })
        .collect()
}

fn cmd_bounds(cfg: &RunConfig, config: Option<&Path>, bound: Option<&str>, params: &[String]) -> Result<(), CliError> {
    let mut queries = match config {
        Some(path) => bound_queries_from_file(path)?,
        None => Vec::new(),
    };
    if let Some(name) = bound {
        queries.push(BoundQuery::new(parse_bound_kind(name)?, parse_bound_params(params)?));
    } else if !params.is_empty() {
        return Err(CliError::Config("bound: parameters given without --bound".into()));
    }
    if queries.is_empty() {
        return Err(CliError::Config("bound: pass --bound NAME or a --config with [bound] sections".into()));
    }
    let rows = bound_rows(&queries)?;
    for r in &rows {
        println!("{} [{}] = {} (hypotheses ok: {})", r[0], r[1], r[2], r[3]);
    }
    write_csv(&cfg.out, "bounds.csv", BOUNDS_HEADER, &rows)?;
    Ok(())
}

pub fn check_rows(checks: &[Check]) -> Vec<Vec<String>> {
    checks
        .iter()
        .map(|c| {
            vec![
                c.suite.clone(),
                c.name.clone(),
                real(c.value),
                opt_real(c.lower),
                opt_real(c.upper),
                c.passed().to_string(),
                c.detail.clone(),
            ]
        })
        .collect()
}

fn cmd_verify(cfg: &RunConfig, suite: &str, replications: Option<usize>) -> Result<(), CliError> {
    let opts = SuiteOptions { seed: cfg.seed.unwrap_or(DEFAULT_SEED), replications };
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    let mut checks = Vec::new();
    for name in names {
        checks.extend(in_pool(cfg.workers, || run_suite(name, &opts))??);
    }
    write_csv(&cfg.out, "verify.csv", VERIFY_HEADER, &check_rows(&checks))?;
    let mut failed = Vec::new();
    for c in &checks {
        let status = if c.passed() { "ok" } else { "FAIL" };
        println!("{status:>4}  {}/{}  {:.6e}  {}", c.suite, c.name, c.value, c.detail);
        if !c.passed() {
            failed.push(format!("{}/{}", c.suite, c.name));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed))
    }
}
