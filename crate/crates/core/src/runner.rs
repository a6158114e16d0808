//! Seeded Monte Carlo engine.
//!
//! A plan expands into cells `(environment instance, policy, T)`. Each cell
//! runs `R` replications; replication `r` of cell `c` draws from streams
//! keyed by `(master_seed, cell_id(c), r)`, so results do not depend on the
//! number of workers. Samples are collected in replication order and reduced
//! sequentially.

use rayon::prelude::*;

use crate::bounds::{bound_value, validate_hypotheses, BoundKind, BoundParams, BoundQuery, Verdict};
use crate::envs::{BernoulliFamilySpec, ClippedGaussianSpec, EnvSpec};
use crate::error::{argument, structural, Error, Result};
use crate::loss::{ball_membership, pseudo_regret, regret, BallKind};
use crate::policies::{run_episode, PolicyKind, PolicySpec, Tuning};
use crate::stream::{cell_id, Purpose, StreamKey};
use crate::sum::NeumaierSum;

pub const DEFAULT_MAX_TOTAL_ROUNDS: u64 = 20_000_000_000;

/// How the clipped-Gaussian gap is chosen at each horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gap {
    HighProbability,
    /// Gap calibrated to an algorithm with mean-regret constant C.
    Calibrated(f64),
    Fixed(f64),
}

/// An environment family, instantiated per horizon and target arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvFamily {
    ClippedGaussian { arms: usize, delta: f64, gap: Gap },
    /// Q_j for each target j. `epsilon: None` uses the default ε(α, K, T).
    Bernoulli { arms: usize, alpha: f64, epsilon: Option<f64> },
    /// Uniform mixture of the Q_j.
    BernoulliMixture { arms: usize, alpha: f64, epsilon: Option<f64> },
    /// Q₀: every arm Ber(α + ε).
    BernoulliNull { arms: usize, alpha: f64, epsilon: Option<f64> },
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "default".to_string(), |x| x.to_string())
}

impl EnvFamily {
    pub fn name(&self) -> &'static str {
        match self {
            EnvFamily::ClippedGaussian { .. } => "clipped_gaussian",
            EnvFamily::Bernoulli { .. } => "bernoulli",
            EnvFamily::BernoulliMixture { .. } => "bernoulli_mixture",
            EnvFamily::BernoulliNull { .. } => "bernoulli_null",
        }
    }

    pub fn arms(&self) -> usize {
        match *self {
            EnvFamily::ClippedGaussian { arms, .. }
            | EnvFamily::Bernoulli { arms, .. }
            | EnvFamily::BernoulliMixture { arms, .. }
            | EnvFamily::BernoulliNull { arms, .. } => arms,
        }
    }

    /// Canonical `key=value;...` description of the family parameters.
    pub fn params(&self) -> String {
        match *self {
            EnvFamily::ClippedGaussian { arms, delta, gap } => {
                let gap = match gap {
                    Gap::HighProbability => "high_probability".to_string(),
                    Gap::Calibrated(c) => format!("calibrated;C={c}"),
                    Gap::Fixed(g) => format!("fixed;gap={g}"),
                };
                format!("K={arms};delta={delta};mode={gap}")
            }
            EnvFamily::Bernoulli { arms, alpha, epsilon }
            | EnvFamily::BernoulliMixture { arms, alpha, epsilon }
            | EnvFamily::BernoulliNull { arms, alpha, epsilon } => {
                format!("K={arms};alpha={alpha};epsilon={}", fmt_opt(epsilon))
            }
        }
    }

    /// Whether cells are indexed by a target arm.
    pub fn has_targets(&self) -> bool {
        matches!(self, EnvFamily::ClippedGaussian { .. } | EnvFamily::Bernoulli { .. })
    }

    fn bernoulli(arms: usize, rounds: usize, alpha: f64, epsilon: Option<f64>, target: Option<usize>) -> Result<BernoulliFamilySpec> {
        match epsilon {
            None => BernoulliFamilySpec::new(arms, rounds, alpha, target),
            Some(e) => BernoulliFamilySpec::with_epsilon(arms, rounds, alpha, e, target),
        }
    }

    pub fn instantiate(&self, rounds: usize, target: Option<usize>) -> Result<EnvSpec> {
        let need_target = || target.ok_or_else(|| argument(format!("{} needs a target arm", self.name())));
        Ok(match *self {
            EnvFamily::ClippedGaussian { arms, delta, gap } => {
                let j = need_target()?;
                EnvSpec::ClippedGaussian(match gap {
                    Gap::HighProbability => ClippedGaussianSpec::high_probability(arms, rounds, delta, j)?,
                    Gap::Calibrated(c) => ClippedGaussianSpec::calibrated(arms, rounds, delta, c, j)?,
                    Gap::Fixed(g) => ClippedGaussianSpec::with_gap(arms, rounds, delta, g, j)?,
                })
            }
            EnvFamily::Bernoulli { arms, alpha, epsilon } => {
                EnvSpec::Bernoulli(Self::bernoulli(arms, rounds, alpha, epsilon, Some(need_target()?))?)
            }
            EnvFamily::BernoulliMixture { arms, alpha, epsilon } => {
                EnvSpec::BernoulliMixture(Self::bernoulli(arms, rounds, alpha, epsilon, None)?)
            }
            EnvFamily::BernoulliNull { arms, alpha, epsilon } => {
                EnvSpec::Bernoulli(Self::bernoulli(arms, rounds, alpha, epsilon, None)?)
            }
        })
    }

    /// δ of the high-probability claim this family witnesses, if any.
    pub fn delta(&self) -> Option<f64> {
        match *self {
            EnvFamily::ClippedGaussian { delta, .. } => Some(delta),
            _ => None,
        }
    }

    /// The bound this family is built to witness at horizon `rounds`.
    pub fn witnessed_bound(&self, rounds: usize) -> Option<BoundQuery> {
        match *self {
            EnvFamily::ClippedGaussian { arms, delta, gap } => match gap {
                Gap::HighProbability => Some(BoundQuery::new(BoundKind::Thm1Lower, BoundParams::kt(arms, rounds).delta(delta))),
                Gap::Calibrated(c) => Some(BoundQuery::new(
                    BoundKind::Thm2Lower,
                    BoundParams::kt(arms, rounds).delta(delta).regret_constant(c),
                )),
                Gap::Fixed(_) => None,
            },
            EnvFamily::Bernoulli { arms, alpha, epsilon: None }
            | EnvFamily::BernoulliMixture { arms, alpha, epsilon: None } => {
                Some(BoundQuery::new(BoundKind::Lemma5Lower, BoundParams::kt(arms, rounds).alpha(alpha)))
            }
            _ => None,
        }
    }

    /// Default tail threshold: the witnessed bound, or TΔ/4 for a fixed gap.
    pub fn default_tail_threshold(&self, rounds: usize) -> Option<f64> {
        if let EnvFamily::ClippedGaussian { gap: Gap::Fixed(g), .. } = *self {
            return Some(rounds as f64 * g / 4.0);
        }
        self.witnessed_bound(rounds).and_then(|q| bound_value(&q).ok())
    }
}

/// A policy kind plus tuning overrides; the horizon comes from the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyTemplate {
    pub kind: PolicyKind,
    pub tuning: Tuning,
}

impl PolicyTemplate {
    pub fn new(kind: PolicyKind) -> Self {
        Self { kind, tuning: Tuning::default() }
    }

    pub fn label(&self) -> String {
        let mut s = self.kind.to_string();
        let t = self.tuning;
        for (name, v) in [("eta", t.eta), ("gamma", t.gamma), ("beta", t.beta)] {
            if let Some(v) = v {
                s.push_str(&format!("[{name}={v}]"));
            }
        }
        s
    }

    pub fn spec(&self, arms: usize, horizon: usize) -> PolicySpec {
        PolicySpec::new(self.kind, arms, horizon).with_tuning(self.tuning)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub family: EnvFamily,
    /// 0-based target arms; `None` sweeps all of them for targeted families.
    pub targets: Option<Vec<usize>>,
    pub policies: Vec<PolicyTemplate>,
    pub replications: usize,
    pub master_seed: u64,
    pub horizons: Vec<usize>,
    pub quantiles: Vec<f64>,
    /// Fixed tail threshold; otherwise the family default per horizon.
    pub tail_threshold: Option<f64>,
    /// Ball-membership failures to count, as (kind, α).
    pub ball: Option<(BallKind, f64)>,
    pub max_total_rounds: u64,
}

impl ExperimentPlan {
    pub fn new(family: EnvFamily, policies: Vec<PolicyTemplate>, horizons: Vec<usize>, replications: usize, master_seed: u64) -> Self {
        Self {
            family,
            targets: None,
            policies,
            replications,
            master_seed,
            horizons,
            quantiles: vec![0.5, 0.9],
            tail_threshold: None,
            ball: None,
            max_total_rounds: DEFAULT_MAX_TOTAL_ROUNDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(argument("need at least one replication"));
        }
        if self.horizons.is_empty() {
            return Err(argument("empty T-grid"));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(argument("T-grid must be strictly increasing"));
        }
        if self.horizons[0] < 1 {
            return Err(argument("horizons must be positive"));
        }
        if let Some(q) = self.quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(argument(format!("quantile level {q} outside (0, 1)")));
        }
        if self.policies.is_empty() {
            return Err(argument("no policies"));
        }
        if let Some(targets) = &self.targets {
            if !self.family.has_targets() {
                return Err(argument(format!("{} has no target arms", self.family.name())));
            }
            if let Some(j) = targets.iter().find(|&&j| j >= self.family.arms()) {
                return Err(argument(format!("target arm {} out of range", j + 1)));
            }
        }
        if let Some((kind, alpha)) = self.ball {
            if !(0.0..=kind.max_alpha()).contains(&alpha) {
                return Err(argument(format!("ball radius {alpha} outside [0, {}]", kind.max_alpha())));
            }
        }
        for cell in self.cells() {
            cell.family.instantiate(cell.horizon, cell.target)?;
            cell.policy.spec(cell.family.arms(), cell.horizon).params()?;
        }
        Ok(())
    }

    fn target_list(&self) -> Vec<Option<usize>> {
        if !self.family.has_targets() {
            return vec![None];
        }
        match &self.targets {
            Some(t) => t.iter().copied().map(Some).collect(),
            None => (0..self.family.arms()).map(Some).collect(),
        }
    }

    /// Every cell of the plan, in a fixed order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &target in &self.target_list() {
            for policy in &self.policies {
                for &horizon in &self.horizons {
                    cells.push(Cell::new(self.family, target, *policy, horizon));
                }
            }
        }
        cells
    }

    pub fn total_rounds(&self) -> u64 {
        let per_rep: u64 = self.horizons.iter().map(|&t| t as u64).sum();
        per_rep * self.replications as u64 * self.policies.len() as u64 * self.target_list().len() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub family: EnvFamily,
    pub target: Option<usize>,
    pub policy: PolicyTemplate,
    pub horizon: usize,
    pub id: u64,
}

impl Cell {
    pub fn new(family: EnvFamily, target: Option<usize>, policy: PolicyTemplate, horizon: usize) -> Self {
        let mut cell = Self { family, target, policy, horizon, id: 0 };
        cell.id = cell_id(&cell.canonical());
        cell
    }

    /// Canonical serialization the cell id is hashed from.
    pub fn canonical(&self) -> String {
        format!(
            "family={};{};target={};policy={};T={}",
            self.family.name(),
            self.family.params(),
            self.target.map_or_else(|| "none".to_string(), |j| (j + 1).to_string()),
            self.policy.label(),
            self.horizon
        )
    }
}

/// What one replication produced.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    regret: f64,
    pseudo: Option<f64>,
    in_ball: Option<bool>,
}

fn replicate(cell: &Cell, env: &EnvSpec, ball: Option<(BallKind, f64)>, key: StreamKey) -> Result<Sample> {
    let (lm, realized) = env.sample(&mut key.rng(Purpose::Environment))?;
    let spec = cell.policy.spec(lm.arms(), lm.rounds());
    let traj = run_episode(&spec, &lm, &mut key.rng(Purpose::Policy))?;
    let pseudo = match env {
        EnvSpec::Bernoulli(s) | EnvSpec::BernoulliMixture(s) => {
            Some(pseudo_regret(&traj.actions, &s.with_target(realized).arm_means())?)
        }
        EnvSpec::ClippedGaussian(_) => None,
    };
    let in_ball = ball.map(|(kind, alpha)| ball_membership(&lm, alpha, kind)).transpose()?;
    Ok(Sample { regret: regret(&traj)?, pseudo, in_ball })
}

/// Lower empirical quantile: the order statistic at ⌈q·n⌉.
pub fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Mean and standard error (sample stdev / √n; 0 when n = 1).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut acc = NeumaierSum::new();
    acc.extend(xs.iter().copied());
    let mean = acc.value() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let mut ss = NeumaierSum::new();
    ss.extend(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss.value() / (n - 1.0)).sqrt() / n.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub cell: Cell,
    pub replications: usize,
    pub mean: f64,
    pub stderr: f64,
    /// (level, lower empirical quantile) for every requested level.
    pub quantiles: Vec<(f64, f64)>,
    /// Quantile at level 1 − δ/2 for families carrying a δ.
    pub q_delta: Option<f64>,
    pub tail_threshold: Option<f64>,
    /// Frequency of R_T ≥ tail_threshold.
    pub tail_freq: Option<f64>,
    pub pseudo_mean: Option<f64>,
    pub pseudo_stderr: Option<f64>,
    pub ball_failures: Option<u64>,
    /// Hypotheses of the bound this cell is compared against.
    pub verdict: Option<Verdict>,
}

impl CellStats {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles.iter().find(|(l, _)| *l == level).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretStats {
    pub master_seed: u64,
    pub cells: Vec<CellStats>,
}

fn aggregate(cell: Cell, samples: &[Sample], plan: &ExperimentPlan) -> CellStats {
    let regrets: Vec<f64> = samples.iter().map(|s| s.regret).collect();
    let (mean, stderr) = mean_stderr(&regrets);
    let mut sorted = regrets.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = plan.quantiles.iter().map(|&q| (q, lower_quantile(&sorted, q))).collect();
    let q_delta = cell.family.delta().map(|d| lower_quantile(&sorted, 1.0 - d / 2.0));
    let tail_threshold = plan.tail_threshold.or_else(|| cell.family.default_tail_threshold(cell.horizon));
    let tail_freq = tail_threshold.map(|x| regrets.iter().filter(|&&r| r >= x).count() as f64 / regrets.len() as f64);
    let pseudo: Option<Vec<f64>> = samples.iter().map(|s| s.pseudo).collect();
    let (pseudo_mean, pseudo_stderr) = match pseudo {
        Some(p) => {
            let (m, s) = mean_stderr(&p);
            (Some(m), Some(s))
        }
        None => (None, None),
    };
    let ball_failures = plan
        .ball
        .map(|_| samples.iter().filter(|s| s.in_ball == Some(false)).count() as u64);
    let verdict = cell.family.witnessed_bound(cell.horizon).map(|q| validate_hypotheses(&q));
    CellStats {
        replications: samples.len(),
        cell,
        mean,
        stderr,
        quantiles,
        q_delta,
        tail_threshold,
        tail_freq,
        pseudo_mean,
        pseudo_stderr,
        ball_failures,
        verdict,
    }
}

/// Runs every cell of the plan on the current rayon pool.
pub fn run_plan(plan: &ExperimentPlan) -> Result<RegretStats> {
    plan.validate()?;
    let total = plan.total_rounds();
    if total > plan.max_total_rounds {
        return Err(Error::Capacity(format!(
            "plan needs {total} rounds, ceiling is {}",
            plan.max_total_rounds
        )));
    }
    let mut cells = Vec::new();
    for cell in plan.cells() {
        let env = cell.family.instantiate(cell.horizon, cell.target)?;
        let samples = (0..plan.replications as u64)
            .into_par_iter()
            .map(|r| replicate(&cell, &env, plan.ball, StreamKey::new(plan.master_seed, cell.id, r)))
            .collect::<Result<Vec<_>>>()?;
        cells.push(aggregate(cell, &samples, plan));
    }
    Ok(RegretStats { master_seed: plan.master_seed, cells })
}

/// Runs the plan on a dedicated pool of `workers` threads.
pub fn run_plan_with_workers(plan: &ExperimentPlan, workers: usize) -> Result<RegretStats> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Capacity(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_plan(plan))
}

/// Statistic maximized by [`worst_case_over_targets`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    Mean,
    TailFrequency,
    Quantile(f64),
}

impl Statistic {
    fn of(self, s: &CellStats) -> Option<f64> {
        match self {
            Statistic::Mean => Some(s.mean),
            Statistic::TailFrequency => s.tail_freq,
            Statistic::Quantile(q) => s.quantile(q),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub policy: String,
    pub horizon: usize,
    pub value: f64,
    /// 0-based arm attaining the max (lowest index on ties).
    pub target: usize,
    /// The full cell statistics of the worst target.
    pub stats: CellStats,
}

/// Max over target arms of `statistic`, per (family, policy, T).
pub fn worst_case_over_targets(stats: &RegretStats, statistic: Statistic) -> Result<Vec<WorstCase>> {
    let mut groups: Vec<(String, Vec<&CellStats>)> = Vec::new();
    for s in &stats.cells {
        let c = &s.cell;
        if !c.family.has_targets() || c.target.is_none() {
            return Err(structural(format!("{} cells have no target arm", c.family.name())));
        }
        let key = format!("{}|{}|{}|{}", c.family.name(), c.family.params(), c.policy.label(), c.horizon);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(s),
            None => groups.push((key, vec![s])),
        }
    }
    groups
        .into_iter()
        .map(|(_, group)| {
            let k = group[0].cell.family.arms();
            let mut seen = vec![false; k];
            for s in &group {
                if let Some(j) = s.cell.target {
                    seen[j] = true;
                }
            }
            if group.len() != k || seen.iter().any(|&x| !x) {
                return Err(structural(format!(
                    "family {} with policy {} at T = {} covers {} of {k} target arms",
                    group[0].cell.family.name(),
                    group[0].cell.policy.label(),
                    group[0].cell.horizon,
                    seen.iter().filter(|&&x| x).count()
                )));
            }
            let mut best: Option<(&CellStats, f64)> = None;
            for s in group {
                let v = statistic
                    .of(s)
                    .ok_or_else(|| structural("statistic not recorded for this plan"))?;
                let better = match best {
                    None => true,
                    Some((b, bv)) => v > bv || (v == bv && s.cell.target < b.cell.target),
                };
                if better {
                    best = Some((s, v));
                }
            }
            let (s, value) = best.expect("group is non-empty");
            Ok(WorstCase {
                policy: s.cell.policy.label(),
                horizon: s.cell.horizon,
                value,
                target: s.cell.target.expect("checked above"),
                stats: s.clone(),
            })
        })
        .collect()
}

/// Largest `mean / √((K−1)T)` over the cells of a plan: an empirical
/// estimate of the constant C in a mean-regret premise.
pub fn estimate_regret_constant(stats: &RegretStats) -> Result<f64> {
    stats
        .cells
        .iter()
        .map(|s| s.mean / (((s.cell.family.arms() - 1) * s.cell.horizon) as f64).sqrt())
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or_else(|| argument("no cells"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Least-squares fit of log(mean) against log(T).
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(structural(format!("need at least 4 grid points, got {}", points.len())));
    }
    if let Some((t, m)) = points.iter().find(|(t, m)| !(*m > 0.0) || !(*t > 0.0)) {
        return Err(structural(format!("non-positive point (T = {t}, mean = {m})")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, m)| m.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(structural("all grid points share one T"));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    Ok(ScalingFit { exponent, intercept, residual: (sse / n).sqrt() })
}

impl RegretStats {
    /// (T, mean) points of one policy, for a given target (or none).
    pub fn mean_curve(&self, policy: &str, target: Option<usize>) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter(|s| s.cell.policy.label() == policy && s.cell.target == target)
            .map(|s| (s.cell.horizon as f64, s.mean))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallViolation {
    pub failures: u64,
    pub replications: u64,
    pub frequency: f64,
    /// 1/(32T)
    pub bound: f64,
    pub verdict: Verdict,
}

/// Family used by the membership argument: the default Bernoulli family at
/// parameter α/2 with the given target.
pub fn ball_family(arms: usize, rounds: usize, alpha: f64, target: usize) -> Result<BernoulliFamilySpec> {
    BernoulliFamilySpec::new(arms, rounds, alpha / 2.0, Some(target))
}

/// Lower end of the admissible α interval for the theorem behind `kind`.
pub fn ball_alpha_lower_endpoint(kind: BallKind, arms: usize, rounds: usize) -> f64 {
    let (k, t) = (arms as f64, rounds as f64);
    match kind {
        BallKind::SmallLoss => (crate::bounds::SMALL_LOSS_C * (32.0 * t).ln()).max(k / 2.0) / t,
        BallKind::SmallVariation => (2.0 * crate::bounds::small_variation_c1() * t.ln()).max(8.0 * k) / t,
    }
}

/// Frequency with which a matrix from `spec` falls outside the ball of
/// radius `alpha`. `spec` must be built at parameter α/2; the theorem's
/// hypotheses are enforced unless `override_hypotheses` is set.
pub fn ball_violation_rate(
    spec: &BernoulliFamilySpec,
    alpha: f64,
    kind: BallKind,
    replications: u64,
    master_seed: u64,
    override_hypotheses: bool,
) -> Result<BallViolation> {
    spec.validate()?;
    if replications == 0 {
        return Err(argument("need at least one replication"));
    }
    if (spec.alpha - alpha / 2.0).abs() > 1e-15 * alpha.max(1.0) {
        return Err(argument(format!(
            "family parameter {} must be α/2 = {}",
            spec.alpha,
            alpha / 2.0
        )));
    }
    let bound_kind = match kind {
        BallKind::SmallLoss => BoundKind::Thm4Lower,
        BallKind::SmallVariation => BoundKind::Thm6Lower,
    };
    let verdict = validate_hypotheses(&BoundQuery::new(bound_kind, BoundParams::kt(spec.arms, spec.rounds).alpha(alpha)));
    if !verdict.ok() && !override_hypotheses {
        return Err(Error::Hypotheses(verdict));
    }
    let id = cell_id(&format!(
        "ball;kind={};K={};T={};alpha={alpha};epsilon={};target={:?}",
        kind.as_str(),
        spec.arms,
        spec.rounds,
        spec.epsilon,
        spec.target
    ));
    let failures = (0..replications)
        .into_par_iter()
        .map(|r| {
            let lm = spec.sample(&mut StreamKey::new(master_seed, id, r).rng(Purpose::Environment))?;
            Ok(u64::from(!ball_membership(&lm, alpha, kind)?))
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum::<u64>();
    Ok(BallViolation {
        failures,
        replications,
        frequency: failures as f64 / replications as f64,
        bound: 1.0 / (32.0 * spec.rounds as f64),
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoeffdingCheck {
    /// Frequency of Σ_t W_t ≤ 3T/4.
    pub frequency: f64,
    /// exp(−T/32)
    pub bound: f64,
    pub replications: u64,
}

/// Estimates how often fewer than 3T/4 rounds fall inside the clipping
/// window [2Δ, 1 − 2Δ].
pub fn hoeffding_w_check(spec: &ClippedGaussianSpec, replications: u64, master_seed: u64) -> Result<HoeffdingCheck> {
    spec.validate()?;
    let t = spec.rounds as f64;
    if !(spec.delta > 0.0 && spec.delta < 1.0) || t < 32.0 * (2.0 / spec.delta).ln() {
        return Err(argument(format!(
            "need T ≥ 32 ln(2/δ) = {}, got T = {}",
            32.0 * (2.0 / spec.delta).ln(),
            spec.rounds
        )));
    }
    if replications == 0 {
        return Err(argument("need at least one replication"));
    }
    let (lo, hi) = (2.0 * spec.gap, 1.0 - 2.0 * spec.gap);
    let id = cell_id(&format!("hoeffding;T={};gap={}", spec.rounds, spec.gap));
    let hits = (0..replications)
        .into_par_iter()
        .map(|r| {
            let z = spec.sample_z(spec.rounds, &mut StreamKey::new(master_seed, id, r).rng(Purpose::Environment));
            let inside = z.iter().filter(|z| (lo..=hi).contains(*z)).count() as f64;
            u64::from(inside <= 0.75 * t)
        })
        .sum::<u64>();
    Ok(HoeffdingCheck {
        frequency: hits as f64 / replications as f64,
        bound: (-t / 32.0).exp(),
        replications,
    })
}
