//! Verification suites. Each suite returns named checks with the measured
//! value and the admissible interval.

use rand::Rng;

use banditlb::bounds::{bound_value, BoundKind, BoundParams, BoundQuery};
use banditlb::envs::{clipping_event_stats, ClippedGaussianSpec, MAX_GAP, SIGMA2};
use banditlb::info::{bretagnolle_huber_bound, chi2_bernoulli, exact_history_kl_oracle, kl_bernoulli, kl_gaussian_shift, DiscreteLaw};
use banditlb::loss::BallKind;
use banditlb::policies::{PolicyKind, PolicySpec};
use banditlb::runner::{
    ball_alpha_lower_endpoint, ball_family, ball_violation_rate, hoeffding_w_check, run_plan, scaling_fit,
    worst_case_over_targets, EnvFamily, ExperimentPlan, Gap, PolicyTemplate, Statistic,
};
use banditlb::stream::{cell_id, Purpose, StreamKey, StreamRng};

use crate::error::CliError;

pub const SUITES: &[&str] = &["inequalities", "oracle", "constructions", "tails", "lower_bounds", "scaling"];

/// Below this the scaling fit cannot resolve the exponent.
pub const MIN_SCALING_REPLICATIONS: usize = 100;

const ORACLE_TOL: f64 = 1e-9;
const GRID_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Replications per Monte Carlo cell; `None` uses each suite's default.
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub detail: String,
}

impl Check {
    fn new(suite: &str, name: impl Into<String>, value: f64) -> Self {
        Self { suite: suite.into(), name: name.into(), value, lower: None, upper: None, detail: String::new() }
    }

    fn at_least(mut self, lower: f64) -> Self {
        self.lower = Some(lower);
        self
    }

    fn at_most(mut self, upper: f64) -> Self {
        self.upper = Some(upper);
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn passed(&self) -> bool {
        !self.value.is_nan()
            && self.lower.is_none_or(|l| self.value >= l)
            && self.upper.is_none_or(|u| self.value <= u)
    }
}

fn rng_for(opts: &SuiteOptions, label: &str) -> StreamRng {
    StreamKey::new(opts.seed, cell_id(label), 0).rng(Purpose::Auxiliary)
}

fn bound(kind: BoundKind, params: BoundParams) -> Result<f64, CliError> {
    Ok(bound_value(&BoundQuery::new(kind, params))?)
}

pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<Vec<Check>, CliError> {
    match name {
        "inequalities" => inequalities(opts),
        "oracle" => oracle(),
        "constructions" => constructions(opts),
        "tails" => tails(opts),
        "lower_bounds" => lower_bounds(opts),
        "scaling" => scaling(opts),
        other => Err(CliError::Config(format!(
            "suite: unknown suite `{other}`, expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

fn inequalities(opts: &SuiteOptions) -> Result<Vec<Check>, CliError> {
    const S: &str = "inequalities";
    let mut rng = rng_for(opts, "verify/inequalities");
    let (mut chi2_bad, mut pinsker_bad, mut bh_bad) = (0u32, 0u32, 0u32);
    let mut worst_bh_margin = f64::INFINITY;
    for _ in 0..GRID_POINTS {
        let p: f64 = rng.random_range(1e-9..1.0);
        let q: f64 = rng.random_range(1e-9..1.0);
        let kl = kl_bernoulli(p, q);
        if kl > chi2_bernoulli(p, q) * (1.0 + 1e-12) + 1e-300 {
            chi2_bad += 1;
        }
        if (p - q).abs() > (kl / 2.0).sqrt() * (1.0 + 1e-12) {
            pinsker_bad += 1;
        }
        let (lp, lq) = (DiscreteLaw::bernoulli(p)?, DiscreteLaw::bernoulli(q)?);
        let floor = bretagnolle_huber_bound(kl)?;
        for mask in 0..4u8 {
            let event = [mask & 1 != 0, mask & 2 != 0];
            let complement = [!event[0], !event[1]];
            let margin = lp.prob(&event)? + lq.prob(&complement)? - floor;
            worst_bh_margin = worst_bh_margin.min(margin);
            if margin < -1e-12 {
                bh_bad += 1;
            }
        }
        if 1.0 - lp.total_variation(&lq)? < floor - 1e-12 {
            bh_bad += 1;
        }
    }

    // Pushing four-point laws through a fixed two-cell partition cannot raise KL.
    let mut dp_bad = 0u32;
    for _ in 0..1000 {
        let mut draw = || {
            let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = w.iter().sum();
            DiscreteLaw::new(w.into_iter().map(|x| x / s).collect())
        };
        let (a, b) = (draw()?, draw()?);
        let map = [0, 1, 1, 0];
        let (fa, fb) = (a.push_forward(&map, 2)?, b.push_forward(&map, 2)?);
        if fa.kl(&fb)? > a.kl(&b)? + 1e-12 {
            dp_bad += 1;
        }
    }

    let shift = kl_gaussian_shift(0.1, SIGMA2)?;
    Ok(vec![
        Check::new(S, "kl_le_chi2", chi2_bad.into())
            .at_most(0.0)
            .detail(format!("{GRID_POINTS} random Bernoulli pairs")),
        Check::new(S, "pinsker", pinsker_bad.into()).at_most(0.0),
        Check::new(S, "bretagnolle_huber", bh_bad.into())
            .at_most(0.0)
            .detail(format!("all single-observation events; smallest margin {worst_bh_margin:.3e}")),
        Check::new(S, "data_processing", dp_bad.into()).at_most(0.0),
        Check::new(S, "gaussian_shift_kl", (shift - 0.110_903_548_889_591_25).abs()).at_most(1e-12),
    ])
}

fn oracle() -> Result<Vec<Check>, CliError> {
    const S: &str = "oracle";
    let pairs: [([f64; 2], [f64; 2]); 2] = [([0.3, 0.5], [0.3, 0.3]), ([0.5, 0.5], [0.5, 0.2])];
    let mut worst = 0.0f64;
    for (a, b) in &pairs {
        for t in 1..=3 {
            let r = exact_history_kl_oracle(&PolicySpec::new(PolicyKind::Exp3, 2, 3), a, b, t)?;
            worst = worst.max((r.lhs - r.rhs).abs());
        }
    }
    let kinds = [PolicyKind::Uniform, PolicyKind::Exp3, PolicyKind::Exp3Ix, PolicyKind::Exp3P { delta: 0.15 }];
    let laws3: [(&[f64], &[f64]); 2] = [(&[0.2, 0.5, 0.7], &[0.2, 0.4, 0.9]), (&[0.5, 0.5, 0.5], &[0.1, 0.5, 0.6])];
    let mut worst_all = 0.0f64;
    let mut cases = 0;
    for kind in kinds {
        for (a, b) in laws3 {
            for k in 2..=3 {
                for t in 1..=4 {
                    let r = exact_history_kl_oracle(&PolicySpec::new(kind, k, 4), &a[..k], &b[..k], t)?;
                    worst_all = worst_all.max((r.lhs - r.rhs).abs());
                    cases += 1;
                }
            }
        }
    }
    Ok(vec![
        Check::new(S, "chain_rule_exp3_k2", worst)
            .at_most(ORACLE_TOL)
            .detail("max |lhs - rhs| over t = 1..3 and both law pairs"),
        Check::new(S, "chain_rule_all_policies", worst_all)
            .at_most(ORACLE_TOL)
            .detail(format!("{cases} cases, K = 2..3, t = 1..4")),
    ])
}

fn constructions(opts: &SuiteOptions) -> Result<Vec<Check>, CliError> {
    const S: &str = "constructions";
    const ROUNDS: usize = 10_000;
    let mut checks = Vec::new();
    for k in [2usize, 4, 8] {
        for delta in [0.05, 0.15] {
            let spec = ClippedGaussianSpec::high_probability(k, ROUNDS, delta, 1)?;
            let tag = format!("K{k}_delta{delta}");
            let mut rng = rng_for(opts, &format!("verify/constructions/{tag}"));
            let lm = spec.sample(&mut rng)?;
            let mut argmin_rounds = 0usize;
            let mut excess = f64::NEG_INFINITY;
            for row in lm.rows() {
                if row.iter().all(|&v| row[spec.target] <= v) {
                    argmin_rounds += 1;
                }
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                excess = excess.max(hi - lo - 2.0 * spec.gap);
            }
            let clip = clipping_event_stats(&spec, ROUNDS, &mut rng)?;
            checks.push(
                Check::new(S, format!("argmin_{tag}"), argmin_rounds as f64 / ROUNDS as f64)
                    .at_least(1.0)
                    .detail(format!("target arm {} of {k}", spec.target + 1)),
            );
            checks.push(
                Check::new(S, format!("range_{tag}"), excess)
                    .at_most(1e-12)
                    .detail(format!("max per-round range minus 2*gap, gap = {:.6e}", spec.gap)),
            );
            checks.push(
                Check::new(S, format!("clipping_{tag}"), clip.frequency)
                    .at_most(0.15)
                    .detail(format!("theoretical bound {:.6}", clip.bound)),
            );
        }
    }
    let gap = ClippedGaussianSpec::high_probability(2, 1000, 0.125, 1)?.gap;
    checks.push(Check::new(S, "gap_closed_form", (gap - 0.003_952_847_075_210_474).abs()).at_most(1e-15));
    Ok(checks)
}

fn tails(opts: &SuiteOptions) -> Result<Vec<Check>, CliError> {
    const S: &str = "tails";
    let reps = opts.replications.unwrap_or(100_000) as u64;
    let (arms, rounds) = (2, 2048);
    let mut checks = Vec::new();
    for kind in [BallKind::SmallLoss, BallKind::SmallVariation] {
        let alpha = ball_alpha_lower_endpoint(kind, arms, rounds);
        let spec = ball_family(arms, rounds, alpha, 0)?;
        let v = ball_violation_rate(&spec, alpha, kind, reps, opts.seed, false)?;
        checks.push(
            Check::new(S, format!("ball_{}", kind.as_str()), v.failures as f64)
                .at_most(10.0 * reps as f64 * v.bound)
                .detail(format!(
                    "alpha = {alpha:.6e}, T = {rounds}, R = {reps}, frequency {:.3e} vs 1/(32T) = {:.3e}",
                    v.frequency, v.bound
                )),
        );
    }
    let spec = ClippedGaussianSpec::with_gap(2, 256, 0.15, MAX_GAP, 1)?;
    let h = hoeffding_w_check(&spec, reps, opts.seed)?;
    checks.push(
        Check::new(S, "hoeffding_w", h.frequency)
            .at_most(h.bound + 4.0 * (h.bound / reps as f64).sqrt())
            .detail(format!("T = 256, gap = 1/30, R = {reps}, exp(-T/32) = {:.3e}", h.bound)),
    );
    Ok(checks)
}

fn lower_bounds(opts: &SuiteOptions) -> Result<Vec<Check>, CliError> {
    const S: &str = "lower_bounds";
    let reps = opts.replications.unwrap_or(2000);
    let (arms, rounds, delta) = (2usize, 8192usize, 0.15);
    let mut checks = Vec::new();

    let witness = ExperimentPlan::new(
        EnvFamily::ClippedGaussian { arms, delta, gap: Gap::HighProbability },
        [PolicyKind::Exp3, PolicyKind::Exp3P { delta }, PolicyKind::Exp3Ix]
            .into_iter()
            .map(PolicyTemplate::new)
            .collect(),
        vec![rounds],
        reps,
        opts.seed,
    );
    let stats = run_plan(&witness)?;
    let hypotheses_ok = stats.cells.iter().all(|c| c.verdict.as_ref().is_some_and(|v| v.ok()));
    checks.push(
        Check::new(S, "tail_hypotheses", f64::from(u8::from(hypotheses_ok)))
            .at_least(1.0)
            .detail(format!("K = {arms}, T = {rounds}, delta = {delta}")),
    );
    let tail_floor = delta / 2.0 - 3.0 * (delta / (2.0 * reps as f64)).sqrt();
    for w in worst_case_over_targets(&stats, Statistic::TailFrequency)? {
        checks.push(
            Check::new(S, format!("tail_witness_{}", w.policy), w.value)
                .at_least(tail_floor)
                .detail(format!(
                    "worst target arm {}, threshold {:.6}, R = {reps}",
                    w.target + 1,
                    w.stats.tail_threshold.unwrap_or(f64::NAN)
                )),
        );
    }
    let mean_floor = bound(BoundKind::Cor8Lower, BoundParams::kt(arms, rounds))?;
    for w in worst_case_over_targets(&stats, Statistic::Mean)? {
        checks.push(
            Check::new(S, format!("worst_mean_{}", w.policy), w.value)
                .at_least(mean_floor)
                .detail(format!("worst target arm {}, stderr {:.3e}", w.target + 1, w.stats.stderr)),
        );
    }

    let alpha = 0.5;
    for k in [2usize, 4] {
        let plan = ExperimentPlan::new(
            EnvFamily::BernoulliMixture { arms: k, alpha, epsilon: None },
            [PolicyKind::Uniform, PolicyKind::Exp3, PolicyKind::Exp3Ix, PolicyKind::Exp3P { delta }]
                .into_iter()
                .map(PolicyTemplate::new)
                .collect(),
            vec![4096],
            reps,
            opts.seed,
        );
        let floor = bound(BoundKind::Lemma5Lower, BoundParams::kt(k, 4096).alpha(alpha))?;
        for c in run_plan(&plan)?.cells {
            checks.push(
                Check::new(S, format!("mixture_mean_K{k}_{}", c.cell.policy.label()), c.mean)
                    .at_least(floor - 3.0 * c.stderr)
                    .detail(format!("bound {floor:.6}, stderr {:.3e}, R = {reps}", c.stderr)),
            );
        }
    }
    Ok(checks)
}

fn scaling(opts: &SuiteOptions) -> Result<Vec<Check>, CliError> {
    const S: &str = "scaling";
    let reps = opts.replications.unwrap_or(500);
    if reps < MIN_SCALING_REPLICATIONS {
        return Err(banditlb::Error::Capacity(format!(
            "scaling suite needs at least {MIN_SCALING_REPLICATIONS} replications to resolve the exponent, got {reps}"
        ))
        .into());
    }
    let (arms, alpha) = (2usize, 0.5);
    let grid: Vec<usize> = (8..=14).map(|e| 1usize << e).collect();
    let mut checks = Vec::new();

    let plan = ExperimentPlan::new(
        EnvFamily::BernoulliMixture { arms, alpha, epsilon: None },
        vec![PolicyTemplate::new(PolicyKind::Exp3)],
        grid.clone(),
        reps,
        opts.seed,
    );
    let stats = run_plan(&plan)?;
    let fit = scaling_fit(&stats.mean_curve("exp3", None))?;
    checks.push(
        Check::new(S, "exp3_exponent", fit.exponent)
            .at_least(0.40)
            .at_most(0.60)
            .detail(format!("intercept {:.4}, log residual {:.4}, R = {reps}", fit.intercept, fit.residual)),
    );

    let plan = ExperimentPlan::new(
        EnvFamily::Bernoulli { arms, alpha, epsilon: None },
        vec![PolicyTemplate::new(PolicyKind::Exp3Ix)],
        grid,
        reps,
        opts.seed,
    );
    let k = arms as f64;
    for w in worst_case_over_targets(&run_plan(&plan)?, Statistic::Mean)? {
        let t = w.horizon as f64;
        checks.push(
            Check::new(S, format!("exp3ix_upper_T{}", w.horizon), w.value)
                .at_most(10.0 * (k * t * k.ln()).sqrt())
                .detail(format!("worst target arm {}", w.target + 1)),
        );
    }
    Ok(checks)
}
