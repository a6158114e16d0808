//! Baseline adversarial bandit algorithms.
//!
//! All policies are exponential-weights methods over importance-weighted
//! loss estimates and keep their weights in log space, re-centred so the
//! largest log-weight is zero after every update.
//!
//! Default tunings:
//!
//! | kind        | learning rate            | exploration / bonus                                  |
//! |-------------|--------------------------|------------------------------------------------------|
//! | `exp3`      | η = √(2 ln K / (TK))     | none; ℓ̂ = ℓ / p                                      |
//! | `exp3ix`    | η = √(2 ln K / (TK))     | γ = η/2; ℓ̂ = ℓ / (p + γ)                             |
//! | `exp3p(δ)`  | η = γ / (3K)             | γ = min(3/5, 2√(3K ln K / (5T))), β = 2√(ln(KT/δ))   |
//!
//! Exp3.P is the gain-based algorithm run on gains `g = 1 − ℓ`.

use std::fmt;

use rand::Rng;

use crate::error::{argument, structural, Result};
use crate::loss::{LossMatrix, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    Uniform,
    Exp3,
    Exp3Ix,
    Exp3P { delta: f64 },
}

impl PolicyKind {
    /// Parses `uniform`, `exp3`, `exp3ix` or `exp3p(<δ>)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform" => return Ok(PolicyKind::Uniform),
            "exp3" => return Ok(PolicyKind::Exp3),
            "exp3ix" => return Ok(PolicyKind::Exp3Ix),
            _ => {}
        }
        if let Some(inner) = s.strip_prefix("exp3p(").and_then(|r| r.strip_suffix(')')) {
            let delta: f64 = inner
                .trim()
                .parse()
                .map_err(|_| argument(format!("bad δ in policy `{s}`")))?;
            if !(delta > 0.0 && delta < 1.0) {
                return Err(argument(format!("exp3p needs δ in (0, 1), got {delta}")));
            }
            return Ok(PolicyKind::Exp3P { delta });
        }
        Err(argument(format!("unknown policy `{s}`")))
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Uniform => f.write_str("uniform"),
            PolicyKind::Exp3 => f.write_str("exp3"),
            PolicyKind::Exp3Ix => f.write_str("exp3ix"),
            PolicyKind::Exp3P { delta } => write!(f, "exp3p({delta})"),
        }
    }
}

/// Optional overrides of the default tuning.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tuning {
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
}

impl Tuning {
    pub fn is_default(&self) -> bool {
        *self == Tuning::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub arms: usize,
    pub horizon: usize,
    pub tuning: Tuning,
}

/// Resolved tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub eta: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind, arms: usize, horizon: usize) -> Self {
        Self { kind, arms, horizon, tuning: Tuning::default() }
    }

    pub fn with_tuning(mut self, tuning: Tuning) -> Self {
        self.tuning = tuning;
        self
    }

    pub fn params(&self) -> Result<Params> {
        if self.arms < 2 {
            return Err(argument(format!("need K ≥ 2 arms, got {}", self.arms)));
        }
        if self.horizon < 1 {
            return Err(argument("need horizon T ≥ 1"));
        }
        let k = self.arms as f64;
        let t = self.horizon as f64;
        let base_eta = (2.0 * k.ln() / (t * k)).sqrt();
        let defaults = match self.kind {
            PolicyKind::Uniform => Params { eta: 0.0, gamma: 0.0, beta: 0.0 },
            PolicyKind::Exp3 => Params { eta: base_eta, gamma: 0.0, beta: 0.0 },
            PolicyKind::Exp3Ix => Params { eta: base_eta, gamma: base_eta / 2.0, beta: 0.0 },
            PolicyKind::Exp3P { delta } => {
                let gamma = (2.0 * (0.6 * k * k.ln() / t).sqrt()).min(0.6);
                let beta = 2.0 * (k * t / delta).ln().sqrt();
                Params { eta: gamma / (3.0 * k), gamma, beta }
            }
        };
        let gamma = self.tuning.gamma.unwrap_or(defaults.gamma);
        let p = Params {
            // Exp3.P ties its rate to γ unless η is set explicitly.
            eta: self.tuning.eta.unwrap_or(match self.kind {
                PolicyKind::Exp3P { .. } => gamma / (3.0 * k),
                _ => defaults.eta,
            }),
            gamma,
            beta: self.tuning.beta.unwrap_or(defaults.beta),
        };
        if !(p.eta >= 0.0 && p.eta.is_finite()) {
            return Err(argument(format!("learning rate {} must be finite and ≥ 0", p.eta)));
        }
        if !(p.gamma >= 0.0 && p.gamma.is_finite()) {
            return Err(argument(format!("γ = {} must be finite and ≥ 0", p.gamma)));
        }
        if matches!(self.kind, PolicyKind::Exp3P { .. }) && p.gamma > 1.0 {
            return Err(argument(format!("exp3p exploration γ = {} exceeds 1", p.gamma)));
        }
        if !(p.beta >= 0.0 && p.beta.is_finite()) {
            return Err(argument(format!("β = {} must be finite and ≥ 0", p.beta)));
        }
        Ok(p)
    }

    pub fn init(&self) -> Result<PolicyState> {
        PolicyState::new(*self)
    }
}

/// Internal state of a policy after some number of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    spec: PolicySpec,
    params: Params,
    /// Cumulative importance-weighted loss estimates L̂_i.
    cumulative: Vec<f64>,
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    rounds: usize,
}

impl PolicyState {
    pub fn new(spec: PolicySpec) -> Result<Self> {
        let params = spec.params()?;
        let k = spec.arms;
        let mut state = Self {
            spec,
            params,
            cumulative: vec![0.0; k],
            log_weights: vec![0.0; k],
            probs: vec![1.0 / k as f64; k],
            rounds: 0,
        };
        state.refresh();
        Ok(state)
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn rounds_observed(&self) -> usize {
        self.rounds
    }

    pub fn cumulative_estimates(&self) -> &[f64] {
        &self.cumulative
    }

    /// The current action distribution p_t.
    pub fn action_distribution(&self) -> &[f64] {
        &self.probs
    }

    /// Importance-weighted loss estimates produced by observing `loss` on `arm`.
    pub fn estimates(&self, arm: usize, loss: f64) -> Result<Vec<f64>> {
        self.check_observation(arm, loss)?;
        let mut out = vec![0.0; self.spec.arms];
        let p = self.probs[arm];
        out[arm] = match self.spec.kind {
            PolicyKind::Exp3Ix => loss / (p + self.params.gamma),
            _ if p > 0.0 => loss / p,
            _ => 0.0,
        };
        Ok(out)
    }

    fn check_observation(&self, arm: usize, loss: f64) -> Result<()> {
        if arm >= self.spec.arms {
            return Err(argument(format!("arm {arm} out of range for K = {}", self.spec.arms)));
        }
        if !(0.0..=1.0).contains(&loss) {
            return Err(argument(format!("loss {loss} outside [0, 1]")));
        }
        Ok(())
    }

    /// Successor state after observing `loss` on `arm`.
    pub fn update(&self, arm: usize, loss: f64) -> Result<Self> {
        let mut next = self.clone();
        next.observe(arm, loss)?;
        Ok(next)
    }

    /// In-place variant of [`PolicyState::update`].
    pub fn observe(&mut self, arm: usize, loss: f64) -> Result<()> {
        self.check_observation(arm, loss)?;
        let p = self.probs[arm];
        let Params { eta, gamma, beta } = self.params;
        match self.spec.kind {
            PolicyKind::Uniform => {}
            PolicyKind::Exp3 | PolicyKind::Exp3Ix => {
                let denom = if matches!(self.spec.kind, PolicyKind::Exp3Ix) { p + gamma } else { p };
                let est = if denom > 0.0 { loss / denom } else { 0.0 };
                self.cumulative[arm] += est;
                self.log_weights[arm] -= eta * est;
            }
            PolicyKind::Exp3P { .. } => {
                let k = self.spec.arms as f64;
                let bonus_scale = beta / (k * self.spec.horizon as f64).sqrt();
                if p > 0.0 {
                    self.cumulative[arm] += loss / p;
                }
                for (i, (w, &q)) in self.log_weights.iter_mut().zip(&self.probs).enumerate() {
                    let gain = if i == arm && q > 0.0 { (1.0 - loss) / q } else { 0.0 };
                    let bonus = if q > 0.0 { bonus_scale / q } else { 0.0 };
                    *w += eta * (gain + bonus);
                }
            }
        }
        self.rounds += 1;
        self.refresh();
        Ok(())
    }

    fn refresh(&mut self) {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for w in &mut self.log_weights {
            *w -= max;
        }
        let mut total = 0.0;
        for (p, &w) in self.probs.iter_mut().zip(&self.log_weights) {
            *p = w.exp();
            total += *p;
        }
        let k = self.spec.arms as f64;
        let mix = match self.spec.kind {
            PolicyKind::Exp3P { .. } => self.params.gamma,
            _ => 0.0,
        };
        for p in &mut self.probs {
            *p = (1.0 - mix) * (*p / total) + mix / k;
        }
    }
}

/// Inverse-CDF draw from `probs` given `u ∈ [0, 1)`.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

fn check_dims(spec: &PolicySpec, lm: &LossMatrix) -> Result<()> {
    if spec.arms != lm.arms() || spec.horizon != lm.rounds() {
        return Err(structural(format!(
            "policy is set up for K = {}, T = {} but the loss matrix is {}×{}",
            spec.arms,
            spec.horizon,
            lm.rounds(),
            lm.arms()
        )));
    }
    Ok(())
}

fn play<'a, R: Rng + ?Sized>(
    spec: &PolicySpec,
    lm: &'a LossMatrix,
    rng: &mut R,
    mut trace: Option<&mut Vec<Vec<f64>>>,
) -> Result<Trajectory<'a>> {
    check_dims(spec, lm)?;
    let mut state = spec.init()?;
    let mut actions = Vec::with_capacity(lm.rounds());
    let mut incurred = Vec::with_capacity(lm.rounds());
    for t in 0..lm.rounds() {
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(state.action_distribution().to_vec());
        }
        let arm = sample_index(state.action_distribution(), rng.random::<f64>());
        let loss = lm.get(t, arm);
        state.observe(arm, loss)?;
        actions.push(arm);
        incurred.push(loss);
    }
    Ok(Trajectory { lm, actions, incurred })
}

/// Plays one episode with bandit feedback: only ℓ_{I_t,t} is revealed.
pub fn run_episode<'a, R: Rng + ?Sized>(spec: &PolicySpec, lm: &'a LossMatrix, rng: &mut R) -> Result<Trajectory<'a>> {
    play(spec, lm, rng, None)
}

/// Like [`run_episode`], also returning every per-round distribution p_t.
pub fn run_episode_traced<'a, R: Rng + ?Sized>(
    spec: &PolicySpec,
    lm: &'a LossMatrix,
    rng: &mut R,
) -> Result<(Trajectory<'a>, Vec<Vec<f64>>)> {
    let mut trace = Vec::with_capacity(lm.rounds());
    let traj = play(spec, lm, rng, Some(&mut trace))?;
    Ok((traj, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::regret;
    use crate::stream::seeded;
    use proptest::prelude::*;

    fn all_kinds() -> [PolicyKind; 4] {
        [PolicyKind::Uniform, PolicyKind::Exp3, PolicyKind::Exp3Ix, PolicyKind::Exp3P { delta: 0.1 }]
    }

    #[test]
    fn fresh_states_are_uniform() {
        for kind in all_kinds() {
            let s = PolicySpec::new(kind, 4, 100).init().unwrap();
            assert_eq!(s.action_distribution(), &[0.25; 4]);
        }
    }

    #[test]
    fn uniform_never_moves() {
        let mut s = PolicySpec::new(PolicyKind::Uniform, 3, 10).init().unwrap();
        s.observe(0, 1.0).unwrap();
        s.observe(2, 0.3).unwrap();
        assert_eq!(s.action_distribution(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn exp3_moves_away_from_a_lossy_arm() {
        let spec = PolicySpec::new(PolicyKind::Exp3, 2, 100);
        let s = spec.init().unwrap().update(0, 1.0).unwrap();
        let p = s.action_distribution();
        // hand computation: ℓ̂ = 2, p_1 = e^{−2η} / (e^{−2η} + 1)
        let eta = spec.params().unwrap().eta;
        let want = (-2.0 * eta).exp() / ((-2.0 * eta).exp() + 1.0);
        assert!((p[0] - want).abs() < 1e-15);
        assert!(p[0] < 0.5 && 0.5 < p[1]);
    }

    #[test]
    fn zero_loss_leaves_exp3_unchanged() {
        let s = PolicySpec::new(PolicyKind::Exp3, 3, 50).init().unwrap();
        let s1 = s.update(0, 0.7).unwrap();
        let s2 = s1.update(1, 0.0).unwrap();
        assert_eq!(s1.action_distribution(), s2.action_distribution());
    }

    #[test]
    fn exp3ix_estimate_example() {
        let spec = PolicySpec::new(PolicyKind::Exp3Ix, 2, 100)
            .with_tuning(Tuning { gamma: Some(0.25), ..Tuning::default() });
        let s = spec.init().unwrap();
        assert_eq!(s.action_distribution(), &[0.5, 0.5]);
        let est = s.estimates(0, 1.0).unwrap();
        assert!((est[0] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(est[1], 0.0);
        assert_eq!(s.update(0, 1.0).unwrap().cumulative_estimates()[0], est[0]);
    }

    #[test]
    fn rejects_bad_observations() {
        let s = PolicySpec::new(PolicyKind::Exp3, 2, 10).init().unwrap();
        assert!(s.update(2, 0.5).is_err());
        assert!(s.update(0, 1.5).is_err());
        assert!(s.update(0, -0.1).is_err());
        assert!(PolicySpec::new(PolicyKind::Exp3, 1, 10).init().is_err());
    }

    #[test]
    fn parse_round_trips() {
        for kind in all_kinds() {
            assert_eq!(PolicyKind::parse(&kind.to_string()).unwrap(), kind);
        }
        assert_eq!(PolicyKind::parse("exp3p(0.15)").unwrap(), PolicyKind::Exp3P { delta: 0.15 });
        assert!(PolicyKind::parse("exp3p(2)").is_err());
        assert!(PolicyKind::parse("ucb").is_err());
    }

    #[test]
    fn exp3p_default_tuning() {
        let p = PolicySpec::new(PolicyKind::Exp3P { delta: 0.15 }, 2, 8192).params().unwrap();
        let gamma = 2.0 * (0.6 * 2.0 * 2f64.ln() / 8192.0).sqrt();
        assert!((p.gamma - gamma).abs() < 1e-15);
        assert!((p.eta - gamma / 6.0).abs() < 1e-15);
        assert!((p.beta - 2.0 * (2.0 * 8192.0 / 0.15f64).ln().sqrt()).abs() < 1e-12);
        // exploration floor
        let s = PolicySpec::new(PolicyKind::Exp3P { delta: 0.15 }, 2, 8192).init().unwrap();
        let mut s = s;
        for _ in 0..1000 {
            s.observe(0, 1.0).unwrap();
        }
        assert!(s.action_distribution()[0] >= p.gamma / 2.0 - 1e-15);
    }

    /// E_{I∼p}[ℓ̂_i] computed exactly over the K outcomes.
    fn expected_estimate(state: &PolicyState, losses: &[f64]) -> Vec<f64> {
        let p = state.action_distribution();
        let mut e = vec![0.0; losses.len()];
        for (arm, &q) in p.iter().enumerate() {
            let est = state.estimates(arm, losses[arm]).unwrap();
            for (ei, x) in e.iter_mut().zip(est) {
                *ei += q * x;
            }
        }
        e
    }

    #[test]
    fn exp3_estimator_is_unbiased_and_ix_is_not() {
        let losses = [0.3, 0.9, 0.0];
        let mut exp3 = PolicySpec::new(PolicyKind::Exp3, 3, 100).init().unwrap();
        let mut ix = PolicySpec::new(PolicyKind::Exp3Ix, 3, 100).init().unwrap();
        for (arm, l) in [(0, 0.4), (1, 1.0), (1, 0.2), (2, 0.8)] {
            exp3.observe(arm, l).unwrap();
            ix.observe(arm, l).unwrap();
            for (e, l) in expected_estimate(&exp3, &losses).iter().zip(losses) {
                assert!((e - l).abs() < 1e-12);
            }
            for (e, l) in expected_estimate(&ix, &losses).iter().zip(losses) {
                assert!(*e <= l + 1e-15);
            }
        }
    }

    #[test]
    fn uniform_on_constant_losses_has_zero_regret() {
        let lm = LossMatrix::new(64, 3, vec![0.5; 192]).unwrap();
        let spec = PolicySpec::new(PolicyKind::Uniform, 3, 64);
        let traj = run_episode(&spec, &lm, &mut seeded(1)).unwrap();
        assert_eq!(regret(&traj).unwrap(), 0.0);
    }

    #[test]
    fn replay_is_deterministic() {
        let lm = crate::envs::BernoulliFamilySpec::new(3, 200, 0.4, Some(2))
            .unwrap()
            .sample(&mut seeded(2))
            .unwrap();
        for kind in all_kinds() {
            let spec = PolicySpec::new(kind, 3, 200);
            let a = run_episode(&spec, &lm, &mut seeded(3)).unwrap();
            let b = run_episode(&spec, &lm, &mut seeded(3)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let lm = LossMatrix::new(4, 2, vec![0.0; 8]).unwrap();
        let spec = PolicySpec::new(PolicyKind::Exp3, 3, 4);
        assert!(matches!(run_episode(&spec, &lm, &mut seeded(0)), Err(crate::Error::Structural(_))));
    }

    #[test]
    fn exp3_learns_a_deterministic_gap() {
        let (k, t, reps) = (2, 4096, 100);
        let lm = LossMatrix::new(t, k, [0.0, 1.0].repeat(t)).unwrap();
        let spec = PolicySpec::new(PolicyKind::Exp3, k, t);
        let mut rng = seeded(11);
        let mean = (0..reps)
            .map(|_| regret(&run_episode(&spec, &lm, &mut rng).unwrap()).unwrap())
            .sum::<f64>()
            / reps as f64;
        let cap = 3.0 * (2.0 * t as f64 * k as f64 * (k as f64).ln()).sqrt();
        assert!(mean <= cap, "{mean} > {cap}");
    }

    #[test]
    fn traced_probabilities_are_distributions() {
        let lm = crate::envs::ClippedGaussianSpec::high_probability(4, 300, 0.1, 2)
            .unwrap()
            .sample(&mut seeded(5))
            .unwrap();
        for kind in all_kinds() {
            let (_, trace) = run_episode_traced(&PolicySpec::new(kind, 4, 300), &lm, &mut seeded(6)).unwrap();
            assert_eq!(trace.len(), 300);
            for p in trace {
                assert!(p.iter().all(|&x| x >= 0.0));
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn distributions_stay_valid(
            kind_ix in 0usize..4,
            obs in prop::collection::vec((0usize..3, 0.0f64..=1.0), 1..300),
        ) {
            let kind = all_kinds()[kind_ix];
            let mut s = PolicySpec::new(kind, 3, 300).init().unwrap();
            for (arm, loss) in obs {
                s.observe(arm, loss).unwrap();
                let p = s.action_distribution();
                prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn bandit_feedback_only(
            kind_ix in 0usize..4,
            seed in any::<u64>(),
            round in 0usize..50,
            value in 0.0f64..=1.0,
        ) {
            let kind = all_kinds()[kind_ix];
            let spec = PolicySpec::new(kind, 3, 50);
            let lm = crate::envs::BernoulliFamilySpec::new(3, 50, 0.3, Some(0)).unwrap().sample(&mut seeded(seed)).unwrap();
            let base = run_episode(&spec, &lm, &mut seeded(seed ^ 1)).unwrap();
            let played = base.actions[round];
            let other = (played + 1) % 3;
            let edited = lm.with_entry(round, other, value).unwrap();
            let again = run_episode(&spec, &edited, &mut seeded(seed ^ 1)).unwrap();
            prop_assert_eq!(base.actions, again.actions);
        }
    }
}
