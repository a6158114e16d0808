//! Samplers for the adversarial loss distributions behind the lower bounds.
//!
//! Two families:
//!
//! * the correlated clipped-Gaussian family, where every arm's loss in round
//!   `t` is a shift of one shared draw `Z_t ~ N(1/2, σ²)` with
//!   `σ² = 1/(32 ln 2)`, so one arm is optimal in every round and the
//!   within-round spread never exceeds `2Δ`;
//! * the independent Bernoulli family, where the target arm has mean `α` and
//!   all others `α + ε` (or every arm `α + ε` under the null measure).
//!
//! Matrices are materialized in full before play starts, which is what makes
//! the adversary oblivious.

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use rand_distr::Normal;

use crate::error::{argument, structural, Result};
use crate::loss::LossMatrix;

/// σ² = 1/(32 ln 2).
pub const SIGMA2: f64 = 0.045_084_220_027_780_106;

/// Largest gap for which the clipping argument goes through.
pub const MAX_GAP: f64 = 1.0 / 30.0;

#[inline]
fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// How the gap Δ of a clipped-Gaussian environment was chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapMode {
    /// Δ = √(σ²(K−1) ln(1/(4δ)) / (2T)).
    HighProbability,
    /// Δ = (7σ²/(16C)) √((K−1)/T) ln(1/(4δ)), for an algorithm whose mean
    /// regret is at most C√((K−1)T).
    Calibrated { c: f64 },
    /// Δ supplied directly.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClippedGaussianSpec {
    pub arms: usize,
    pub rounds: usize,
    pub delta: f64,
    /// 0-based target arm `j`.
    pub target: usize,
    pub gap: f64,
    pub sigma2: f64,
    pub mode: GapMode,
}

pub fn high_probability_gap(arms: usize, rounds: usize, delta: f64) -> f64 {
    (SIGMA2 * (arms as f64 - 1.0) * (1.0 / (4.0 * delta)).ln() / (2.0 * rounds as f64)).sqrt()
}

pub fn calibrated_gap(arms: usize, rounds: usize, delta: f64, c: f64) -> f64 {
    7.0 * SIGMA2 / (16.0 * c)
        * ((arms as f64 - 1.0) / rounds as f64).sqrt()
        * (1.0 / (4.0 * delta)).ln()
}

impl ClippedGaussianSpec {
    pub fn high_probability(arms: usize, rounds: usize, delta: f64, target: usize) -> Result<Self> {
        check_delta(delta)?;
        let gap = high_probability_gap(arms, rounds, delta);
        Self::build(arms, rounds, delta, target, gap, GapMode::HighProbability)
    }

    pub fn calibrated(arms: usize, rounds: usize, delta: f64, c: f64, target: usize) -> Result<Self> {
        check_delta(delta)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(argument(format!("C must be positive and finite, got {c}")));
        }
        let gap = calibrated_gap(arms, rounds, delta, c);
        Self::build(arms, rounds, delta, target, gap, GapMode::Calibrated { c })
    }

    pub fn with_gap(arms: usize, rounds: usize, delta: f64, gap: f64, target: usize) -> Result<Self> {
        check_delta(delta)?;
        Self::build(arms, rounds, delta, target, gap, GapMode::Explicit)
    }

    fn build(arms: usize, rounds: usize, delta: f64, target: usize, gap: f64, mode: GapMode) -> Result<Self> {
        let spec = Self { arms, rounds, delta, target, gap, sigma2: SIGMA2, mode };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms < 2 {
            return Err(argument(format!("need K ≥ 2 arms, got {}", self.arms)));
        }
        if self.rounds < 1 {
            return Err(argument("need T ≥ 1"));
        }
        check_delta(self.delta)?;
        if self.target >= self.arms {
            return Err(argument(format!("target arm {} out of range for K = {}", self.target, self.arms)));
        }
        if !(0.0..=MAX_GAP).contains(&self.gap) {
            return Err(argument(format!("gap Δ = {} outside [0, 1/30]", self.gap)));
        }
        if self.sigma2 != SIGMA2 {
            return Err(argument("σ² is fixed to 1/(32 ln 2)"));
        }
        Ok(())
    }

    /// The arm that is a per-round minimizer in every round.
    pub fn optimal_arm(&self) -> usize {
        self.target
    }

    /// Loss of `arm` given the shared draw `z`.
    #[inline]
    pub fn loss(&self, arm: usize, z: f64) -> f64 {
        if arm == 0 {
            clip01(z - self.gap)
        } else if arm == self.target {
            clip01(z - 2.0 * self.gap)
        } else {
            clip01(z)
        }
    }

    /// Upper bound p on the probability that a round is clipped by more
    /// than the window `[2Δ, 1 − 2Δ]`.
    pub fn clipping_bound(&self) -> f64 {
        let half = 0.5 - 2.0 * self.gap;
        (-(half * half) / (2.0 * self.sigma2)).exp()
    }

    fn normal(&self) -> Normal<f64> {
        Normal::new(0.5, self.sigma2.sqrt()).expect("σ is positive and finite")
    }

    /// Draws the shared Gaussian sequence Z_1..Z_n.
    pub fn sample_z<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let normal = self.normal();
        (0..n).map(|_| normal.sample(rng)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LossMatrix> {
        self.validate()?;
        let normal = self.normal();
        let k = self.arms;
        let mut values = Vec::with_capacity(self.rounds * k);
        for _ in 0..self.rounds {
            let z = normal.sample(rng);
            values.extend((0..k).map(|i| self.loss(i, z)));
        }
        Ok(LossMatrix::from_raw(self.rounds, k, values))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.25 {
        Ok(())
    } else {
        Err(argument(format!("δ = {delta} outside (0, 1/4)")))
    }
}

pub fn sample_clipped_gaussian<R: Rng + ?Sized>(spec: &ClippedGaussianSpec, rng: &mut R) -> Result<LossMatrix> {
    spec.sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClippingStats {
    /// Empirical frequency of W_t = 0, i.e. Z_t ∉ [2Δ, 1 − 2Δ].
    pub frequency: f64,
    /// Theoretical bound exp(−(1/2 − 2Δ)²/(2σ²)).
    pub bound: f64,
    pub rounds: usize,
}

pub fn clipping_event_stats<R: Rng + ?Sized>(
    spec: &ClippedGaussianSpec,
    rounds_sampled: usize,
    rng: &mut R,
) -> Result<ClippingStats> {
    spec.validate()?;
    if rounds_sampled == 0 {
        return Err(argument("need at least one sampled round"));
    }
    let lo = 2.0 * spec.gap;
    let hi = 1.0 - 2.0 * spec.gap;
    let normal = spec.normal();
    let outside = (0..rounds_sampled)
        .filter(|_| {
            let z = normal.sample(rng);
            !(lo..=hi).contains(&z)
        })
        .count();
    Ok(ClippingStats {
        frequency: outside as f64 / rounds_sampled as f64,
        bound: spec.clipping_bound(),
        rounds: rounds_sampled,
    })
}

/// Independent Bernoulli losses: mean `α` on the target arm, `α + ε` elsewhere.
/// `target = None` is the null measure with every arm at `α + ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliFamilySpec {
    pub arms: usize,
    pub rounds: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub target: Option<usize>,
}

/// ε = (1/2) √(α(1−α)K/T).
pub fn default_epsilon(arms: usize, rounds: usize, alpha: f64) -> f64 {
    0.5 * (alpha * (1.0 - alpha) * arms as f64 / rounds as f64).sqrt()
}

impl BernoulliFamilySpec {
    /// Family with the default gap ε = (1/2)√(α(1−α)K/T); needs T ≥ K/(4(1−α)).
    pub fn new(arms: usize, rounds: usize, alpha: f64, target: Option<usize>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(argument(format!("α = {alpha} outside (0, 1)")));
        }
        if (rounds as f64) < arms as f64 / (4.0 * (1.0 - alpha)) {
            return Err(argument(format!(
                "T = {rounds} below K/(4(1−α)) = {}",
                arms as f64 / (4.0 * (1.0 - alpha))
            )));
        }
        Self::with_epsilon(arms, rounds, alpha, default_epsilon(arms, rounds, alpha), target)
    }

    pub fn with_epsilon(arms: usize, rounds: usize, alpha: f64, epsilon: f64, target: Option<usize>) -> Result<Self> {
        let spec = Self { arms, rounds, alpha, epsilon, target };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms < 2 {
            return Err(argument(format!("need K ≥ 2 arms, got {}", self.arms)));
        }
        if self.rounds < 1 {
            return Err(argument("need T ≥ 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(argument(format!("α = {} outside [0, 1]", self.alpha)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(argument(format!("ε = {} must be non-negative", self.epsilon)));
        }
        if self.alpha + self.epsilon > 1.0 {
            return Err(argument(format!("α + ε = {} exceeds 1", self.alpha + self.epsilon)));
        }
        if let Some(j) = self.target {
            if j >= self.arms {
                return Err(argument(format!("target arm {j} out of range for K = {}", self.arms)));
            }
        }
        Ok(())
    }

    /// Expected loss of every arm.
    pub fn arm_means(&self) -> Vec<f64> {
        (0..self.arms)
            .map(|i| if Some(i) == self.target { self.alpha } else { self.alpha + self.epsilon })
            .collect()
    }

    pub fn with_target(&self, target: Option<usize>) -> Self {
        Self { target, ..*self }
    }

    /// The K members Q_1..Q_K of the family.
    pub fn family(&self) -> Vec<Self> {
        (0..self.arms).map(|j| self.with_target(Some(j))).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LossMatrix> {
        self.validate()?;
        let k = self.arms;
        let dists = self
            .arm_means()
            .into_iter()
            .map(|m| Bernoulli::new(m).map_err(|e| argument(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(self.rounds * k);
        for _ in 0..self.rounds {
            values.extend(dists.iter().map(|d| if d.sample(rng) { 1.0 } else { 0.0 }));
        }
        Ok(LossMatrix::from_raw(self.rounds, k, values))
    }
}

pub fn sample_bernoulli_family<R: Rng + ?Sized>(spec: &BernoulliFamilySpec, rng: &mut R) -> Result<LossMatrix> {
    spec.sample(rng)
}

/// Draws `j` uniformly from the family and samples from Q_j.
pub fn sample_mixture<R: Rng + ?Sized>(specs: &[BernoulliFamilySpec], rng: &mut R) -> Result<(LossMatrix, usize)> {
    let first = specs.first().ok_or_else(|| argument("empty mixture"))?;
    if first.arms < 2 || specs.len() < 2 {
        return Err(argument("a mixture needs K ≥ 2 arms"));
    }
    if specs.len() != first.arms {
        return Err(structural(format!("mixture has {} members for K = {}", specs.len(), first.arms)));
    }
    for (j, s) in specs.iter().enumerate() {
        if s.target != Some(j) || s.with_target(None) != first.with_target(None) {
            return Err(argument(format!("mixture member {j} differs from the family in more than its target arm")));
        }
    }
    let j = rng.random_range(0..specs.len());
    Ok((specs[j].sample(rng)?, j))
}

/// One environment instance the runner can replay.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    ClippedGaussian(ClippedGaussianSpec),
    Bernoulli(BernoulliFamilySpec),
    /// Uniform mixture over the K targets of the given family.
    BernoulliMixture(BernoulliFamilySpec),
}

impl EnvSpec {
    pub fn arms(&self) -> usize {
        match self {
            EnvSpec::ClippedGaussian(s) => s.arms,
            EnvSpec::Bernoulli(s) | EnvSpec::BernoulliMixture(s) => s.arms,
        }
    }

    pub fn rounds(&self) -> usize {
        match self {
            EnvSpec::ClippedGaussian(s) => s.rounds,
            EnvSpec::Bernoulli(s) | EnvSpec::BernoulliMixture(s) => s.rounds,
        }
    }

    /// Samples a matrix; the second component is the realized target arm.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(LossMatrix, Option<usize>)> {
        match self {
            EnvSpec::ClippedGaussian(s) => Ok((s.sample(rng)?, Some(s.target))),
            EnvSpec::Bernoulli(s) => Ok((s.sample(rng)?, s.target)),
            EnvSpec::BernoulliMixture(s) => {
                let (lm, j) = sample_mixture(&s.family(), rng)?;
                Ok((lm, Some(j)))
            }
        }
    }
}
