//! Loss sequences, trajectories and the regret / variation functionals.
//!
//! Arms are 0-based throughout the library. Every accumulation over rounds
//! goes through [`crate::sum::NeumaierSum`].

use crate::error::{argument, structural, Result};
use crate::sum::{self, NeumaierSum};

/// A realized oblivious loss sequence: `rounds × arms` entries in `[0, 1]`,
/// stored row-major (one row per round).
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    rounds: usize,
    arms: usize,
    values: Vec<f64>,
}

impl LossMatrix {
    pub fn new(rounds: usize, arms: usize, values: Vec<f64>) -> Result<Self> {
        if rounds < 1 {
            return Err(argument("a loss matrix needs at least one round"));
        }
        if arms < 2 {
            return Err(argument(format!("a loss matrix needs at least two arms, got {arms}")));
        }
        if values.len() != rounds * arms {
            return Err(structural(format!(
                "expected {} entries for {rounds}×{arms}, got {}",
                rounds * arms,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(argument(format!(
                "loss at round {}, arm {} is {} (outside [0,1])",
                pos / arms,
                pos % arms,
                values[pos]
            )));
        }
        Ok(Self { rounds, arms, values })
    }

    /// Builds a matrix from per-round loss vectors.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let arms = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * arms);
        for (t, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != arms {
                return Err(structural(format!(
                    "round {t} has {} arms, round 0 has {arms}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), arms, values)
    }

    /// Samplers guarantee the `[0,1]` invariant themselves.
    pub(crate) fn from_raw(rounds: usize, arms: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rounds * arms);
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self { rounds, arms, values }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    #[inline]
    pub fn get(&self, round: usize, arm: usize) -> f64 {
        self.values[round * self.arms + arm]
    }

    #[inline]
    pub fn row(&self, round: usize) -> &[f64] {
        &self.values[round * self.arms..(round + 1) * self.arms]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.arms)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cumulative loss of every arm.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut acc = vec![NeumaierSum::new(); self.arms];
        for row in self.rows() {
            for (a, &v) in acc.iter_mut().zip(row) {
                a.add(v);
            }
        }
        acc.iter().map(NeumaierSum::value).collect()
    }

    /// Per-arm mean loss μ_T.
    pub fn column_means(&self) -> Vec<f64> {
        let t = self.rounds as f64;
        self.column_sums().into_iter().map(|s| s / t).collect()
    }

    pub(crate) fn set(&mut self, round: usize, arm: usize, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(argument(format!("loss {value} outside [0,1]")));
        }
        self.values[round * self.arms + arm] = value;
        Ok(())
    }

    /// Copy of this matrix with one entry replaced.
    pub fn with_entry(&self, round: usize, arm: usize, value: f64) -> Result<Self> {
        if round >= self.rounds || arm >= self.arms {
            return Err(structural(format!("entry ({round}, {arm}) out of bounds")));
        }
        let mut out = self.clone();
        out.set(round, arm, value)?;
        Ok(out)
    }
}

/// Cumulative loss of the best arm and that arm; ties go to the lowest index.
pub fn best_cumulative_loss(lm: &LossMatrix) -> (f64, usize) {
    let sums = lm.column_sums();
    let mut best = (sums[0], 0);
    for (i, &s) in sums.iter().enumerate().skip(1) {
        if s < best.0 {
            best = (s, i);
        }
    }
    best
}

/// Quadratic variation Q_T = Σ_t ‖ℓ_t − μ_T‖² together with μ_T.
pub fn quadratic_variation_with_means(lm: &LossMatrix) -> (f64, Vec<f64>) {
    let means = lm.column_means();
    let mut acc = NeumaierSum::new();
    for row in lm.rows() {
        for (&v, &m) in row.iter().zip(&means) {
            let d = v - m;
            acc.add(d * d);
        }
    }
    (acc.value(), means)
}

pub fn quadratic_variation(lm: &LossMatrix) -> f64 {
    quadratic_variation_with_means(lm).0
}

/// Which regularity ball a loss sequence is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BallKind {
    /// L*_T / T ≤ α
    SmallLoss,
    /// Q_T / (TK) ≤ α
    SmallVariation,
}

impl BallKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BallKind::SmallLoss => "small_loss",
            BallKind::SmallVariation => "small_variation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "small_loss" => Some(BallKind::SmallLoss),
            "small_variation" => Some(BallKind::SmallVariation),
            _ => None,
        }
    }

    /// Largest admissible radius.
    pub fn max_alpha(self) -> f64 {
        match self {
            BallKind::SmallLoss => 1.0,
            BallKind::SmallVariation => 0.25,
        }
    }

    /// The normalized statistic compared against α.
    pub fn statistic(self, lm: &LossMatrix) -> f64 {
        match self {
            BallKind::SmallLoss => best_cumulative_loss(lm).0 / lm.rounds() as f64,
            BallKind::SmallVariation => {
                quadratic_variation(lm) / (lm.rounds() * lm.arms()) as f64
            }
        }
    }
}

pub fn ball_membership(lm: &LossMatrix, alpha: f64, kind: BallKind) -> Result<bool> {
    if !(0.0..=kind.max_alpha()).contains(&alpha) {
        return Err(argument(format!(
            "alpha {alpha} outside [0, {}] for the {} ball",
            kind.max_alpha(),
            kind.as_str()
        )));
    }
    Ok(kind.statistic(lm) <= alpha)
}

/// Effective range E_T (largest within-round spread) and maximal loss M_T.
pub fn effective_range_stats(lm: &LossMatrix) -> (f64, f64) {
    let mut range = 0.0f64;
    let mut max = 0.0f64;
    for row in lm.rows() {
        let (lo, hi) = row
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        range = range.max(hi - lo);
        max = max.max(hi);
    }
    (range, max)
}

/// Returns an arm that attains the per-round minimum in every round, if any
/// (lowest index first).
pub fn uniformly_optimal_arm(lm: &LossMatrix) -> Option<usize> {
    (0..lm.arms()).find(|&i| {
        lm.rows()
            .all(|row| row.iter().all(|&v| row[i] <= v))
    })
}

/// One episode of play against a fixed loss matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<'a> {
    pub lm: &'a LossMatrix,
    pub actions: Vec<usize>,
    pub incurred: Vec<f64>,
}

impl<'a> Trajectory<'a> {
    /// Builds a trajectory, reading the incurred losses off the matrix.
    pub fn new(lm: &'a LossMatrix, actions: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = actions.iter().find(|&&a| a >= lm.arms()) {
            return Err(argument(format!("action {bad} out of range for {} arms", lm.arms())));
        }
        let incurred = actions.iter().enumerate().map(|(t, &a)| lm.get(t, a)).collect();
        let traj = Self { lm, actions, incurred };
        traj.check()?;
        Ok(traj)
    }

    /// Validates the trajectory against its loss matrix.
    pub fn check(&self) -> Result<()> {
        if self.actions.len() != self.lm.rounds() || self.incurred.len() != self.lm.rounds() {
            return Err(structural(format!(
                "trajectory has {} actions and {} losses, matrix has {} rounds",
                self.actions.len(),
                self.incurred.len(),
                self.lm.rounds()
            )));
        }
        for (t, (&a, &l)) in self.actions.iter().zip(&self.incurred).enumerate() {
            if a >= self.lm.arms() {
                return Err(structural(format!("round {t}: action {a} out of range")));
            }
            if l != self.lm.get(t, a) {
                return Err(structural(format!("round {t}: incurred loss does not match the matrix")));
            }
        }
        Ok(())
    }

    /// N_i(t): number of pulls of each arm during the first `t` rounds.
    pub fn counts_until(&self, t: usize) -> Vec<usize> {
        let mut counts = vec![0; self.lm.arms()];
        for &a in &self.actions[..t.min(self.actions.len())] {
            counts[a] += 1;
        }
        counts
    }

    pub fn counts(&self) -> Vec<usize> {
        self.counts_until(self.actions.len())
    }

    pub fn cumulative_loss(&self) -> f64 {
        sum::sum(self.incurred.iter().copied())
    }
}

/// R_T = Σ_t ℓ_{I_t,t} − min_i Σ_t ℓ_{i,t}.
pub fn regret(traj: &Trajectory<'_>) -> Result<f64> {
    if traj.actions.len() != traj.lm.rounds() || traj.incurred.len() != traj.lm.rounds() {
        return Err(structural(format!(
            "trajectory length {} does not match {} rounds",
            traj.actions.len(),
            traj.lm.rounds()
        )));
    }
    Ok(traj.cumulative_loss() - best_cumulative_loss(traj.lm).0)
}

/// Pseudo-regret Σ_t m_{I_t} − T·min_i m_i for per-arm expected losses `means`.
pub fn pseudo_regret(actions: &[usize], means: &[f64]) -> Result<f64> {
    if let Some(&bad) = actions.iter().find(|&&a| a >= means.len()) {
        return Err(structural(format!("action {bad} has no mean among {} arms", means.len())));
    }
    let best = means.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(sum::sum(actions.iter().map(|&a| means[a] - best)))
}

/// Cumulative variance of the policy V_T = Σ_t Var_{I∼p_t}(ℓ_{I,t}).
pub fn policy_variance(lm: &LossMatrix, probs: &[Vec<f64>]) -> Result<f64> {
    if probs.len() != lm.rounds() {
        return Err(structural(format!(
            "{} action distributions for {} rounds",
            probs.len(),
            lm.rounds()
        )));
    }
    let mut acc = NeumaierSum::new();
    for (row, p) in lm.rows().zip(probs) {
        if p.len() != lm.arms() {
            return Err(structural("action distribution has the wrong number of arms"));
        }
        let mean: f64 = row.iter().zip(p).map(|(l, q)| l * q).sum();
        let var: f64 = row.iter().zip(p).map(|(l, q)| q * (l - mean) * (l - mean)).sum();
        acc.add(var);
    }
    Ok(acc.value())
}

/// Every statistic of one episode that the bounds are phrased in.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub regret: f64,
    pub best_arm: usize,
    pub l_star: f64,
    pub q_t: f64,
    pub mu_t: Vec<f64>,
    pub e_t: f64,
    pub m_t: f64,
    /// Only available when the per-round action distributions were kept.
    pub v_t: Option<f64>,
}

impl RegretSummary {
    pub fn from_trajectory(traj: &Trajectory<'_>, probs: Option<&[Vec<f64>]>) -> Result<Self> {
        let regret = regret(traj)?;
        let (l_star, best_arm) = best_cumulative_loss(traj.lm);
        let (q_t, mu_t) = quadratic_variation_with_means(traj.lm);
        let (e_t, m_t) = effective_range_stats(traj.lm);
        let v_t = probs.map(|p| policy_variance(traj.lm, p)).transpose()?;
        Ok(Self { regret, best_arm, l_star, q_t, mu_t, e_t, m_t, v_t })
    }
}
