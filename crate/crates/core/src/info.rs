//! Divergences, the inequalities relating them, and an exact enumeration of
//! the KL chain rule for bandit histories.
//!
//! Conventions: `0 log 0 = 0/0 = 0` and `a/0 = +∞` for `a > 0`. An infinite
//! divergence is returned as `f64::INFINITY`, never as an error.

use crate::error::{argument, structural, Error, Result};
use crate::policies::{PolicySpec, PolicyState};
use crate::sum::NeumaierSum;

/// A probability vector over a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    probs: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(argument("empty support"));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(argument("probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(argument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        check_unit(p)?;
        Self::new(vec![1.0 - p, p])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    fn same_support(&self, other: &Self) -> Result<()> {
        if self.probs.len() != other.probs.len() {
            return Err(structural(format!(
                "support sizes differ: {} vs {}",
                self.probs.len(),
                other.probs.len()
            )));
        }
        Ok(())
    }

    /// KL(self, other).
    pub fn kl(&self, other: &Self) -> Result<f64> {
        self.same_support(other)?;
        Ok(self.probs.iter().zip(&other.probs).map(|(&p, &q)| xlogy_ratio(p, q)).sum())
    }

    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        self.same_support(other)?;
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(p, q)| (p - q).abs()).sum::<f64>())
    }

    /// Probability of an event given as a membership mask.
    pub fn prob(&self, event: &[bool]) -> Result<f64> {
        if event.len() != self.probs.len() {
            return Err(structural("event mask has the wrong length"));
        }
        Ok(self.probs.iter().zip(event).filter(|(_, &e)| e).map(|(p, _)| p).sum())
    }

    /// Law of `map(X)` for X distributed as `self`.
    pub fn push_forward(&self, map: &[usize], out_size: usize) -> Result<Self> {
        if map.len() != self.probs.len() {
            return Err(structural("map must cover the whole support"));
        }
        let mut out = vec![0.0; out_size];
        for (&p, &y) in self.probs.iter().zip(map) {
            *out.get_mut(y).ok_or_else(|| structural(format!("image {y} outside 0..{out_size}")))? += p;
        }
        Ok(Self { probs: out })
    }
}

fn check_unit(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(argument(format!("{p} is not a probability")))
    }
}

/// `p ln(p/q)` with the 0 log 0 conventions.
#[inline]
fn xlogy_ratio(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).ln()
    }
}

/// kl(p, q) between Ber(p) and Ber(q).
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    xlogy_ratio(p, q) + xlogy_ratio(1.0 - p, 1.0 - q)
}

/// χ²(p, q) = (p − q)² / (q(1 − q)).
pub fn chi2_bernoulli(p: f64, q: f64) -> f64 {
    if p == q {
        0.0
    } else if q == 0.0 || q == 1.0 {
        f64::INFINITY
    } else {
        (p - q) * (p - q) / (q * (1.0 - q))
    }
}

/// ε²/(2σ²): KL between N(μ, σ²) and N(μ − ε, σ²), which also dominates
/// the KL between the two clipped laws.
pub fn kl_gaussian_shift(epsilon: f64, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(argument(format!("σ² = {sigma2} must be positive")));
    }
    Ok(epsilon * epsilon / (2.0 * sigma2))
}

fn check_kl(kl: f64) -> Result<()> {
    if kl >= 0.0 {
        Ok(())
    } else {
        Err(argument(format!("KL = {kl} must be non-negative")))
    }
}

/// Lower bound (1/2) exp(−KL) on P(A) + Q(Aᶜ).
pub fn bretagnolle_huber_bound(kl: f64) -> Result<f64> {
    check_kl(kl)?;
    Ok(0.5 * (-kl).exp())
}

/// Pinsker's upper bound √(KL/2) on the total variation.
pub fn pinsker_tv_bound(kl: f64) -> Result<f64> {
    check_kl(kl)?;
    Ok((kl / 2.0).sqrt())
}

/// Σ_i E[N_i] · KL_i, with 0 · ∞ = 0.
pub fn chain_rule_rhs(expected_counts: &[f64], per_arm_kl: &[f64]) -> Result<f64> {
    if expected_counts.len() != per_arm_kl.len() {
        return Err(structural(format!(
            "{} counts vs {} divergences",
            expected_counts.len(),
            per_arm_kl.len()
        )));
    }
    if expected_counts.iter().any(|c| !(*c >= 0.0)) {
        return Err(argument("expected counts must be non-negative"));
    }
    for &k in per_arm_kl {
        check_kl(k)?;
    }
    Ok(expected_counts
        .iter()
        .zip(per_arm_kl)
        .map(|(&c, &k)| if c == 0.0 { 0.0 } else { c * k })
        .sum())
}

pub const ORACLE_MAX_ARMS: usize = 3;
pub const ORACLE_MAX_ROUND: usize = 4;

/// Both sides of the chain rule, computed by enumerating every history.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// KL between the laws of (h_t, I_t) under the two environments.
    pub lhs: f64,
    /// Σ_i E₁[N_i(t−1)] kl(law1_i, law2_i).
    pub rhs: f64,
    pub expected_counts: Vec<f64>,
}

struct Enumeration<'a> {
    law1: &'a [f64],
    law2: &'a [f64],
    lhs: NeumaierSum,
    lhs_infinite: bool,
    counts: Vec<NeumaierSum>,
}

impl Enumeration<'_> {
    /// Walks every continuation of a history whose log-probabilities under
    /// the two environments are `lp1`, `lp2`; `rounds_left` observations
    /// remain before the final action draw.
    fn walk(&mut self, state: &PolicyState, lp1: f64, lp2: f64, pulls: &mut Vec<usize>, rounds_left: usize) -> Result<()> {
        let probs = state.action_distribution().to_vec();
        if rounds_left == 0 {
            // Final action I_t: same conditional law under both environments.
            let weight = lp1.exp();
            if weight > 0.0 {
                for (c, &n) in self.counts.iter_mut().zip(pulls.iter()) {
                    c.add(weight * n as f64);
                }
            }
            for &p in &probs {
                if p == 0.0 {
                    continue;
                }
                let l1 = lp1 + p.ln();
                let l2 = lp2 + p.ln();
                if l1 == f64::NEG_INFINITY {
                    continue;
                }
                if l2 == f64::NEG_INFINITY {
                    self.lhs_infinite = true;
                } else {
                    self.lhs.add(l1.exp() * (l1 - l2));
                }
            }
            return Ok(());
        }
        for (arm, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for loss in [0.0, 1.0] {
                let like = |law: &[f64]| if loss == 1.0 { law[arm] } else { 1.0 - law[arm] };
                let (q1, q2) = (like(self.law1), like(self.law2));
                if q1 == 0.0 {
                    // Unreachable under environment 1: contributes nothing.
                    continue;
                }
                let next = state.update(arm, loss)?;
                pulls[arm] += 1;
                self.walk(&next, lp1 + p.ln() + q1.ln(), lp2 + p.ln() + q2.ln(), pulls, rounds_left - 1)?;
                pulls[arm] -= 1;
            }
        }
        Ok(())
    }
}

/// Exact chain-rule check for a deterministic policy against two product
/// Bernoulli environments, at round `t` (history of length `t − 1`).
pub fn exact_history_kl_oracle(spec: &PolicySpec, law1: &[f64], law2: &[f64], t: usize) -> Result<OracleResult> {
    let k = spec.arms;
    if law1.len() != k || law2.len() != k {
        return Err(structural(format!(
            "laws have {} and {} arms, policy has {k}",
            law1.len(),
            law2.len()
        )));
    }
    if k > ORACLE_MAX_ARMS || t > ORACLE_MAX_ROUND {
        return Err(Error::Capacity(format!(
            "enumeration limited to K ≤ {ORACLE_MAX_ARMS} and t ≤ {ORACLE_MAX_ROUND}, got K = {k}, t = {t}"
        )));
    }
    if t == 0 {
        return Err(argument("rounds are numbered from 1"));
    }
    for &p in law1.iter().chain(law2) {
        check_unit(p)?;
    }
    let mut e = Enumeration {
        law1,
        law2,
        lhs: NeumaierSum::new(),
        lhs_infinite: false,
        counts: vec![NeumaierSum::new(); k],
    };
    e.walk(&spec.init()?, 0.0, 0.0, &mut vec![0; k], t - 1)?;
    let expected_counts: Vec<f64> = e.counts.iter().map(NeumaierSum::value).collect();
    let kls: Vec<f64> = law1.iter().zip(law2).map(|(&p, &q)| kl_bernoulli(p, q)).collect();
    let rhs = chain_rule_rhs(&expected_counts, &kls)?;
    let lhs = if e.lhs_infinite { f64::INFINITY } else { e.lhs.value() };
    Ok(OracleResult { lhs, rhs, expected_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::SIGMA2;
    use crate::policies::PolicyKind;
    use proptest::prelude::*;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_bernoulli(0.3, 0.3), 0.0);
        // mpmath, 40 digits
        assert!((kl_bernoulli(0.5, 0.25) - 0.143_841_036_225_890_46).abs() < 1e-15);
        assert_eq!(kl_bernoulli(0.5, 0.0), f64::INFINITY);
        assert_eq!(kl_bernoulli(0.0, 0.0), 0.0);
        assert_eq!(kl_bernoulli(1.0, 1.0), 0.0);
    }

    #[test]
    fn chi2_examples() {
        assert_eq!(chi2_bernoulli(0.4, 0.4), 0.0);
        assert!((chi2_bernoulli(0.5, 0.25) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(chi2_bernoulli(0.5, 1.0), f64::INFINITY);
    }

    #[test]
    fn gaussian_shift_examples() {
        assert_eq!(kl_gaussian_shift(0.0, SIGMA2).unwrap(), 0.0);
        assert!((kl_gaussian_shift(0.1, SIGMA2).unwrap() - 0.110_903_548_889_591_25).abs() < 1e-15);
        assert!(kl_gaussian_shift(0.1, 0.0).is_err());
    }

    #[test]
    fn gap_exponent_identity() {
        // T/(K−1) · KL(2Δ shift) == 2TΔ²/(σ²(K−1)) == ln(1/(4δ))
        for &(k, t, d) in &[(2usize, 8192usize, 0.15), (4, 1000, 0.05), (8, 50_000, 0.2)] {
            let gap = crate::envs::high_probability_gap(k, t, d);
            let kl = kl_gaussian_shift(2.0 * gap, SIGMA2).unwrap();
            let lhs = t as f64 / (k as f64 - 1.0) * kl;
            assert!((lhs - (1.0 / (4.0 * d)).ln()).abs() < 1e-12);
            // and the pigeonhole instance of the chain rule
            let rhs = chain_rule_rhs(&[t as f64 / (k as f64 - 1.0)], &[kl]).unwrap();
            assert!(rhs <= 2.0 * t as f64 * gap * gap / (SIGMA2 * (k as f64 - 1.0)) + 1e-12);
        }
    }

    #[test]
    fn bound_examples() {
        assert_eq!(bretagnolle_huber_bound(0.0).unwrap(), 0.5);
        assert!((bretagnolle_huber_bound(std::f64::consts::LN_2).unwrap() - 0.25).abs() < 1e-16);
        assert_eq!(bretagnolle_huber_bound(f64::INFINITY).unwrap(), 0.0);
        assert!(bretagnolle_huber_bound(-1.0).is_err());
        assert_eq!(pinsker_tv_bound(0.0).unwrap(), 0.0);
        assert_eq!(pinsker_tv_bound(2.0).unwrap(), 1.0);
        assert!(pinsker_tv_bound(-0.5).is_err());
    }

    #[test]
    fn chain_rule_rhs_examples() {
        assert_eq!(chain_rule_rhs(&[3.0, 1.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!((chain_rule_rhs(&[3.0, 1.0], &[0.1, 0.2]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(chain_rule_rhs(&[0.0, 1.0], &[f64::INFINITY, 0.2]).unwrap(), 0.2);
        assert!(chain_rule_rhs(&[1.0], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn bretagnolle_huber_over_all_events() {
        for &(p, q) in &[(0.1, 0.9), (0.5, 0.2), (0.3, 0.31), (0.0, 0.5), (1.0, 0.0)] {
            let (lp, lq) = (DiscreteLaw::bernoulli(p).unwrap(), DiscreteLaw::bernoulli(q).unwrap());
            let bound = bretagnolle_huber_bound(lp.kl(&lq).unwrap()).unwrap();
            for mask in 0..4u8 {
                let a = [mask & 1 != 0, mask & 2 != 0];
                let ac = [!a[0], !a[1]];
                assert!(lp.prob(&a).unwrap() + lq.prob(&ac).unwrap() >= bound - 1e-15);
            }
        }
    }

    #[test]
    fn data_processing_over_all_binary_maps() {
        let maps = [[0, 0], [0, 1], [1, 0], [1, 1]];
        for &(p, q) in &[(0.1, 0.9), (0.5, 0.2), (0.3, 0.31), (0.0, 0.5)] {
            let (lp, lq) = (DiscreteLaw::bernoulli(p).unwrap(), DiscreteLaw::bernoulli(q).unwrap());
            let full = lp.kl(&lq).unwrap();
            for m in &maps {
                let img = lp.push_forward(m, 2).unwrap().kl(&lq.push_forward(m, 2).unwrap()).unwrap();
                assert!(img <= full + 1e-15);
            }
        }
    }

    #[test]
    fn discrete_law_validation() {
        assert!(DiscreteLaw::new(vec![0.5, 0.4]).is_err());
        assert!(DiscreteLaw::new(vec![1.2, -0.2]).is_err());
        assert!(DiscreteLaw::new(vec![]).is_err());
        assert!(DiscreteLaw::bernoulli(1.5).is_err());
        let a = DiscreteLaw::new(vec![0.2, 0.8]).unwrap();
        let b = DiscreteLaw::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(a.kl(&b).is_err());
    }

    fn exp3(k: usize) -> PolicySpec {
        PolicySpec::new(PolicyKind::Exp3, k, 4)
    }

    #[test]
    fn oracle_trivial_cases() {
        let r = exact_history_kl_oracle(&exp3(2), &[0.3, 0.5], &[0.3, 0.5], 3).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        let r = exact_history_kl_oracle(&exp3(2), &[0.3, 0.5], &[0.3, 0.3], 1).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert_eq!(r.expected_counts, vec![0.0, 0.0]);
    }

    #[test]
    fn oracle_chain_rule_holds() {
        for kind in [PolicyKind::Exp3, PolicyKind::Exp3Ix, PolicyKind::Exp3P { delta: 0.1 }, PolicyKind::Uniform] {
            for k in 2..=3 {
                let spec = PolicySpec::new(kind, k, 4);
                let law1: Vec<f64> = (0..k).map(|i| 0.2 + 0.25 * i as f64).collect();
                let law2: Vec<f64> = (0..k).map(|i| 0.6 - 0.15 * i as f64).collect();
                for t in 1..=4 {
                    let r = exact_history_kl_oracle(&spec, &law1, &law2, t).unwrap();
                    assert!((r.lhs - r.rhs).abs() <= 1e-9, "{kind} K={k} t={t}: {r:?}");
                    let total: f64 = r.expected_counts.iter().sum();
                    assert!((total - (t - 1) as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn oracle_detects_infinite_divergence() {
        let r = exact_history_kl_oracle(&exp3(2), &[0.5, 0.5], &[0.0, 0.5], 2).unwrap();
        assert_eq!(r.lhs, f64::INFINITY);
        assert_eq!(r.rhs, f64::INFINITY);
    }

    #[test]
    fn oracle_capacity() {
        assert!(matches!(
            exact_history_kl_oracle(&exp3(4), &[0.5; 4], &[0.5; 4], 2),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            exact_history_kl_oracle(&exp3(2), &[0.5; 2], &[0.5; 2], 5),
            Err(Error::Capacity(_))
        ));
        assert!(exact_history_kl_oracle(&exp3(2), &[0.5; 3], &[0.5; 3], 2).is_err());
    }

    proptest! {
        #[test]
        fn divergences_nonnegative_and_ordered(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
            let kl = kl_bernoulli(p, q);
            let chi = chi2_bernoulli(p, q);
            prop_assert!(kl >= -1e-15);
            prop_assert!(kl <= chi * (1.0 + 1e-12) + 1e-15);
            prop_assert!((p - q).abs() <= pinsker_tv_bound(kl.max(0.0)).unwrap() + 1e-12);
        }
    }
}
