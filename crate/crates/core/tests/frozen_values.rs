//! Reference values computed independently at high precision and frozen.

use approx::assert_relative_eq;

use banditlb::bounds::{bound_value, small_variation_c1, BoundKind, BoundParams, BoundQuery};
use banditlb::envs::{default_epsilon, high_probability_gap, ClippedGaussianSpec, MAX_GAP, SIGMA2};
use banditlb::info::{kl_bernoulli, kl_gaussian_shift};
use banditlb::runner::ball_alpha_lower_endpoint;
use banditlb::BallKind;

fn value(kind: BoundKind, params: BoundParams) -> f64 {
    bound_value(&BoundQuery::new(kind, params)).unwrap()
}

#[test]
fn noise_variance() {
    assert_relative_eq!(SIGMA2, 1.0 / (32.0 * 2f64.ln()), max_relative = 1e-15);
    assert_relative_eq!(SIGMA2, 0.045_084_220_027_780_106, max_relative = 1e-15);
}

#[test]
fn gaps() {
    assert_relative_eq!(high_probability_gap(2, 1000, 0.125), 0.003_952_847_075_210_474, max_relative = 1e-14);
    assert_relative_eq!(default_epsilon(4, 1024, 0.5), 1.0 / 64.0, max_relative = 1e-15);
}

#[test]
fn divergences() {
    assert_relative_eq!(kl_bernoulli(0.5, 0.25), 0.143_841_036_225_890_46, max_relative = 1e-14);
    assert_relative_eq!(kl_gaussian_shift(0.1, SIGMA2).unwrap(), 0.110_903_548_889_591_25, max_relative = 1e-14);
}

#[test]
fn bound_values() {
    let cases = [
        (BoundKind::Thm4Lower, BoundParams::kt(4, 1024).alpha(0.5), 1.676_104_962_812_557_1),
        (BoundKind::Cor8Lower, BoundParams::kt(2, 8192), 0.179_582_674_587_059_69),
        (BoundKind::Cor7Lower, BoundParams::kt(2, 8192).rho(0.5), 0.179_582_674_587_059_69),
        (BoundKind::Thm1Lower, BoundParams::kt(2, 8192).delta(0.15), 2.395_893_695_039_501_4),
        (BoundKind::Lemma5Lower, BoundParams::kt(2, 4096).alpha(0.5), 5.656_854_249_492_380),
        (BoundKind::Lemma5Lower, BoundParams::kt(4, 4096).alpha(0.5), 8.0),
    ];
    for (kind, params, expected) in cases {
        assert_relative_eq!(value(kind, params), expected, max_relative = 1e-14);
    }
    assert_relative_eq!(small_variation_c1(), 11.736_6, max_relative = 1e-5);
}

#[test]
fn admissible_alpha_endpoints() {
    assert_relative_eq!(
        ball_alpha_lower_endpoint(BallKind::SmallLoss, 2, 2048),
        0.038_508_176_697_774_74,
        max_relative = 1e-13
    );
    assert_relative_eq!(
        ball_alpha_lower_endpoint(BallKind::SmallVariation, 2, 2048),
        0.087_389_558_544_918_98,
        max_relative = 1e-13
    );
}

#[test]
fn clipping_probability_bounds() {
    let at = |gap| ClippedGaussianSpec::with_gap(2, 100, 0.1, gap, 1).unwrap().clipping_bound();
    assert_relative_eq!(at(0.0), 0.0625, max_relative = 1e-14);
    assert_relative_eq!(at(MAX_GAP), 0.124_616, max_relative = 1e-5);
    assert!(at(MAX_GAP) <= 0.125);
}

#[test]
fn horizon_condition() {
    // smallest T with T ≥ 32 log(2/δ) at δ = 0.15 is 83
    assert_relative_eq!(32.0 * (2.0f64 / 0.15).ln(), 82.8885, max_relative = 1e-5);
    let q = |t| BoundQuery::new(BoundKind::Thm1Lower, BoundParams::kt(2, t).delta(0.15));
    assert!(!banditlb::bounds::validate_hypotheses(&q(82)).ok());
    assert!(banditlb::bounds::validate_hypotheses(&q(83)).ok());
}
