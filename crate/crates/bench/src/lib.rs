//! Fixtures shared by the throughput benchmarks.

use banditlb::envs::{BernoulliFamilySpec, ClippedGaussianSpec};
use banditlb::stream::seeded;
use banditlb::LossMatrix;

pub fn clipped_matrix(arms: usize, rounds: usize) -> LossMatrix {
    ClippedGaussianSpec::high_probability(arms, rounds, 0.15, 1)
        .and_then(|s| s.sample(&mut seeded(1)))
        .expect("valid fixture")
}

pub fn bernoulli_spec(arms: usize, rounds: usize) -> BernoulliFamilySpec {
    BernoulliFamilySpec::new(arms, rounds, 0.5, Some(0)).expect("valid fixture")
}
