//! Minimax lower bounds for adversarial bandits: loss matrices and regret
//! functionals, the clipped-Gaussian and Bernoulli hard instances, the
//! Exp3 family of policies, divergence tools, closed-form bounds with
//! hypothesis checks, and a seeded Monte Carlo runner.

pub mod bounds;
pub mod envs;
pub mod error;
pub mod info;
pub mod loss;
pub mod policies;
pub mod runner;
pub mod stream;
pub mod sum;

pub use bounds::{evaluate_bound, BoundKind, BoundParams, BoundQuery, BoundValue, Verdict};
pub use envs::{BernoulliFamilySpec, ClippedGaussianSpec, EnvSpec};
pub use error::{Error, Result};
pub use loss::{regret, BallKind, LossMatrix, RegretSummary, Trajectory};
pub use policies::{run_episode, PolicyKind, PolicySpec, PolicyState, Tuning};
pub use runner::{run_plan, run_plan_with_workers, EnvFamily, ExperimentPlan, Gap, PolicyTemplate, RegretStats};
pub use stream::{Purpose, StreamKey};
