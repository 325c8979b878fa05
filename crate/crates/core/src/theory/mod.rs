//! Exact tabular checks of fitted Q-iteration dynamics: the replay
//! distribution recursion, the population loss split, the initial-gradient
//! decomposition and its 1/k decay, and the squared-residual
//! suboptimality bound.

mod bound;
mod distribution;
mod fqi;
mod gradient;
mod loss;
mod qfunc;

pub use bound::{
    optimal_q, policy_value, suboptimality_check, suboptimality_check_from, Suboptimality,
};
pub use distribution::{atom, dist_update, EmpiricalDistribution};
pub use fqi::{fqi_run, FqiConfig, FqiRound, FqiRun};
pub use gradient::{
    empirical_fit, empirical_gradient_decomposition, initial_gradient_decomposition, weighted_fit,
    weighted_gradient, GradientDecomposition, Sample,
};
pub use loss::{
    expected_loss_enumerated, population_gradient, population_loss, population_loss_decomposition,
};
pub use qfunc::{bellman_apply, TabularQ};

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}
