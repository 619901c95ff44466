//! Posterior targets: potential energy `U(q) = -log π(q|x)` (up to a constant)
//! and its analytic gradient.

mod banana;
mod garch;
mod gaussian;
mod gp_regression;
mod logistic;

pub use banana::BananaTarget;
pub use garch::GarchTarget;
pub use gaussian::{IllConditionedGaussianTarget, StandardGaussianTarget};
pub use gp_regression::{matern32, GpRegressionTarget, LogNormalPrior};
pub use logistic::{LogisticRegressionTarget, Prior};

use crate::error::Result;
use crate::scalar::Real;

/// A posterior known through its exact potential and gradient.
///
/// Implementations are immutable after construction and may be evaluated
/// concurrently. Passing a vector of the wrong length is a programming error
/// and panics.
pub trait TargetModel<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn in_support(&self, _q: &[T]) -> bool {
        true
    }

    /// `+inf` exactly when `q` is outside the support.
    fn potential(&self, q: &[T]) -> T;

    /// Writes `∇U(q)` into `grad`. Fails with [`crate::Error::OutOfSupport`].
    fn gradient(&self, q: &[T], grad: &mut [T]) -> Result<()>;

    fn name(&self) -> &str;
}

/// Targets with a sum-over-observations likelihood, for minibatch gradients.
pub trait DataTarget<T: Real>: TargetModel<T> {
    fn n_obs(&self) -> usize;

    /// Writes `-∇ log prior(q)` into `out`.
    fn prior_gradient(&self, q: &[T], out: &mut [T]);

    /// Adds `scale * Σ_{i ∈ rows} -∇ log π(x_i | q)` into `out`.
    fn add_likelihood_gradient(&self, q: &[T], rows: &[usize], scale: T, out: &mut [T]);
}

#[inline]
pub(crate) fn assert_dim(expected: usize, q: usize) {
    assert_eq!(expected, q, "position has dimension {q}, target expects {expected}");
}

/// Max relative error of the analytic gradient against central differences
/// of the potential, with per-coordinate step `h·(|q_j|+1)`.
pub fn gradient_fd_error<M: TargetModel<f64> + ?Sized>(m: &M, q: &[f64], h: f64) -> Result<f64> {
    let mut g = vec![0.0; q.len()];
    m.gradient(q, &mut g)?;
    let fd = crate::numdiff::central_gradient(|x| m.potential(x), q, h);
    Ok(crate::numdiff::max_rel_error(&g, &fd))
}

#[cfg(test)]
pub(crate) mod fd {
    use super::TargetModel;

    pub fn gradient_rel_error<M: TargetModel<f64> + ?Sized>(m: &M, q: &[f64], h: f64) -> f64 {
        super::gradient_fd_error(m, q, h).unwrap()
    }
}
