use rand::Rng;

use super::{assert_dim, TargetModel};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::scalar::Real;

/// Zero-mean Gaussian with diagonal covariance, `U(q) = Σ q_j²/(2 v_j)`.
#[derive(Clone, Debug)]
pub struct IllConditionedGaussianTarget<T> {
    variances: Vec<T>,
    precisions: Vec<T>,
}

impl<T: Real> IllConditionedGaussianTarget<T> {
    pub fn new(variances: Vec<T>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::InvalidConfig("gaussian target needs at least one variance".into()));
        }
        if variances.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidConfig("variances must be positive and finite".into()));
        }
        let precisions = variances.iter().map(|&v| T::one() / v).collect();
        Ok(Self { variances, precisions })
    }

    /// Diagonal with `min_var` first, `max_var` last, and the middle entries
    /// drawn uniformly on `[mid_low, mid_high]` (uniform on the variance).
    pub fn with_spread(
        dim: usize,
        min_var: f64,
        max_var: f64,
        mid_low: f64,
        mid_high: f64,
        seed: u64,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidConfig("spread gaussian needs dim >= 2".into()));
        }
        let mut rng = stream(seed, Stream::Data);
        let mut v = Vec::with_capacity(dim);
        v.push(T::lit(min_var));
        for _ in 1..dim - 1 {
            v.push(T::lit(rng.random_range(mid_low..=mid_high)));
        }
        v.push(T::lit(max_var));
        Self::new(v)
    }

    pub fn variances(&self) -> &[T] {
        &self.variances
    }
}

impl<T: Real> TargetModel<T> for IllConditionedGaussianTarget<T> {
    fn dim(&self) -> usize {
        self.variances.len()
    }

    fn potential(&self, q: &[T]) -> T {
        assert_dim(self.dim(), q.len());
        let half = T::lit(0.5);
        q.iter().zip(&self.precisions).map(|(&x, &p)| half * x * x * p).sum()
    }

    fn gradient(&self, q: &[T], grad: &mut [T]) -> Result<()> {
        assert_dim(self.dim(), q.len());
        for ((g, &x), &p) in grad.iter_mut().zip(q).zip(&self.precisions) {
            *g = x * p;
        }
        Ok(())
    }

    fn name(&self) -> &str {
        "ill_conditioned_gaussian"
    }
}

/// `N(0, I_d)`.
#[derive(Clone, Debug)]
pub struct StandardGaussianTarget {
    dim: usize,
}

impl StandardGaussianTarget {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl<T: Real> TargetModel<T> for StandardGaussianTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn potential(&self, q: &[T]) -> T {
        assert_dim(self.dim, q.len());
        T::lit(0.5) * crate::linalg::dot(q, q)
    }

    fn gradient(&self, q: &[T], grad: &mut [T]) -> Result<()> {
        assert_dim(self.dim, q.len());
        grad.copy_from_slice(q);
        Ok(())
    }

    fn name(&self) -> &str {
        "standard_gaussian"
    }
}
