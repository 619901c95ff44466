use serde::{Deserialize, Serialize};

use super::{assert_dim, DataTarget, TargetModel};
use crate::data_io::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Real;

/// Independent zero-centred prior on each coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    Gaussian { variance: f64 },
    Laplace { scale: f64 },
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            Prior::Gaussian { variance } => variance,
            Prior::Laplace { scale } => scale,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("prior parameter must be positive, got {v}")))
        }
    }

    /// `-log prior(q)` without constants.
    pub fn potential<T: Real>(&self, q: &[T]) -> T {
        match *self {
            Prior::Gaussian { variance } => {
                let c = T::lit(0.5 / variance);
                q.iter().map(|&x| c * x * x).sum()
            }
            Prior::Laplace { scale } => {
                let c = T::lit(1.0 / scale);
                q.iter().map(|&x| c * x.abs()).sum()
            }
        }
    }

    /// Writes `-∇ log prior(q)`. The Laplace subgradient at 0 is taken as 0.
    pub fn gradient_into<T: Real>(&self, q: &[T], out: &mut [T]) {
        match *self {
            Prior::Gaussian { variance } => {
                let c = T::lit(1.0 / variance);
                for (o, &x) in out.iter_mut().zip(q) {
                    *o = c * x;
                }
            }
            Prior::Laplace { scale } => {
                let c = T::lit(1.0 / scale);
                for (o, &x) in out.iter_mut().zip(q) {
                    *o = if x > T::zero() {
                        c
                    } else if x < T::zero() {
                        -c
                    } else {
                        T::zero()
                    };
                }
            }
        }
    }
}

/// Bayesian logistic regression, `y_i ~ Bernoulli(σ(x_iᵀβ))`.
#[derive(Clone, Debug)]
pub struct LogisticRegressionTarget<T> {
    x: Matrix<T>,
    y: Vec<T>,
    prior: Prior,
}

#[inline]
fn log1p_exp<T: Real>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Real> LogisticRegressionTarget<T> {
    pub fn new(x: Matrix<T>, y: Vec<T>, prior: Prior) -> Result<Self> {
        prior.validate()?;
        if x.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.rows(), got: y.len() });
        }
        for (i, &v) in y.iter().enumerate() {
            if v != T::zero() && v != T::one() {
                return Err(Error::NonBinaryLabel { line: i as u64 + 1, value: v.as_f64().to_string() });
            }
        }
        Ok(Self { x, y, prior })
    }

    pub fn from_dataset(data: &Dataset, prior: Prior) -> Result<Self> {
        Self::new(data.x.cast(), data.y.iter().map(|&v| T::lit(v)).collect(), prior)
    }

    pub fn prior(&self) -> Prior {
        self.prior
    }

    /// Same data under a different prior.
    pub fn with_prior(&self, prior: Prior) -> Result<Self> {
        prior.validate()?;
        Ok(Self { x: self.x.clone(), y: self.y.clone(), prior })
    }

    pub fn design(&self) -> &Matrix<T> {
        &self.x
    }

    /// Posterior mode by damped Newton steps, computed in f64. The Laplace
    /// prior contributes no curvature; a small ridge keeps the system
    /// positive definite.
    pub fn posterior_mode(&self) -> Result<Vec<f64>> {
        let (n, d) = (self.x.rows(), self.x.cols());
        let x: Matrix<f64> = self.x.cast();
        let y: Vec<f64> = self.y.iter().map(|v| v.as_f64()).collect();
        let curv = match self.prior {
            Prior::Gaussian { variance } => 1.0 / variance,
            Prior::Laplace { .. } => 1e-6 * n as f64,
        };
        let u = |q: &[f64]| -> f64 {
            let mut u = self.prior.potential(q);
            for i in 0..n {
                let eta = dot(x.row(i), q);
                u += log1p_exp(eta) - y[i] * eta;
            }
            u
        };
        let mut q = vec![0.0; d];
        let mut uq = u(&q);
        for _ in 0..50 {
            let mut g = vec![0.0; d];
            self.prior.gradient_into(&q, &mut g);
            let mut h = Matrix::<f64>::zeros(d, d);
            for j in 0..d {
                h.set(j, j, curv);
            }
            for i in 0..n {
                let row = x.row(i);
                let p = sigmoid(dot(row, &q));
                crate::linalg::axpy(p - y[i], row, &mut g);
                let w = p * (1.0 - p);
                for a in 0..d {
                    let wa = w * row[a];
                    for b in 0..=a {
                        h.set(a, b, h.get(a, b) + wa * row[b]);
                    }
                }
            }
            for a in 0..d {
                for b in 0..a {
                    h.set(b, a, h.get(a, b));
                }
            }
            let step = crate::linalg::SpdFactor::new(&h)?.solve(&g);
            let mut t = 1.0;
            let improved = loop {
                let cand: Vec<f64> = q.iter().zip(&step).map(|(a, s)| a - t * s).collect();
                let uc = u(&cand);
                if uc <= uq {
                    break Some((cand, uc));
                }
                t *= 0.5;
                if t < 1e-8 {
                    break None;
                }
            };
            let Some((cand, uc)) = improved else { break };
            let done = uq - uc < 1e-10 * (1.0 + uq.abs());
            q = cand;
            uq = uc;
            if done {
                break;
            }
        }
        Ok(q)
    }
}

impl<T: Real> TargetModel<T> for LogisticRegressionTarget<T> {
    fn dim(&self) -> usize {
        self.x.cols()
    }

    fn potential(&self, q: &[T]) -> T {
        assert_dim(self.dim(), q.len());
        let mut u = self.prior.potential(q);
        for i in 0..self.x.rows() {
            let eta = dot(self.x.row(i), q);
            u += log1p_exp(eta) - self.y[i] * eta;
        }
        u
    }

    fn gradient(&self, q: &[T], grad: &mut [T]) -> Result<()> {
        assert_dim(self.dim(), q.len());
        self.prior.gradient_into(q, grad);
        for i in 0..self.x.rows() {
            let row = self.x.row(i);
            let w = sigmoid(dot(row, q)) - self.y[i];
            crate::linalg::axpy(w, row, grad);
        }
        Ok(())
    }

    fn name(&self) -> &str {
        "logistic_regression"
    }
}

impl<T: Real> DataTarget<T> for LogisticRegressionTarget<T> {
    fn n_obs(&self) -> usize {
        self.x.rows()
    }

    fn prior_gradient(&self, q: &[T], out: &mut [T]) {
        self.prior.gradient_into(q, out);
    }

    fn add_likelihood_gradient(&self, q: &[T], rows: &[usize], scale: T, out: &mut [T]) {
        for &i in rows {
            let row = self.x.row(i);
            let w = scale * (sigmoid(dot(row, q)) - self.y[i]);
            crate::linalg::axpy(w, row, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::gen_logistic;
    use crate::targets::fd::gradient_rel_error;
    use rand::Rng;

    #[test]
    fn gradient_matches_finite_differences() {
        let (data, _) = gen_logistic(20, 3, 11).unwrap();
        let mut rng = crate::rng::stream(1, crate::rng::Stream::Data);
        for prior in [Prior::Gaussian { variance: 10.0 }, Prior::Laplace { scale: 2.0 }] {
            let t = LogisticRegressionTarget::<f64>::from_dataset(&data, prior).unwrap();
            for _ in 0..100 {
                let q: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
                assert!(gradient_rel_error(&t, &q, 1e-5) < 1e-5);
            }
        }
    }

    #[test]
    fn posterior_mode_zeroes_the_gradient() {
        let (data, _) = gen_logistic(500, 4, 2).unwrap();
        let t = LogisticRegressionTarget::<f64>::from_dataset(&data, Prior::Gaussian { variance: 10.0 }).unwrap();
        let q = t.posterior_mode().unwrap();
        let mut g = [0.0; 4];
        t.gradient(&q, &mut g).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");
    }

    #[test]
    fn gradient_is_finite_for_extreme_coefficients() {
        let (data, _) = gen_logistic(50, 2, 3).unwrap();
        let t = LogisticRegressionTarget::<f64>::from_dataset(&data, Prior::Gaussian { variance: 1.0 }).unwrap();
        let mut g = [0.0; 2];
        t.gradient(&[800.0, -900.0], &mut g).unwrap();
        assert!(g.iter().all(|v| v.is_finite()));
        assert!(t.potential(&[800.0, -900.0]).is_finite());
    }

    #[test]
    fn minibatch_pieces_sum_to_full_gradient() {
        let (data, _) = gen_logistic(40, 4, 2).unwrap();
        let t = LogisticRegressionTarget::<f64>::from_dataset(&data, Prior::Gaussian { variance: 3.0 }).unwrap();
        let q = [0.3, -0.2, 0.5, 1.0];
        let mut full = [0.0; 4];
        t.gradient(&q, &mut full).unwrap();
        let mut parts = [0.0; 4];
        t.prior_gradient(&q, &mut parts);
        let rows: Vec<usize> = (0..40).collect();
        t.add_likelihood_gradient(&q, &rows[..17], 1.0, &mut parts);
        t.add_likelihood_gradient(&q, &rows[17..], 1.0, &mut parts);
        for (a, b) in full.iter().zip(&parts) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_binary_labels() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let err = LogisticRegressionTarget::new(x, vec![0.0, 2.0], Prior::Gaussian { variance: 1.0 });
        assert!(matches!(err, Err(Error::NonBinaryLabel { line: 2, .. })));
    }
}
