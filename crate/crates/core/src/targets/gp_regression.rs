use serde::{Deserialize, Serialize};

use super::{assert_dim, TargetModel};
use crate::data_io::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SpdFactor};
use crate::scalar::Real;

/// Matérn kernel with `ν = 3/2` and unit amplitude: `(1 + √3 d/l) exp(-√3 d/l)`.
pub fn matern32<T: Real>(d: T, l: T) -> T {
    let r = T::lit(3.0f64.sqrt()) * d / l;
    (T::one() + r) * (-r).exp()
}

/// Lognormal prior on a positive hyperparameter, i.e. a Gaussian on its log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNormalPrior {
    pub location: f64,
    pub scale: f64,
}

impl Default for LogNormalPrior {
    fn default() -> Self {
        Self { location: 0.0, scale: 3.0 }
    }
}

impl LogNormalPrior {
    fn potential<T: Real>(&self, log_x: T) -> T {
        let z = (log_x - T::lit(self.location)) / T::lit(self.scale);
        T::lit(0.5) * z * z
    }

    fn gradient<T: Real>(&self, log_x: T) -> T {
        (log_x - T::lit(self.location)) / T::lit(self.scale * self.scale)
    }
}

/// GP regression hyperparameter posterior over `θ = (log l, log σ²)` with
/// `Y ~ N(0, K_l(X, X) + σ² I)`.
#[derive(Clone, Debug)]
pub struct GpRegressionTarget<T> {
    n: usize,
    /// `√3 · ‖x_i − x_j‖`, full symmetric n×n
    scaled_dist: Vec<T>,
    y: Vec<T>,
    prior_l: LogNormalPrior,
    prior_sigma2: LogNormalPrior,
}

impl<T: Real> GpRegressionTarget<T> {
    pub fn new(x: &Matrix<T>, y: Vec<T>, prior_l: LogNormalPrior, prior_sigma2: LogNormalPrior) -> Result<Self> {
        let n = x.rows();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.len() });
        }
        for p in [prior_l, prior_sigma2] {
            if !(p.scale > 0.0) {
                return Err(Error::InvalidConfig("lognormal prior scale must be positive".into()));
            }
        }
        let s3 = T::lit(3.0f64.sqrt());
        let mut scaled_dist = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..i {
                let d2: T = x.row(i).iter().zip(x.row(j)).map(|(&a, &b)| (a - b) * (a - b)).sum();
                let v = s3 * d2.sqrt();
                scaled_dist[i * n + j] = v;
                scaled_dist[j * n + i] = v;
            }
        }
        Ok(Self { n, scaled_dist, y, prior_l, prior_sigma2 })
    }

    pub fn from_dataset(data: &Dataset, prior_l: LogNormalPrior, prior_sigma2: LogNormalPrior) -> Result<Self> {
        Self::new(&data.x.cast(), data.y.iter().map(|&v| T::lit(v)).collect(), prior_l, prior_sigma2)
    }

    pub fn n_obs(&self) -> usize {
        self.n
    }

    fn covariance(&self, l: T, sigma2: T) -> Matrix<T> {
        let n = self.n;
        let inv_l = T::one() / l;
        Matrix::from_fn(n, n, |i, j| {
            let r = self.scaled_dist[i * n + j] * inv_l;
            let k = (T::one() + r) * (-r).exp();
            if i == j {
                k + sigma2
            } else {
                k
            }
        })
    }

    /// `½ Yᵀ(K+σ²I)⁻¹Y + ½ log det(K+σ²I)` in natural parameters, `None` when
    /// the matrix is not numerically positive definite.
    pub fn data_potential(&self, l: T, sigma2: T) -> Option<T> {
        let f = SpdFactor::new(&self.covariance(l, sigma2)).ok()?;
        let alpha = f.solve(&self.y);
        let half = T::lit(0.5);
        Some(half * crate::linalg::dot(&self.y, &alpha) + half * f.log_det())
    }

    fn prior_potential(&self, q: &[T]) -> T {
        self.prior_l.potential(q[0]) + self.prior_sigma2.potential(q[1])
    }
}

impl<T: Real> TargetModel<T> for GpRegressionTarget<T> {
    fn dim(&self) -> usize {
        2
    }

    fn in_support(&self, q: &[T]) -> bool {
        q.iter().all(|v| v.is_finite())
    }

    fn potential(&self, q: &[T]) -> T {
        assert_dim(2, q.len());
        if !self.in_support(q) {
            return T::infinity();
        }
        match self.data_potential(q[0].exp(), q[1].exp()) {
            Some(u) => u + self.prior_potential(q),
            None => T::infinity(),
        }
    }

    fn gradient(&self, q: &[T], grad: &mut [T]) -> Result<()> {
        assert_dim(2, q.len());
        if !self.in_support(q) {
            return Err(Error::OutOfSupport);
        }
        let n = self.n;
        let (l, sigma2) = (q[0].exp(), q[1].exp());
        let inv_l = T::one() / l;
        // K and ∂K/∂log l = r² e^{-r} in one sweep
        let mut k = Matrix::zeros(n, n);
        let mut dk = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..i {
                let r = self.scaled_dist[i * n + j] * inv_l;
                let e = (-r).exp();
                let kv = (T::one() + r) * e;
                k.set(i, j, kv);
                k.set(j, i, kv);
                let dv = r * r * e;
                dk[i * n + j] = dv;
                dk[j * n + i] = dv;
            }
            k.set(i, i, T::one() + sigma2);
        }
        let f = SpdFactor::new_with_inverse(&k)?;
        let inv = f.inverse().expect("inverse requested");
        let alpha = f.solve(&self.y);
        // ½ tr(K⁻¹ ∂K) − ½ αᵀ ∂K α for both hyperparameters
        let mut tr_l = T::zero();
        let mut quad_l = T::zero();
        let mut tr_inv = T::zero();
        for i in 0..n {
            let row_inv = &inv[i * n..(i + 1) * n];
            let row_dk = &dk[i * n..(i + 1) * n];
            let mut s_tr = T::zero();
            let mut s_q = T::zero();
            for j in 0..n {
                s_tr += row_inv[j] * row_dk[j];
                s_q += row_dk[j] * alpha[j];
            }
            tr_l += s_tr;
            quad_l += alpha[i] * s_q;
            tr_inv += row_inv[i];
        }
        let half = T::lit(0.5);
        let a2: T = crate::linalg::dot(&alpha, &alpha);
        grad[0] = half * (tr_l - quad_l) + self.prior_l.gradient(q[0]);
        grad[1] = half * sigma2 * (tr_inv - a2) + self.prior_sigma2.gradient(q[1]);
        Ok(())
    }

    fn name(&self) -> &str {
        "gp_regression"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::gen_gp_regression;
    use crate::targets::fd::gradient_rel_error;
    use rand::Rng;

    #[test]
    fn matern_closed_form() {
        assert_eq!(matern32(0.0, 2.0), 1.0);
        let s3 = 3.0f64.sqrt();
        let want = (1.0 + s3) * (-s3).exp();
        assert!((matern32(1.7, 1.7) - want).abs() < 1e-15);
    }

    #[test]
    fn single_point_data_term() {
        let x = Matrix::from_rows(&[vec![0.3, 0.1]]).unwrap();
        let prior = LogNormalPrior { location: 0.5, scale: 2.0 };
        let t = GpRegressionTarget::new(&x, vec![0.0], prior, prior).unwrap();
        assert_eq!(t.data_potential(1.0, 0.0), Some(0.0));
        let q = [0.0, 0.0];
        // σ² = e⁰ = 1 here, so log det = log 2
        let u = t.potential(&q);
        let want = 0.5 * 2.0f64.ln() + 2.0 * 0.5 * (0.5f64 / 2.0).powi(2);
        assert!((u - want).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = gen_gp_regression(10, 2, 0.3, 4).unwrap();
        let t = GpRegressionTarget::<f64>::from_dataset(&data, LogNormalPrior::default(), LogNormalPrior::default()).unwrap();
        assert!(gradient_rel_error(&t, &[0.0, 0.0], 1e-5) < 1e-5);
        let mut rng = crate::rng::stream(2, crate::rng::Stream::Data);
        for _ in 0..100 {
            let q = [rng.random_range(-1.5..1.5), rng.random_range(-4.0..1.0)];
            assert!(gradient_rel_error(&t, &q, 1e-5) < 1e-5);
        }
    }

    #[test]
    fn permutation_invariant() {
        let data = gen_gp_regression(25, 3, 0.2, 8).unwrap();
        let p = LogNormalPrior::default();
        let t = GpRegressionTarget::<f64>::from_dataset(&data, p, p).unwrap();
        let perm: Vec<usize> = (0..25).map(|i| (i * 7 + 3) % 25).collect();
        let xp = data.x.select_rows(&perm);
        let yp = perm.iter().map(|&i| data.y[i]).collect();
        let tp = GpRegressionTarget::new(&xp, yp, p, p).unwrap();
        for q in [[0.0, 0.0], [0.4, -2.0], [-0.7, -5.0]] {
            let (a, b) = (t.potential(&q), tp.potential(&q));
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }
}
