use super::{assert_dim, TargetModel};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// GARCH(m, r) posterior over `θ = (α₀, α₁..α_m, β₁..β_r)` with truncated
/// zero-mean Gaussian priors.
///
/// The likelihood conditions on the first `max(m, r)` observations. Variances
/// before that point are fixed to the sample variance of `y`.
#[derive(Clone, Debug)]
pub struct GarchTarget<T> {
    y2: Vec<T>,
    m: usize,
    r: usize,
    prior_sd: T,
    presample: T,
}

impl<T: Real> GarchTarget<T> {
    pub fn new(y: &[T], m: usize, r: usize, prior_sd: T) -> Result<Self> {
        let p = m.max(r);
        if m == 0 {
            return Err(Error::InvalidConfig("garch needs ARCH order m >= 1".into()));
        }
        if y.len() <= p + 1 {
            return Err(Error::InvalidConfig(format!(
                "garch needs more than {} observations, got {}",
                p + 1,
                y.len()
            )));
        }
        if !(prior_sd > T::zero()) {
            return Err(Error::InvalidConfig("prior_sd must be positive".into()));
        }
        let n = T::lit(y.len() as f64);
        let mean = y.iter().copied().sum::<T>() / n;
        let var = y.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (n - T::one());
        Ok(Self { y2: y.iter().map(|&v| v * v).collect(), m, r, prior_sd, presample: var })
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.m, self.r)
    }

    pub fn n_obs(&self) -> usize {
        self.y2.len()
    }

    /// Sample variance of the series, also used as the pre-sample `σ²`.
    pub fn sample_variance(&self) -> T {
        self.presample
    }

    fn offset(&self) -> usize {
        self.m.max(self.r)
    }

    /// `σ_t²` for every `t`; entries before `max(m, r)` hold the pre-sample value.
    pub fn variance_recursion(&self, params: &[T]) -> Result<Vec<T>> {
        assert_dim(self.dim(), params.len());
        if !self.in_support(params) {
            return Err(Error::OutOfSupport);
        }
        let (alpha, beta) = params.split_at(self.m + 1);
        let p = self.offset();
        let mut s2 = vec![self.presample; self.y2.len()];
        for t in p..s2.len() {
            let mut v = alpha[0];
            for j in 1..=self.m {
                v += alpha[j] * self.y2[t - j];
            }
            for j in 1..=self.r {
                v += beta[j - 1] * s2[t - j];
            }
            s2[t] = v;
        }
        Ok(s2)
    }

    fn prior_potential(&self, q: &[T]) -> T {
        let inv = T::lit(0.5) / (self.prior_sd * self.prior_sd);
        q.iter().map(|&x| x * x * inv).sum()
    }
}

impl<T: Real> TargetModel<T> for GarchTarget<T> {
    fn dim(&self) -> usize {
        1 + self.m + self.r
    }

    fn in_support(&self, q: &[T]) -> bool {
        if q.iter().any(|v| !v.is_finite()) || !(q[0] > T::zero()) {
            return false;
        }
        if q[1..].iter().any(|&v| v < T::zero()) {
            return false;
        }
        q[1..].iter().copied().sum::<T>() < T::one()
    }

    fn potential(&self, q: &[T]) -> T {
        assert_dim(self.dim(), q.len());
        let Ok(s2) = self.variance_recursion(q) else {
            return T::infinity();
        };
        let half = T::lit(0.5);
        let mut u = self.prior_potential(q);
        for t in self.offset()..s2.len() {
            u += half * (s2[t].ln() + self.y2[t] / s2[t]);
        }
        u
    }

    fn gradient(&self, q: &[T], grad: &mut [T]) -> Result<()> {
        let d = self.dim();
        assert_dim(d, q.len());
        let s2 = self.variance_recursion(q)?;
        let beta = &q[self.m + 1..];
        let p = self.offset();
        let n = s2.len();
        // ds[t*d + k] = ∂σ_t²/∂θ_k, zero before the offset
        let mut ds = vec![T::zero(); n * d];
        let inv_var = T::one() / (self.prior_sd * self.prior_sd);
        for (g, &x) in grad.iter_mut().zip(q) {
            *g = x * inv_var;
        }
        let half = T::lit(0.5);
        for t in p..n {
            let (head, tail) = ds.split_at_mut(t * d);
            let row = &mut tail[..d];
            row[0] = T::one();
            for j in 1..=self.m {
                row[j] = self.y2[t - j];
            }
            for j in 1..=self.r {
                // σ²_{t-j} enters directly, pre-sample values included
                row[self.m + j] = s2[t - j];
                if t - j >= p {
                    let prev = &head[(t - j) * d..(t - j + 1) * d];
                    for k in 0..d {
                        row[k] += beta[j - 1] * prev[k];
                    }
                }
            }
            let w = half * (T::one() - self.y2[t] / s2[t]) / s2[t];
            for k in 0..d {
                grad[k] += w * row[k];
            }
        }
        Ok(())
    }

    fn name(&self) -> &str {
        "garch"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::gen_garch;
    use crate::targets::fd::gradient_rel_error;
    use rand::Rng;

    fn toy() -> GarchTarget<f64> {
        let y = gen_garch(200, &[0.1, 0.2], &[0.3], 1).unwrap();
        GarchTarget::new(&y, 1, 1, 10.0).unwrap()
    }

    #[test]
    fn one_step_by_hand() {
        // sample variance of (1, -1, 0) is exactly 1, so σ²_0 = 1 and y_0 = 1
        let t = GarchTarget::<f64>::new(&[1.0, -1.0, 0.0], 1, 1, 10.0).unwrap();
        let s2 = t.variance_recursion(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(s2[0], 1.0);
        assert!((s2[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn degenerate_order_is_constant() {
        let t = toy();
        let s2 = t.variance_recursion(&[0.7, 0.0, 0.0]).unwrap();
        assert!(s2[1..].iter().all(|&v| v == 0.7));
    }

    #[test]
    fn matches_literal_loop_for_garch21() {
        let y = gen_garch(100, &[0.2, 0.15, 0.1], &[0.5], 9).unwrap();
        let t = GarchTarget::new(&y, 2, 1, 10.0).unwrap();
        let th = [0.2, 0.15, 0.1, 0.5];
        let got = t.variance_recursion(&th).unwrap();
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let pre = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let mut s = vec![pre, pre];
        for i in 2..y.len() {
            let v = th[0] + th[1] * y[i - 1].powi(2) + th[2] * y[i - 2].powi(2) + th[3] * s[i - 1];
            s.push(v);
        }
        for (a, b) in got.iter().zip(&s) {
            assert!((a - b).abs() <= 1e-14 * b.abs());
        }
        assert!(got.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn potential_matches_density_product() {
        let y = gen_garch(200, &[0.1, 0.2], &[0.3], 1).unwrap();
        let t = GarchTarget::new(&y, 1, 1, 10.0).unwrap();
        let th = [0.1, 0.2, 0.3];
        let s2 = t.variance_recursion(&th).unwrap();
        let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        use statrs::distribution::Continuous;
        let mut log_lik = 0.0;
        for i in 1..y.len() {
            let sd = s2[i].sqrt();
            log_lik += normal.ln_pdf(y[i] / sd) - sd.ln();
        }
        let log_prior: f64 = th.iter().map(|x| -x * x / 200.0).sum();
        // dropped constant: (T-1)/2 log 2π
        let c = (y.len() - 1) as f64 * 0.5 * (2.0 * std::f64::consts::PI).ln();
        let u = t.potential(&th);
        assert!((u - (-(log_lik + log_prior) - c)).abs() < 1e-9 * u.abs().max(1.0));
    }

    #[test]
    fn infinite_outside_stationarity() {
        let t = toy();
        assert_eq!(t.potential(&[0.1, 0.6, 0.5]), f64::INFINITY);
        assert_eq!(t.potential(&[-0.1, 0.2, 0.3]), f64::INFINITY);
        assert_eq!(t.potential(&[0.1, -0.01, 0.3]), f64::INFINITY);
        assert!(t.potential(&[0.1, 0.5, 0.49]).is_finite());
        let mut g = [0.0; 3];
        assert!(matches!(t.gradient(&[0.1, 0.6, 0.5], &mut g), Err(Error::OutOfSupport)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let y = gen_garch(300, &[0.2, 0.15, 0.1], &[0.5], 2).unwrap();
        let t = GarchTarget::new(&y, 2, 1, 10.0).unwrap();
        let mut rng = crate::rng::stream(5, crate::rng::Stream::Data);
        let mut checked = 0;
        while checked < 100 {
            let q = [
                rng.random_range(0.05..0.5),
                rng.random_range(0.01..0.4),
                rng.random_range(0.01..0.3),
                rng.random_range(0.01..0.6),
            ];
            if !t.in_support(&q) {
                continue;
            }
            assert!(gradient_rel_error(&t, &q, 1e-6) < 1e-5);
            checked += 1;
        }
    }
}
