//! Gaussian-process surrogate of the potential with a squared-exponential
//! kernel; the gradient of its predictive mean serves as a gradient oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix, SpdFactor};
use crate::samplers::{Chain, CostClass, ExactOracle, GradientOracle, HmcConfig, PhaseTimings, Sampler};
use crate::scalar::Real;
use crate::targets::TargetModel;

const JITTER: f64 = 1e-8;

/// Log-spaced hyperparameter grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub length_scales: Vec<f64>,
    pub noise_variances: Vec<f64>,
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

impl Default for GridSpec {
    /// 10 length scales in `[0.1, 100]`, 6 noise variances in `[1e-6, 1]`.
    fn default() -> Self {
        Self { length_scales: log_space(0.1, 100.0, 10), noise_variances: log_space(1e-6, 1.0, 6) }
    }
}

/// Log marginal likelihood at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub length_scale: f64,
    pub noise_variance: f64,
    /// `-inf` when the covariance could not be factored.
    pub log_marginal_likelihood: f64,
}

/// Fitted surrogate of `U`. Targets are centred and scaled before fitting,
/// and the mean is mapped back to the original units.
#[derive(Clone, Debug)]
pub struct GpSurrogate<T> {
    train_q: Matrix<T>,
    alpha: Vec<T>,
    length_scale: T,
    noise_variance: T,
    y_mean: T,
    y_sd: T,
    pub grid: Vec<GridPoint>,
}

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn factor_with_retry<T: Real>(k: &Matrix<T>) -> Result<SpdFactor<T>> {
    SpdFactor::with_jitter(k, T::lit(JITTER))
}

impl<T: Real> GpSurrogate<T> {
    /// Grid-search maximum marginal likelihood; each candidate costs one
    /// `O(N³)` factorization.
    pub fn fit(train_q: Matrix<T>, train_u: &[T], grid: &GridSpec) -> Result<Self> {
        let n = train_q.rows();
        if n < 2 {
            return Err(Error::InvalidConfig("GP surrogate needs at least two training points".into()));
        }
        crate::error::check_dim(n, train_u.len())?;
        if grid.length_scales.is_empty() || grid.noise_variances.is_empty() {
            return Err(Error::InvalidConfig("empty hyperparameter grid".into()));
        }
        let nf = T::lit(n as f64);
        let y_mean = train_u.iter().copied().sum::<T>() / nf;
        let var = train_u.iter().map(|&u| (u - y_mean) * (u - y_mean)).sum::<T>() / (nf - T::one());
        let y_sd = if var > T::zero() { var.sqrt() } else { T::one() };
        let y: Vec<T> = train_u.iter().map(|&u| (u - y_mean) / y_sd).collect();
        let d2 = Matrix::from_fn(n, n, |i, j| if i < j { sq_dist(train_q.row(i), train_q.row(j)) } else { T::zero() });

        let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let mut points = Vec::new();
        let mut best: Option<(f64, T, T, Vec<T>)> = None;
        for &l in &grid.length_scales {
            let inv = -0.5 / (l * l);
            let base = Matrix::from_fn(n, n, |i, j| {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                if a == b {
                    T::one()
                } else {
                    (T::lit(inv) * d2.get(a, b)).exp()
                }
            });
            for &s2 in &grid.noise_variances {
                let mut k = base.clone();
                for i in 0..n {
                    k.set(i, i, T::one() + T::lit(s2));
                }
                let lml = match factor_with_retry(&k) {
                    Ok(f) => {
                        let alpha = f.solve(&y);
                        let v = -0.5 * dot(&y, &alpha).as_f64() - 0.5 * f.log_det().as_f64() - n as f64 * half_log_2pi;
                        if v.is_finite() && best.as_ref().is_none_or(|b| v > b.0) {
                            best = Some((v, T::lit(l), T::lit(s2), alpha));
                        }
                        v
                    }
                    Err(_) => f64::NEG_INFINITY,
                };
                points.push(GridPoint { length_scale: l, noise_variance: s2, log_marginal_likelihood: lml });
            }
        }
        let (_, length_scale, noise_variance, alpha) = best.ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { train_q, alpha, length_scale, noise_variance, y_mean, y_sd, grid: points })
    }

    /// Fit at fixed hyperparameters.
    pub fn fit_fixed(train_q: Matrix<T>, train_u: &[T], length_scale: f64, noise_variance: f64) -> Result<Self> {
        Self::fit(train_q, train_u, &GridSpec { length_scales: vec![length_scale], noise_variances: vec![noise_variance] })
    }

    pub fn length_scale(&self) -> T {
        self.length_scale
    }

    pub fn noise_variance(&self) -> T {
        self.noise_variance
    }

    pub fn dim(&self) -> usize {
        self.train_q.cols()
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.grid.iter().map(|p| p.log_marginal_likelihood).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Predictive mean of `U` at `q`.
    pub fn mean(&self, q: &[T]) -> T {
        let inv = T::lit(-0.5) / (self.length_scale * self.length_scale);
        let s: T = (0..self.train_q.rows()).map(|i| self.alpha[i] * (inv * sq_dist(q, self.train_q.row(i))).exp()).sum();
        self.y_mean + self.y_sd * s
    }

    /// `∂/∂q* K(q*, X) α`, scaled back to the units of `U`:
    /// `Σ_i α_i k(q*, x_i) (x_i − q*) / l²`.
    pub fn gradient_of_mean(&self, q: &[T], out: &mut [T]) {
        let l2 = self.length_scale * self.length_scale;
        let inv = T::lit(-0.5) / l2;
        out.fill(T::zero());
        for i in 0..self.train_q.rows() {
            let x = self.train_q.row(i);
            let w = self.alpha[i] * (inv * sq_dist(q, x)).exp();
            for ((o, &xi), &qi) in out.iter_mut().zip(x).zip(q) {
                *o += w * (xi - qi);
            }
        }
        let c = self.y_sd / l2;
        out.iter_mut().for_each(|o| *o *= c);
    }
}

/// Gradient oracle from a fitted surrogate.
pub struct GpOracle<'a, T> {
    gp: &'a GpSurrogate<T>,
}

impl<'a, T> GpOracle<'a, T> {
    pub fn new(gp: &'a GpSurrogate<T>) -> Self {
        Self { gp }
    }
}

impl<T: Real> GradientOracle<T> for GpOracle<'_, T> {
    fn dim(&self) -> usize {
        self.gp.dim()
    }
    fn eval(&mut self, q: &[T], grad: &mut [T]) -> Result<()> {
        self.gp.gradient_of_mean(q, grad);
        Ok(())
    }
    fn cost_class(&self) -> CostClass {
        CostClass::Surrogate
    }
}

/// Run exact HMC, appending to `chain`, until `n` accepted moves have been
/// made, and return those positions with their potentials. Rejections would
/// repeat a point, so they are skipped.
pub fn collect_posterior_points<T, M>(
    target: &M,
    sampler: &mut Sampler<T>,
    chain: &mut Chain<T>,
    n: usize,
    max_iterations: usize,
) -> Result<(Matrix<T>, Vec<T>)>
where
    T: Real,
    M: TargetModel<T> + ?Sized,
{
    let mut x = Matrix::zeros(0, target.dim());
    let mut u = Vec::with_capacity(n);
    let mut exact = ExactOracle::new(target);
    let mut used = 0;
    while u.len() < n {
        if used == max_iterations {
            return Err(Error::InvalidConfig(format!(
                "only {} of {n} distinct training points after {max_iterations} iterations",
                u.len()
            )));
        }
        let o = sampler.step(target, &mut exact);
        used += 1;
        chain.push(sampler.position(), o.accepted, o.delta_h, o.divergent, CostClass::FullData);
        if o.accepted {
            x.push_row(sampler.position())?;
            u.push(sampler.potential());
        }
    }
    Ok((x, u))
}

/// What a surrogate run produced.
#[derive(Clone, Debug)]
pub struct GpRun<T> {
    /// Collection iterations (exact) followed by `n_iterations` surrogate draws.
    pub chain: Chain<T>,
    pub surrogate: GpSurrogate<T>,
}

/// Exact HMC until `n_train` distinct points, a grid-searched fit, then
/// `cfg.n_iterations` draws with the gradient of the predictive mean.
pub fn run_gp_surrogate_hmc<T, M>(target: &M, cfg: &HmcConfig, n_train: usize, grid: &GridSpec, init: Vec<T>) -> Result<GpRun<T>>
where
    T: Real,
    M: TargetModel<T> + ?Sized,
{
    cfg.validate()?;
    let t0 = std::time::Instant::now();
    let mut sampler = Sampler::new(target, init, cfg)?;
    let mut chain = Chain::new(target.dim());
    let (x, u) = collect_posterior_points(target, &mut sampler, &mut chain, n_train, 50 * n_train.max(1))?;
    let collection = t0.elapsed().as_secs_f64();
    let t1 = std::time::Instant::now();
    let surrogate = GpSurrogate::fit(x, &u, grid)?;
    let training = t1.elapsed().as_secs_f64();
    let t2 = std::time::Instant::now();
    let mut oracle = GpOracle::new(&surrogate);
    for _ in 0..cfg.n_iterations {
        let o = sampler.step(target, &mut oracle);
        chain.push(sampler.position(), o.accepted, o.delta_h, o.divergent, CostClass::Surrogate);
    }
    chain.counters = sampler.counters;
    chain.timings = Some(PhaseTimings { collection, training, sampling: t2.elapsed().as_secs_f64() });
    Ok(GpRun { chain, surrogate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream, Stream};

    fn quad_data(n: usize, d: usize, seed: u64) -> (Matrix<f64>, Vec<f64>) {
        let mut rng = stream(seed, Stream::Data);
        let x = Matrix::from_fn(n, d, |_, _| standard_normal::<f64, _>(&mut rng));
        let u = (0..n).map(|i| 0.5 * dot(x.row(i), x.row(i))).collect();
        (x, u)
    }

    #[test]
    fn surrogate_hmc_on_a_gaussian() {
        let t = crate::targets::StandardGaussianTarget::new(2);
        let cfg = HmcConfig { leapfrog_steps: 10, step_size: 0.2, n_iterations: 300, seed: 3 };
        let run = run_gp_surrogate_hmc::<f64, _>(&t, &cfg, 60, &GridSpec::default(), vec![0.0, 0.0]).unwrap();
        assert!(run.chain.len() >= 360);
        assert_eq!(run.chain.oracle.iter().filter(|&&c| c == CostClass::Surrogate).count(), 300);
        assert!(run.chain.acceptance_for(CostClass::Surrogate) > 0.8);
    }

    #[test]
    fn far_apart_points_interpolate() {
        let x = Matrix::from_rows(&[vec![0.0f64, 0.0], vec![50.0, 50.0]]).unwrap();
        let g = GpSurrogate::fit_fixed(x, &[3.0, -1.0], 1.0, 1e-6).unwrap();
        assert!((g.mean(&[0.0, 0.0]) - 3.0).abs() < 1e-4);
        assert!((g.mean(&[50.0, 50.0]) + 1.0).abs() < 1e-4);
    }

    #[test]
    fn held_out_quadratic() {
        let (x, u) = quad_data(200, 2, 1);
        let g = GpSurrogate::fit(x, &u, &GridSpec::default()).unwrap();
        let (xt, ut) = quad_data(200, 2, 2);
        let mse = (0..200).map(|i| (g.mean(xt.row(i)) - ut[i]).powi(2)).sum::<f64>() / 200.0;
        let rms = (ut.iter().map(|v| v * v).sum::<f64>() / 200.0).sqrt();
        assert!(mse.sqrt() < 0.05 * rms, "rmse {} vs rms {rms}", mse.sqrt());
    }

    #[test]
    fn chosen_point_is_the_grid_argmax() {
        let (x, u) = quad_data(60, 2, 3);
        let g = GpSurrogate::fit(x, &u, &GridSpec::default()).unwrap();
        let best = g.log_marginal_likelihood();
        let at = g
            .grid
            .iter()
            .find(|p| p.length_scale == g.length_scale() && p.noise_variance == g.noise_variance())
            .unwrap();
        assert_eq!(at.log_marginal_likelihood, best);
        assert!(g.grid.iter().all(|p| p.log_marginal_likelihood <= best));
        assert_eq!(g.grid.len(), 60);
    }

    #[test]
    fn symmetric_points_give_zero_axis_gradient() {
        let x = Matrix::from_rows(&[vec![-1.0f64, 0.3], vec![1.0, 0.3]]).unwrap();
        let g = GpSurrogate::fit_fixed(x, &[2.0, 2.0], 1.5, 1e-4).unwrap();
        let mut out = [0.0; 2];
        g.gradient_of_mean(&[0.0, 0.7], &mut out);
        assert!(out[0].abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, u) = quad_data(80, 3, 4);
        let g = GpSurrogate::fit(x, &u, &GridSpec::default()).unwrap();
        let mut rng = stream(5, Stream::Data);
        for _ in 0..20 {
            let q: Vec<f64> = (0..3).map(|_| standard_normal::<f64, _>(&mut rng)).collect();
            let mut an = [0.0; 3];
            g.gradient_of_mean(&q, &mut an);
            let fd = crate::numdiff::central_gradient(|p| g.mean(p), &q, 1e-5);
            for k in 0..3 {
                assert!((an[k] - fd[k]).abs() < 1e-6 * an[k].abs().max(1.0), "{an:?} {fd:?}");
            }
        }
    }
}
