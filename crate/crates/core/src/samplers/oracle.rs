use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{stream, Stream};
use crate::scalar::Real;
use crate::targets::{DataTarget, TargetModel};

/// What one oracle call costs, for timing reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostClass {
    FullData,
    Surrogate,
    Minibatch,
}

impl CostClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CostClass::FullData => "full_data",
            CostClass::Surrogate => "surrogate",
            CostClass::Minibatch => "minibatch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full_data" => Some(CostClass::FullData),
            "surrogate" => Some(CostClass::Surrogate),
            "minibatch" => Some(CostClass::Minibatch),
            _ => None,
        }
    }
}

/// A source of (possibly approximate) potential gradients for the integrator.
pub trait GradientOracle<T: Real> {
    fn dim(&self) -> usize;

    /// Writes `∇̂U(q)` into `grad`.
    fn eval(&mut self, q: &[T], grad: &mut [T]) -> Result<()>;

    fn cost_class(&self) -> CostClass;
}

impl<T: Real, O: GradientOracle<T> + ?Sized> GradientOracle<T> for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&mut self, q: &[T], grad: &mut [T]) -> Result<()> {
        (**self).eval(q, grad)
    }
    fn cost_class(&self) -> CostClass {
        (**self).cost_class()
    }
}

impl<T: Real, O: GradientOracle<T> + ?Sized> GradientOracle<T> for Box<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&mut self, q: &[T], grad: &mut [T]) -> Result<()> {
        (**self).eval(q, grad)
    }
    fn cost_class(&self) -> CostClass {
        (**self).cost_class()
    }
}

/// The target's analytic gradient.
pub struct ExactOracle<'a, M: ?Sized> {
    target: &'a M,
}

impl<'a, M: ?Sized> ExactOracle<'a, M> {
    pub fn new(target: &'a M) -> Self {
        Self { target }
    }
}

impl<T: Real, M: TargetModel<T> + ?Sized> GradientOracle<T> for ExactOracle<'_, M> {
    fn dim(&self) -> usize {
        self.target.dim()
    }
    fn eval(&mut self, q: &[T], grad: &mut [T]) -> Result<()> {
        self.target.gradient(q, grad)
    }
    fn cost_class(&self) -> CostClass {
        CostClass::FullData
    }
}

/// `∇̂U ≡ 0`: trajectories become straight lines.
pub struct ZeroOracle {
    dim: usize,
}

impl ZeroOracle {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl<T: Real> GradientOracle<T> for ZeroOracle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&mut self, _q: &[T], grad: &mut [T]) -> Result<()> {
        grad.fill(T::zero());
        Ok(())
    }
    fn cost_class(&self) -> CostClass {
        CostClass::Surrogate
    }
}

/// Exact gradient plus a smooth deterministic field of norm at most `bound`:
/// `E_j(q) = bound/√d · sin(a_jᵀq + c_j)`.
pub struct PerturbedOracle<O> {
    inner: O,
    bound: f64,
    directions: Matrix<f64>,
    phases: Vec<f64>,
}

impl<O> PerturbedOracle<O> {
    pub fn new<T: Real>(inner: O, bound: f64, seed: u64) -> Self
    where
        O: GradientOracle<T>,
    {
        use rand::Rng;
        let d = inner.dim();
        let mut rng = stream(seed, Stream::Perturbation);
        let directions = Matrix::from_fn(d, d, |_, _| crate::rng::standard_normal::<f64, _>(&mut rng));
        let phases = (0..d).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        Self { inner, bound, directions, phases }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// The perturbation field alone.
    pub fn perturbation<T: Real>(&self, q: &[T], out: &mut [T]) {
        let d = q.len();
        let amp = self.bound / (d as f64).sqrt();
        for j in 0..d {
            let a = self.directions.row(j);
            let s: f64 = a.iter().zip(q).map(|(&a, &x)| a * x.as_f64()).sum();
            out[j] = T::lit(amp * (s + self.phases[j]).sin());
        }
    }
}

impl<T: Real, O: GradientOracle<T>> GradientOracle<T> for PerturbedOracle<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&mut self, q: &[T], grad: &mut [T]) -> Result<()> {
        self.inner.eval(q, grad)?;
        if self.bound == 0.0 {
            return Ok(());
        }
        let amp = T::lit(self.bound / (q.len() as f64).sqrt());
        for (j, g) in grad.iter_mut().enumerate() {
            let a = self.directions.row(j);
            let s: f64 = a.iter().zip(q).map(|(&a, &x)| a * x.as_f64()).sum();
            *g += amp * T::lit((s + self.phases[j]).sin());
        }
        Ok(())
    }
    fn cost_class(&self) -> CostClass {
        self.inner.cost_class()
    }
}

/// Paired positions and exact gradients collected during HMC.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet<T> {
    pub inputs: Matrix<T>,
    pub labels: Matrix<T>,
}

impl<T: Real> TrainingSet<T> {
    pub fn new(dim: usize) -> Self {
        Self { inputs: Matrix::zeros(0, dim), labels: Matrix::zeros(0, dim) }
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn push(&mut self, q: &[T], grad: &[T]) -> Result<()> {
        self.inputs.push_row(q)?;
        self.labels.push_row(grad)
    }

    /// Drop rows from `n` on.
    pub fn truncate(&mut self, n: usize) {
        self.inputs.truncate_rows(n);
        self.labels.truncate_rows(n);
    }

    /// Rows `0..n`.
    pub fn prefix(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        Self { inputs: self.inputs.select_rows(&idx), labels: self.labels.select_rows(&idx) }
    }
}

/// Wraps an oracle and records `(q, ∇U(q))` on every `collect_every`-th
/// successful call. Failed calls (out of support) are not recorded.
pub struct RecordingOracle<'s, T, O> {
    inner: O,
    sink: &'s mut TrainingSet<T>,
    collect_every: usize,
    calls: usize,
}

impl<'s, T: Real, O: GradientOracle<T>> RecordingOracle<'s, T, O> {
    pub fn new(inner: O, sink: &'s mut TrainingSet<T>, collect_every: usize) -> Self {
        Self { inner, sink, collect_every: collect_every.max(1), calls: 0 }
    }

    /// Rows recorded so far.
    pub fn recorded(&self) -> usize {
        self.sink.len()
    }

    /// Forget rows recorded after `mark`, e.g. those of a divergent trajectory.
    pub fn rollback(&mut self, mark: usize) {
        self.sink.truncate(mark);
    }
}

impl<T: Real, O: GradientOracle<T>> GradientOracle<T> for RecordingOracle<'_, T, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&mut self, q: &[T], grad: &mut [T]) -> Result<()> {
        self.inner.eval(q, grad)?;
        if self.calls % self.collect_every == 0 && grad.iter().all(|g| g.is_finite()) {
            self.sink.push(q, grad)?;
        }
        self.calls += 1;
        Ok(())
    }
    fn cost_class(&self) -> CostClass {
        self.inner.cost_class()
    }
}

/// Unbiased minibatch gradient `-∇log prior + (n/b) Σ_batch -∇log π(x_i|q)`,
/// sampling rows without replacement from its own stream. With `b ≥ n` it
/// delegates to the full gradient.
pub struct MinibatchOracle<'a, M: ?Sized> {
    target: &'a M,
    batch: usize,
    rng: ChaCha8Rng,
}

impl<'a, M: ?Sized> MinibatchOracle<'a, M> {
    pub fn new(target: &'a M, batch: usize, seed: u64) -> Result<Self> {
        if batch == 0 {
            return Err(Error::InvalidConfig("minibatch size must be positive".into()));
        }
        Ok(Self { target, batch, rng: stream(seed, Stream::Minibatch) })
    }
}

impl<T: Real, M: DataTarget<T> + ?Sized> GradientOracle<T> for MinibatchOracle<'_, M> {
    fn dim(&self) -> usize {
        self.target.dim()
    }
    fn eval(&mut self, q: &[T], grad: &mut [T]) -> Result<()> {
        let n = self.target.n_obs();
        if self.batch >= n {
            return self.target.gradient(q, grad);
        }
        let rows = index::sample(&mut self.rng, n, self.batch).into_vec();
        self.target.prior_gradient(q, grad);
        let scale = T::lit(n as f64 / self.batch as f64);
        self.target.add_likelihood_gradient(q, &rows, scale, grad);
        Ok(())
    }
    fn cost_class(&self) -> CostClass {
        if self.batch >= self.target.n_obs() {
            CostClass::FullData
        } else {
            CostClass::Minibatch
        }
    }
}
