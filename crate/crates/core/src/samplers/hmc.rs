use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chain::{Chain, Counters, PhaseTimings};
use super::leapfrog::{leapfrog, leapfrog_with_kick, Trajectory};
use super::oracle::GradientOracle;
use crate::error::{Error, Result};
use crate::rng::{standard_normal, stream, stream_raw, uniform01, Stream};
use crate::scalar::Real;
use crate::targets::TargetModel;

/// Trajectories with `|ΔH|` above this are rejected as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub leapfrog_steps: usize,
    pub step_size: f64,
    pub n_iterations: usize,
    pub seed: u64,
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.leapfrog_steps == 0 {
            return Err(Error::InvalidConfig("leapfrog_steps must be positive".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig("step_size must be positive".into()));
        }
        if self.n_iterations == 0 {
            return Err(Error::InvalidConfig("n_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Result of one transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub delta_h: f64,
    pub divergent: bool,
}

/// Chain state: current position, its cached exact potential, and the
/// momentum and Metropolis streams.
#[derive(Clone, Debug)]
pub struct Sampler<T> {
    steps: usize,
    eps: T,
    q: Vec<T>,
    u: T,
    momentum: ChaCha8Rng,
    metropolis: ChaCha8Rng,
    p: Vec<T>,
    q_new: Vec<T>,
    grad: Vec<T>,
    pub counters: Counters,
}

impl<T: Real> Sampler<T> {
    pub fn new<M: TargetModel<T> + ?Sized>(target: &M, init: Vec<T>, cfg: &HmcConfig) -> Result<Self> {
        cfg.validate()?;
        crate::error::check_dim(target.dim(), init.len())?;
        if !target.in_support(&init) {
            return Err(Error::OutOfSupport);
        }
        let u = target.potential(&init);
        if !u.is_finite() {
            return Err(Error::OutOfSupport);
        }
        let d = init.len();
        Ok(Self {
            steps: cfg.leapfrog_steps,
            eps: T::lit(cfg.step_size),
            q: init,
            u,
            momentum: stream(cfg.seed, Stream::Momentum),
            metropolis: stream(cfg.seed, Stream::Metropolis),
            p: vec![T::zero(); d],
            q_new: vec![T::zero(); d],
            grad: vec![T::zero(); d],
            counters: Counters { potential_evals: 1, ..Counters::default() },
        })
    }

    /// Swap in fresh momentum and Metropolis streams, e.g. for probe runs.
    pub fn reseed(&mut self, seed: u64, momentum_id: u64, metropolis_id: u64) {
        self.momentum = stream_raw(seed, momentum_id);
        self.metropolis = stream_raw(seed, metropolis_id);
    }

    pub fn position(&self) -> &[T] {
        &self.q
    }

    pub fn potential(&self) -> T {
        self.u
    }

    pub fn leapfrog_steps(&self) -> usize {
        self.steps
    }

    pub fn step_size(&self) -> T {
        self.eps
    }

    /// One HMC transition with leapfrog under `oracle` and a Metropolis test
    /// on the exact potential.
    pub fn step<M, O>(&mut self, target: &M, oracle: &mut O) -> StepOutcome
    where
        M: TargetModel<T> + ?Sized,
        O: GradientOracle<T> + ?Sized,
    {
        self.transition(target, oracle, true, |o, q, p, l, e, g| leapfrog(o, q, p, l, e, g))
    }

    /// Transition with a custom momentum update inside leapfrog. With
    /// `metropolis = false` every finite in-support proposal is taken and the
    /// exact potential is never evaluated.
    pub fn step_with_kick<M, O, K>(&mut self, target: &M, oracle: &mut O, metropolis: bool, kick: K) -> StepOutcome
    where
        M: TargetModel<T> + ?Sized,
        O: GradientOracle<T> + ?Sized,
        K: FnMut(&mut [T], &[T], T),
    {
        let mut kick = Some(kick);
        self.transition(target, oracle, metropolis, move |o, q, p, l, e, g| {
            leapfrog_with_kick(o, q, p, l, e, g, kick.take().expect("one trajectory per transition"))
        })
    }

    fn transition<M, O, I>(&mut self, target: &M, oracle: &mut O, metropolis: bool, integrate: I) -> StepOutcome
    where
        M: TargetModel<T> + ?Sized,
        O: GradientOracle<T> + ?Sized,
        I: FnOnce(&mut O, &mut [T], &mut [T], usize, T, &mut [T]) -> Trajectory,
    {
        for p in self.p.iter_mut() {
            *p = standard_normal(&mut self.momentum);
        }
        // drawn every iteration so the stream stays aligned across outcomes
        let uniform = uniform01(&mut self.metropolis);
        let half = T::lit(0.5);
        let k0 = half * crate::linalg::dot(&self.p, &self.p);
        self.q_new.copy_from_slice(&self.q);
        let tr = integrate(oracle, &mut self.q_new, &mut self.p, self.steps, self.eps, &mut self.grad);
        self.counters.record_gradient(oracle.cost_class(), tr.oracle_calls as u64);
        let reject = |divergent, delta_h| StepOutcome { accepted: false, delta_h, divergent };
        if tr.divergent || !target.in_support(&self.q_new) {
            return reject(tr.divergent, f64::INFINITY);
        }
        if !metropolis {
            std::mem::swap(&mut self.q, &mut self.q_new);
            self.u = T::nan();
            return StepOutcome { accepted: true, delta_h: f64::NAN, divergent: false };
        }
        if !self.u.is_finite() {
            self.u = target.potential(&self.q);
            self.counters.potential_evals += 1;
        }
        let u_new = target.potential(&self.q_new);
        self.counters.potential_evals += 1;
        let k1 = half * crate::linalg::dot(&self.p, &self.p);
        let delta_h = ((u_new + k1) - (self.u + k0)).as_f64();
        if !delta_h.is_finite() {
            return reject(!u_new.is_infinite(), delta_h);
        }
        if delta_h.abs() > DIVERGENCE_THRESHOLD {
            return reject(true, delta_h);
        }
        if delta_h <= 0.0 || uniform < (-delta_h).exp() {
            std::mem::swap(&mut self.q, &mut self.q_new);
            self.u = u_new;
            StepOutcome { accepted: true, delta_h, divergent: false }
        } else {
            reject(false, delta_h)
        }
    }
}

/// One transition from the sampler's current state; see [`Sampler::step`].
pub fn hmc_step<T, M, O>(target: &M, oracle: &mut O, sampler: &mut Sampler<T>) -> StepOutcome
where
    T: Real,
    M: TargetModel<T> + ?Sized,
    O: GradientOracle<T> + ?Sized,
{
    sampler.step(target, oracle)
}

/// Run `cfg.n_iterations` transitions from `init`; all time is charged to the
/// sampling phase.
pub fn run_chain<T, M, O>(target: &M, oracle: &mut O, cfg: &HmcConfig, init: Vec<T>) -> Result<Chain<T>>
where
    T: Real,
    M: TargetModel<T> + ?Sized,
    O: GradientOracle<T> + ?Sized,
{
    crate::error::check_dim(target.dim(), oracle.dim())?;
    let start = Instant::now();
    let mut s = Sampler::new(target, init, cfg)?;
    let mut chain = Chain::new(target.dim());
    let class = oracle.cost_class();
    for _ in 0..cfg.n_iterations {
        let o = s.step(target, oracle);
        chain.push(s.position(), o.accepted, o.delta_h, o.divergent, class);
    }
    chain.counters = s.counters;
    chain.timings = Some(PhaseTimings { sampling: start.elapsed().as_secs_f64(), ..Default::default() });
    Ok(chain)
}
