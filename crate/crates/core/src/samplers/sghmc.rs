use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::chain::{Chain, PhaseTimings};
use super::hmc::{HmcConfig, Sampler};
use super::oracle::{GradientOracle, MinibatchOracle};
use crate::error::{Error, Result};
use crate::rng::{standard_normal, stream, Stream};
use crate::scalar::Real;
use crate::targets::DataTarget;

/// Stochastic-gradient HMC with friction, identity mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SghmcConfig {
    pub step_size: f64,
    pub n_leapfrog: usize,
    pub minibatch_size: usize,
    /// `B̂`; defaults to `0.1 · step_size`.
    #[serde(default)]
    pub friction: Option<f64>,
    pub mh_correction: bool,
    pub n_iterations: usize,
    pub seed: u64,
}

impl SghmcConfig {
    pub fn friction(&self) -> f64 {
        self.friction.unwrap_or(0.1 * self.step_size)
    }

    pub fn validate(&self) -> Result<()> {
        self.hmc().validate()?;
        if self.minibatch_size == 0 {
            return Err(Error::InvalidConfig("minibatch_size must be positive".into()));
        }
        let b = self.friction();
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidConfig("friction must be non-negative".into()));
        }
        Ok(())
    }

    fn hmc(&self) -> HmcConfig {
        HmcConfig {
            leapfrog_steps: self.n_leapfrog,
            step_size: self.step_size,
            n_iterations: self.n_iterations,
            seed: self.seed,
        }
    }
}

/// SGHMC chain. Each iteration draws fresh momentum and runs `n_leapfrog`
/// steps of the leapfrog-ordered discretization of
/// `dp = −∇Ũ dt − B̂p dt + N(0, 2B̂ dt)`, `dq = p dt`: every momentum kick of
/// duration `h` applies `p ← p − h∇Ũ − hB̂p + N(0, 2B̂h)`. With
/// `mh_correction` the trajectory end is tested against the exact potential.
///
/// With a full batch and `B̂ = 0` the chain equals exact HMC with the same
/// seed, draw for draw.
pub fn sghmc_run<T, M>(target: &M, cfg: &SghmcConfig, init: Vec<T>) -> Result<Chain<T>>
where
    T: Real,
    M: DataTarget<T> + ?Sized,
{
    cfg.validate()?;
    let start = Instant::now();
    let mut oracle = MinibatchOracle::new(target, cfg.minibatch_size, cfg.seed)?;
    let class = oracle.cost_class();
    let mut s = Sampler::new(target, init, &cfg.hmc())?;
    let mut noise_rng = stream(cfg.seed, Stream::Friction);
    let b = T::lit(cfg.friction());
    let two_b = T::lit(2.0 * cfg.friction());
    let mut chain = Chain::new(target.dim());
    for _ in 0..cfg.n_iterations {
        let rng = &mut noise_rng;
        let o = s.step_with_kick(target, &mut oracle, cfg.mh_correction, |p: &mut [T], g: &[T], h: T| {
            if b > T::zero() {
                let sd = (two_b * h).sqrt();
                for (pi, &gi) in p.iter_mut().zip(g) {
                    let z: T = standard_normal(rng);
                    *pi = *pi - h * gi - h * b * *pi + sd * z;
                }
            } else {
                for (pi, &gi) in p.iter_mut().zip(g) {
                    *pi -= h * gi;
                }
            }
        });
        chain.push(s.position(), o.accepted, o.delta_h, o.divergent, class);
    }
    chain.counters = s.counters;
    chain.timings = Some(PhaseTimings { sampling: start.elapsed().as_secs_f64(), ..Default::default() });
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{run_chain, ExactOracle};
    use crate::targets::{LogisticRegressionTarget, Prior};

    fn target() -> LogisticRegressionTarget<f64> {
        let (data, _) = crate::data_io::gen_logistic(200, 3, 5).unwrap();
        LogisticRegressionTarget::from_dataset(&data, Prior::Gaussian { variance: 10.0 }).unwrap()
    }

    #[test]
    fn full_batch_without_friction_is_hmc() {
        let t = target();
        let cfg = SghmcConfig {
            step_size: 0.05,
            n_leapfrog: 10,
            minibatch_size: 200,
            friction: Some(0.0),
            mh_correction: true,
            n_iterations: 300,
            seed: 21,
        };
        let sg = sghmc_run(&t, &cfg, vec![0.0; 3]).unwrap();
        let hmc = run_chain(&t, &mut ExactOracle::new(&t), &cfg.hmc(), vec![0.0; 3]).unwrap();
        assert_eq!(sg.draws, hmc.draws);
        assert_eq!(sg.accepted, hmc.accepted);
    }

    #[test]
    fn without_correction_everything_moves() {
        let t = target();
        let cfg = SghmcConfig {
            step_size: 0.01,
            n_leapfrog: 5,
            minibatch_size: 20,
            friction: None,
            mh_correction: false,
            n_iterations: 100,
            seed: 2,
        };
        let c = sghmc_run(&t, &cfg, vec![0.0; 3]).unwrap();
        assert!(c.accepted.iter().all(|&a| a));
        assert!(c.delta_h.iter().all(|v| v.is_nan()));
        assert_eq!(c.counters.potential_evals, 1);
        assert_eq!(c.counters.minibatch_evals, 100 * 6);
    }
}
