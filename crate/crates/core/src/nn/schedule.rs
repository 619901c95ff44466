use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::mlp::{MlpGradientNet, NetSpec};
use super::oracle::NetOracle;
use super::train::{train, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::samplers::{Chain, CostClass, ExactOracle, HmcConfig, RecordingOracle, Sampler, TrainingSet};
use crate::scalar::Real;
use crate::targets::TargetModel;

/// When to collect gradients, how often to try a network, and when to stop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSchedule {
    /// Iteration at which gradient collection starts.
    pub start_iter: usize,
    /// Last iteration at which a check may happen.
    pub end_iter: usize,
    pub check_interval: usize,
    /// Adopt when probe acceptance ≥ this × recent exact acceptance; 0 adopts
    /// the first trained network unconditionally.
    #[serde(default = "default_target")]
    pub acceptance_target: f64,
    #[serde(default = "default_probe")]
    pub probe_draws: usize,
    /// Record every k-th gradient call.
    #[serde(default = "default_collect")]
    pub collect_every: usize,
}

fn default_target() -> f64 {
    0.9
}
fn default_probe() -> usize {
    50
}
fn default_collect() -> usize {
    1
}

impl TrainingSchedule {
    pub fn new(start_iter: usize, end_iter: usize, check_interval: usize) -> Self {
        Self {
            start_iter,
            end_iter,
            check_interval,
            acceptance_target: default_target(),
            probe_draws: default_probe(),
            collect_every: default_collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start_iter >= self.end_iter {
            return Err(Error::InvalidConfig("schedule needs start_iter < end_iter".into()));
        }
        if self.check_interval == 0 || self.probe_draws == 0 || self.collect_every == 0 {
            return Err(Error::InvalidConfig("check_interval, probe_draws and collect_every must be positive".into()));
        }
        if !(self.acceptance_target >= 0.0) {
            return Err(Error::InvalidConfig("acceptance_target must be non-negative".into()));
        }
        Ok(())
    }

    /// Iterations at which a network is trained and probed.
    pub fn checkpoints(&self) -> Vec<usize> {
        (1..).map(|k| self.start_iter + k * self.check_interval).take_while(|&c| c <= self.end_iter).collect()
    }
}

/// One train-and-probe decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCheck {
    pub iteration: usize,
    pub n_train: usize,
    pub probe_acceptance: f64,
    pub exact_acceptance: f64,
    pub adopted: bool,
    pub train: TrainReport,
}

/// What the schedule produced.
#[derive(Clone, Debug)]
pub struct ScheduleOutcome<T> {
    pub adopted: bool,
    /// The adopted network, or the last one trained.
    pub net: Option<MlpGradientNet<T>>,
    /// Exact-HMC iterations run inside the schedule.
    pub iterations_consumed: usize,
    pub checks: Vec<ScheduleCheck>,
    pub training_set: TrainingSet<T>,
    pub collection_seconds: f64,
    pub training_seconds: f64,
}

/// Drive exact HMC from `chain.len()` (normally `start_iter`), collecting
/// gradients, and at every checkpoint train a fresh network on everything
/// collected so far and probe it on a copy of the sampler with its own
/// random streams. Probe draws never enter `chain`. Stops at the first
/// adoption or at `end_iter`.
pub fn run_training_schedule<T, M>(
    target: &M,
    sampler: &mut Sampler<T>,
    chain: &mut Chain<T>,
    schedule: &TrainingSchedule,
    spec: &NetSpec,
    train_cfg: &TrainConfig,
    probe_seed: u64,
) -> Result<ScheduleOutcome<T>>
where
    T: Real,
    M: TargetModel<T> + ?Sized,
{
    schedule.validate()?;
    let mut set = TrainingSet::new(target.dim());
    let mut out = ScheduleOutcome {
        adopted: false,
        net: None,
        iterations_consumed: 0,
        checks: Vec::new(),
        training_set: TrainingSet::new(target.dim()),
        collection_seconds: 0.0,
        training_seconds: 0.0,
    };
    for (k, &check) in schedule.checkpoints().iter().enumerate() {
        let t0 = Instant::now();
        {
            let mut rec = RecordingOracle::new(ExactOracle::new(target), &mut set, schedule.collect_every);
            while chain.len() < check {
                let mark = rec.recorded();
                let o = sampler.step(target, &mut rec);
                if o.divergent {
                    rec.rollback(mark);
                }
                chain.push(sampler.position(), o.accepted, o.delta_h, o.divergent, CostClass::FullData);
                out.iterations_consumed += 1;
            }
        }
        out.collection_seconds += t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let mut net = MlpGradientNet::new(target.dim(), spec, train_cfg.seed)?;
        let report = if set.is_empty() { None } else { Some(train(&mut net, &set, train_cfg)?) };
        let exact_acc = chain.acceptance_between(check.saturating_sub(schedule.check_interval), check);
        let mut probe_acc = 0.0;
        if report.is_some() {
            let mut probe = sampler.clone();
            let base = Stream::Probe as u64 + 2 * k as u64;
            probe.reseed(probe_seed, base, base + 1);
            let mut oracle = NetOracle::new(&net);
            let accepted = (0..schedule.probe_draws).filter(|_| probe.step(target, &mut oracle).accepted).count();
            probe_acc = accepted as f64 / schedule.probe_draws as f64;
        }
        out.training_seconds += t1.elapsed().as_secs_f64();
        let adopted = report.is_some() && probe_acc >= schedule.acceptance_target * exact_acc;
        out.checks.push(ScheduleCheck {
            iteration: check,
            n_train: set.len(),
            probe_acceptance: probe_acc,
            exact_acceptance: exact_acc,
            adopted,
            train: report.unwrap_or(TrainReport {
                initial_loss: f64::NAN,
                epoch_losses: Vec::new(),
                final_loss: f64::NAN,
                updates: 0,
                n_train: 0,
            }),
        });
        out.net = Some(net);
        if adopted {
            out.adopted = true;
            break;
        }
    }
    out.training_set = set;
    Ok(out)
}

/// Full NNgHMC run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnghmcConfig {
    pub hmc: HmcConfig,
    pub schedule: TrainingSchedule,
    pub net: NetSpec,
    pub train: TrainConfig,
}

/// Chain plus everything the schedule learned.
#[derive(Clone, Debug)]
pub struct NnghmcRun<T> {
    pub chain: Chain<T>,
    pub schedule: ScheduleOutcome<T>,
}

/// Exact HMC up to `start_iter`, the training schedule, then the remaining
/// iterations with the adopted network (or exact HMC if none was adopted).
/// Exact iterations before adoption are charged to collection time.
pub fn run_nnghmc<T, M>(target: &M, cfg: &NnghmcConfig, init: Vec<T>) -> Result<NnghmcRun<T>>
where
    T: Real,
    M: TargetModel<T> + ?Sized,
{
    cfg.schedule.validate()?;
    if cfg.schedule.end_iter > cfg.hmc.n_iterations {
        return Err(Error::InvalidConfig("schedule end_iter exceeds n_iterations".into()));
    }
    let t0 = Instant::now();
    let mut sampler = Sampler::new(target, init, &cfg.hmc)?;
    let mut chain = Chain::new(target.dim());
    {
        let mut exact = ExactOracle::new(target);
        while chain.len() < cfg.schedule.start_iter {
            let o = sampler.step(target, &mut exact);
            chain.push(sampler.position(), o.accepted, o.delta_h, o.divergent, CostClass::FullData);
        }
    }
    let burn = t0.elapsed().as_secs_f64();
    let outcome = run_training_schedule(target, &mut sampler, &mut chain, &cfg.schedule, &cfg.net, &cfg.train, cfg.hmc.seed)?;

    let t2 = Instant::now();
    match (&outcome.net, outcome.adopted) {
        (Some(net), true) => {
            let mut oracle = NetOracle::new(net);
            while chain.len() < cfg.hmc.n_iterations {
                let o = sampler.step(target, &mut oracle);
                chain.push(sampler.position(), o.accepted, o.delta_h, o.divergent, CostClass::Surrogate);
            }
        }
        _ => {
            let mut exact = ExactOracle::new(target);
            while chain.len() < cfg.hmc.n_iterations {
                let o = sampler.step(target, &mut exact);
                chain.push(sampler.position(), o.accepted, o.delta_h, o.divergent, CostClass::FullData);
            }
        }
    }
    chain.counters = sampler.counters;
    chain.timings = Some(crate::samplers::PhaseTimings {
        collection: burn + outcome.collection_seconds,
        training: outcome.training_seconds,
        sampling: t2.elapsed().as_secs_f64(),
    });
    Ok(NnghmcRun { chain, schedule: outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::BananaTarget;

    #[test]
    fn checkpoints_follow_interval() {
        assert_eq!(TrainingSchedule::new(400, 1000, 200).checkpoints(), vec![600, 800, 1000]);
        assert!(TrainingSchedule::new(10, 10, 1).validate().is_err());
    }

    #[test]
    fn degenerate_net_is_never_adopted() {
        let t = BananaTarget::new(1.0, 0.1, 1.0);
        let cfg = NnghmcConfig {
            hmc: HmcConfig { leapfrog_steps: 5, step_size: 0.1, n_iterations: 400, seed: 1 },
            schedule: TrainingSchedule::new(100, 300, 100),
            net: NetSpec::single(0),
            train: TrainConfig::new(2, 1),
        };
        let run = run_nnghmc(&t, &cfg, vec![0.0, 10.0]).unwrap();
        assert!(!run.schedule.adopted);
        assert_eq!(run.schedule.checks.len(), 2);
        assert!(run.chain.oracle.iter().all(|&c| c == CostClass::FullData));
        assert_eq!(run.chain.len(), 400);
    }
}
