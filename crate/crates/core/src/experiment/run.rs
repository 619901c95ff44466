use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{DataSpec, ExperimentConfig, OracleSpec, Precision, TargetSpec};
use crate::data_io::{gen_garch, gen_gp_regression, gen_logistic, load_csv, Dataset};
use crate::diagnostics::{ess, EssReport, BURN_IN};
use crate::error::{Error, Result};
use crate::gp_surrogate::run_gp_surrogate_hmc;
use crate::nn::{run_nnghmc, NnghmcConfig, ScheduleCheck};
use crate::samplers::{run_chain, sghmc_run, Chain, Counters, CostClass, ExactOracle, PhaseTimings, SghmcConfig};
use crate::scalar::Real;
use crate::targets::{
    BananaTarget, GarchTarget, GpRegressionTarget, IllConditionedGaussianTarget, LogisticRegressionTarget,
    StandardGaussianTarget, TargetModel,
};

/// A constructed target; logistic regression is kept concrete because SGHMC
/// needs its per-observation gradients.
pub enum BuiltTarget<T: Real> {
    Logistic(LogisticRegressionTarget<T>),
    Garch(GarchTarget<T>),
    Other(Box<dyn TargetModel<T>>),
}

impl<T: Real> BuiltTarget<T> {
    pub fn model(&self) -> &dyn TargetModel<T> {
        match self {
            BuiltTarget::Logistic(t) => t,
            BuiltTarget::Garch(t) => t,
            BuiltTarget::Other(t) => t.as_ref(),
        }
    }
}

fn load_data(spec: &DataSpec) -> Result<Dataset> {
    match spec {
        DataSpec::Csv { path, schema } => load_csv(path, schema),
        DataSpec::Logistic { n, d, seed } => Ok(gen_logistic(*n, *d, *seed)?.0),
        DataSpec::GpRegression { n, k, noise_sd, seed } => gen_gp_regression(*n, *k, *noise_sd, *seed),
        DataSpec::Garch { .. } => Err(Error::InvalidConfig("a garch series is not a regression dataset".into())),
    }
}

fn load_series(spec: &DataSpec) -> Result<Vec<f64>> {
    match spec {
        DataSpec::Garch { n, alpha, beta, seed } => gen_garch(*n, alpha, beta, *seed),
        DataSpec::Csv { path, schema } => Ok(load_csv(path, schema)?.y),
        _ => Err(Error::InvalidConfig("garch data must be a garch generator or a csv column".into())),
    }
}

/// Construct the target described by `spec`, loading or generating data.
pub fn build_target<T: Real>(spec: &TargetSpec) -> Result<BuiltTarget<T>> {
    let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
    Ok(match spec {
        TargetSpec::Banana { a, b, c } => BuiltTarget::Other(Box::new(BananaTarget::new(T::lit(*a), T::lit(*b), T::lit(*c)))),
        TargetSpec::Gaussian { variances } => BuiltTarget::Other(Box::new(IllConditionedGaussianTarget::new(lit(variances))?)),
        TargetSpec::StandardGaussian { dim } => BuiltTarget::Other(Box::new(StandardGaussianTarget::new(*dim))),
        TargetSpec::IllConditionedGaussian { dim, min_variance, max_variance, mid_low, mid_high, seed } => {
            BuiltTarget::Other(Box::new(IllConditionedGaussianTarget::<T>::with_spread(
                *dim,
                *min_variance,
                *max_variance,
                *mid_low,
                *mid_high,
                *seed,
            )?))
        }
        TargetSpec::Garch { m, r, prior_sd, data } => {
            let y = load_series(data)?;
            BuiltTarget::Garch(GarchTarget::new(&lit(&y), *m, *r, T::lit(*prior_sd))?)
        }
        TargetSpec::Logistic { prior, data } => {
            BuiltTarget::Logistic(LogisticRegressionTarget::from_dataset(&load_data(data)?, *prior)?)
        }
        TargetSpec::GpRegression { prior_l, prior_sigma2, data } => {
            BuiltTarget::Other(Box::new(GpRegressionTarget::from_dataset(&load_data(data)?, *prior_l, *prior_sigma2)?))
        }
    })
}

/// Default starting point: the banana mode, the origin for Gaussians and
/// log hyperparameters, the posterior mode for logistic regression, and for
/// GARCH a point whose unconditional variance equals the sample variance.
pub fn default_init<T: Real>(spec: &TargetSpec, target: &BuiltTarget<T>) -> Vec<f64> {
    match (spec, target) {
        (TargetSpec::Banana { b, c, .. }, _) => vec![0.0, 100.0 * b / c],
        (_, BuiltTarget::Garch(g)) => {
            let (m, r) = g.orders();
            let var = g.sample_variance().as_f64();
            let mut q = vec![0.7 * var];
            q.extend(std::iter::repeat_n(0.1 / m as f64, m));
            q.extend(std::iter::repeat_n(0.2 / r.max(1) as f64, r));
            q
        }
        (_, BuiltTarget::Logistic(t)) => t.posterior_mode().unwrap_or_else(|_| vec![0.0; t.dim()]),
        (_, t) => vec![0.0; t.model().dim()],
    }
}

/// What the schedule decided, for the summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSummary {
    pub adopted: bool,
    /// Chain iteration from which the network drove the trajectories.
    pub adopted_at: Option<usize>,
    pub n_train: usize,
    pub checks: Vec<ScheduleCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpFitSummary {
    pub n_train: usize,
    pub length_scale: f64,
    pub noise_variance: f64,
    pub log_marginal_likelihood: f64,
}

/// Everything a run produced, in double precision.
#[derive(Clone, Debug)]
pub struct RunOutput {
    /// The config with every default filled in, including the start point.
    pub resolved: ExperimentConfig,
    pub chain: Chain<f64>,
    /// The trained network in its JSON file format.
    pub net_json: Option<String>,
    pub schedule: Option<ScheduleSummary>,
    pub gp_fit: Option<GpFitSummary>,
}

/// The `summary.json` record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub target: String,
    pub oracle: String,
    pub precision: Precision,
    pub dim: usize,
    pub n_draws: usize,
    pub acceptance: f64,
    /// Acceptance per gradient source, keyed `full_data`, `surrogate`, `minibatch`.
    pub acceptance_by_oracle: BTreeMap<String, f64>,
    pub divergent: usize,
    pub ess: Option<EssReport>,
    pub median_ess_per_sec: Option<f64>,
    pub timings: PhaseTimings,
    pub counters: Counters,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub schedule: Option<ScheduleSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gp_fit: Option<GpFitSummary>,
}

impl RunOutput {
    pub fn summary(&self) -> RunSummary {
        let chain = &self.chain;
        let mut by_oracle = BTreeMap::new();
        for class in [CostClass::FullData, CostClass::Surrogate, CostClass::Minibatch] {
            if chain.oracle.contains(&class) {
                by_oracle.insert(class.as_str().to_string(), chain.acceptance_for(class));
            }
        }
        let timings = chain.timings.unwrap_or_default();
        let ess = ess(&chain.draws, BURN_IN).ok();
        let total = timings.total();
        RunSummary {
            name: self.resolved.name.clone(),
            target: self.resolved.target.family().into(),
            oracle: self.resolved.oracle.kind().into(),
            precision: self.resolved.precision,
            dim: chain.dim(),
            n_draws: chain.len(),
            acceptance: chain.acceptance_rate(),
            acceptance_by_oracle: by_oracle,
            divergent: chain.divergent.iter().filter(|&&d| d).count(),
            median_ess_per_sec: ess.as_ref().filter(|_| total > 0.0).map(|e| e.median / total),
            ess,
            timings,
            counters: chain.counters,
            schedule: self.schedule.clone(),
            gp_fit: self.gp_fit.clone(),
        }
    }
}

/// Validate, build the target and run the sampler the config asks for.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.precision {
        Precision::F64 => execute_typed::<f64>(cfg),
        Precision::F32 => execute_typed::<f32>(cfg),
    }
}

fn execute_typed<T: Real>(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let built = build_target::<T>(&cfg.target)?;
    let model = built.model();
    let mut resolved = cfg.clone();
    let init = cfg.sampler.init.clone().unwrap_or_else(|| default_init(&cfg.target, &built));
    if init.len() != model.dim() {
        return Err(Error::InvalidConfig(format!(
            "sampler.init has {} entries, the target has dimension {}",
            init.len(),
            model.dim()
        )));
    }
    resolved.sampler.init = Some(init.clone());
    let init_t: Vec<T> = init.iter().map(|&v| T::lit(v)).collect();
    let hmc = cfg.sampler.hmc();

    let mut out = RunOutput { resolved, chain: Chain::new(model.dim()), net_json: None, schedule: None, gp_fit: None };
    match &cfg.oracle {
        OracleSpec::Exact => {
            out.chain = run_chain(model, &mut ExactOracle::new(model), &hmc, init_t)?.to_f64();
        }
        OracleSpec::Nn { .. } => {
            let (net, train) = cfg.oracle.nn_settings().expect("nn oracle");
            let schedule = cfg.schedule.clone().expect("validated");
            let run = run_nnghmc(model, &NnghmcConfig { hmc, schedule, net, train }, init_t)?;
            let adopted_at = run.schedule.adopted.then(|| run.chain.oracle.iter().position(|&c| c == CostClass::Surrogate)).flatten();
            out.net_json = run.schedule.net.as_ref().map(|n| n.to_json()).transpose()?;
            out.schedule = Some(ScheduleSummary {
                adopted: run.schedule.adopted,
                adopted_at,
                n_train: run.schedule.training_set.len(),
                checks: run.schedule.checks.clone(),
            });
            out.chain = run.chain.to_f64();
        }
        OracleSpec::Sghmc { minibatch_size, friction, mh_correction } => {
            let BuiltTarget::Logistic(target) = &built else {
                return Err(Error::InvalidConfig("the sghmc oracle needs a logistic target".into()));
            };
            let sg = SghmcConfig {
                step_size: hmc.step_size,
                n_leapfrog: hmc.leapfrog_steps,
                minibatch_size: *minibatch_size,
                friction: *friction,
                mh_correction: *mh_correction,
                n_iterations: hmc.n_iterations,
                seed: hmc.seed,
            };
            if let OracleSpec::Sghmc { friction, .. } = &mut out.resolved.oracle {
                *friction = Some(sg.friction());
            }
            out.chain = sghmc_run(target, &sg, init_t)?.to_f64();
        }
        OracleSpec::GpSurrogate { n_train, grid } => {
            let run = run_gp_surrogate_hmc(model, &hmc, *n_train, grid, init_t)?;
            out.gp_fit = Some(GpFitSummary {
                n_train: *n_train,
                length_scale: run.surrogate.length_scale().as_f64(),
                noise_variance: run.surrogate.noise_variance().as_f64(),
                log_marginal_likelihood: run.surrogate.log_marginal_likelihood(),
            });
            out.chain = run.chain.to_f64();
        }
    }
    Ok(out)
}
