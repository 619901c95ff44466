use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data_io::CsvSchema;
use crate::error::{Error, Result};
use crate::gp_surrogate::GridSpec;
use crate::nn::{AdamConfig, NetSpec, TrainConfig, TrainingSchedule};
use crate::samplers::HmcConfig;
use crate::targets::{LogNormalPrior, Prior};

/// One run, declared in full. Serializing a loaded config writes every
/// default back out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub precision: Precision,
    pub target: TargetSpec,
    pub oracle: OracleSpec,
    pub sampler: SamplerSpec,
    /// Required by the `nn` oracle, rejected otherwise.
    #[serde(default)]
    pub schedule: Option<TrainingSchedule>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub leapfrog_steps: usize,
    pub step_size: f64,
    /// Total iterations. For the `gp_surrogate` oracle, draws after the fit.
    pub n_iterations: usize,
    #[serde(default)]
    pub seed: u64,
    /// Starting point; a target-specific default when absent.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
}

impl SamplerSpec {
    pub fn hmc(&self) -> HmcConfig {
        HmcConfig {
            leapfrog_steps: self.leapfrog_steps,
            step_size: self.step_size,
            n_iterations: self.n_iterations,
            seed: self.seed,
        }
    }
}

fn banana_a() -> f64 {
    2.0
}
fn banana_b() -> f64 {
    0.05
}
fn banana_c() -> f64 {
    17.4
}
fn thirty() -> usize {
    30
}
fn min_var() -> f64 {
    0.1
}
fn max_var() -> f64 {
    1000.0
}
fn mid_low() -> f64 {
    1.0
}
fn mid_high() -> f64 {
    100.0
}
fn garch_m() -> usize {
    2
}
fn garch_r() -> usize {
    1
}
fn ten() -> f64 {
    10.0
}
fn logistic_prior() -> Prior {
    Prior::Gaussian { variance: 10.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Banana {
        #[serde(default = "banana_a")]
        a: f64,
        #[serde(default = "banana_b")]
        b: f64,
        #[serde(default = "banana_c")]
        c: f64,
    },
    Gaussian {
        variances: Vec<f64>,
    },
    StandardGaussian {
        dim: usize,
    },
    /// Diagonal covariance: smallest and largest variance fixed, the rest
    /// uniform on `[mid_low, mid_high]`.
    IllConditionedGaussian {
        #[serde(default = "thirty")]
        dim: usize,
        #[serde(default = "min_var")]
        min_variance: f64,
        #[serde(default = "max_var")]
        max_variance: f64,
        #[serde(default = "mid_low")]
        mid_low: f64,
        #[serde(default = "mid_high")]
        mid_high: f64,
        #[serde(default)]
        seed: u64,
    },
    Garch {
        #[serde(default = "garch_m")]
        m: usize,
        #[serde(default = "garch_r")]
        r: usize,
        #[serde(default = "ten")]
        prior_sd: f64,
        data: DataSpec,
    },
    Logistic {
        #[serde(default = "logistic_prior")]
        prior: Prior,
        data: DataSpec,
    },
    GpRegression {
        #[serde(default)]
        prior_l: LogNormalPrior,
        #[serde(default)]
        prior_sigma2: LogNormalPrior,
        data: DataSpec,
    },
}

impl TargetSpec {
    pub fn family(&self) -> &'static str {
        match self {
            TargetSpec::Banana { .. } => "banana",
            TargetSpec::Gaussian { .. } => "gaussian",
            TargetSpec::StandardGaussian { .. } => "standard_gaussian",
            TargetSpec::IllConditionedGaussian { .. } => "ill_conditioned_gaussian",
            TargetSpec::Garch { .. } => "garch",
            TargetSpec::Logistic { .. } => "logistic",
            TargetSpec::GpRegression { .. } => "gp_regression",
        }
    }
}

/// Where a data-backed target gets its observations. For a GARCH target
/// the CSV label column holds the series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Csv { path: PathBuf, schema: CsvSchema },
    Logistic { n: usize, d: usize, seed: u64 },
    Garch { n: usize, alpha: Vec<f64>, beta: Vec<f64>, seed: u64 },
    GpRegression { n: usize, k: usize, noise_sd: f64, seed: u64 },
}

fn one() -> usize {
    1
}
fn batch() -> usize {
    32
}
fn lr() -> f64 {
    AdamConfig::default().lr
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    Exact,
    Nn {
        hidden: usize,
        #[serde(default = "one")]
        blocks: usize,
        epochs: usize,
        #[serde(default = "batch")]
        batch_size: usize,
        #[serde(default = "lr")]
        learning_rate: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "yes")]
        standardize_labels: bool,
    },
    Sghmc {
        minibatch_size: usize,
        /// `0.1 · step_size` when absent.
        #[serde(default)]
        friction: Option<f64>,
        #[serde(default = "yes")]
        mh_correction: bool,
    },
    GpSurrogate {
        n_train: usize,
        #[serde(default)]
        grid: GridSpec,
    },
}

impl OracleSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            OracleSpec::Exact => "exact",
            OracleSpec::Nn { .. } => "nn",
            OracleSpec::Sghmc { .. } => "sghmc",
            OracleSpec::GpSurrogate { .. } => "gp_surrogate",
        }
    }

    /// Network and training settings of an `nn` oracle.
    pub fn nn_settings(&self) -> Option<(NetSpec, TrainConfig)> {
        match *self {
            OracleSpec::Nn { hidden, blocks, epochs, batch_size, learning_rate, seed, standardize_labels } => Some((
                NetSpec { hidden, blocks },
                TrainConfig {
                    epochs,
                    batch_size,
                    adam: AdamConfig { lr: learning_rate, ..AdamConfig::default() },
                    seed,
                    standardize_labels,
                },
            )),
            _ => None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks that need no data. Runs before any compute.
    pub fn validate(&self) -> Result<()> {
        self.sampler.hmc().validate()?;
        if let Some(init) = &self.sampler.init {
            if init.iter().any(|v| !v.is_finite()) {
                return Err(invalid("sampler.init must be finite"));
            }
        }
        match &self.target {
            TargetSpec::Banana { a, b, c } => {
                if ![a, b, c].iter().all(|v| v.is_finite()) || *c == 0.0 || *a == 0.0 {
                    return Err(invalid("banana needs finite a, b, c with a, c non-zero"));
                }
            }
            TargetSpec::StandardGaussian { dim } if *dim == 0 => return Err(invalid("dim must be positive")),
            TargetSpec::IllConditionedGaussian { dim, min_variance, max_variance, mid_low, mid_high, .. } => {
                if *dim < 2 || !(0.0 < *min_variance && *mid_low <= *mid_high && 0.0 < *mid_low && 0.0 < *max_variance) {
                    return Err(invalid("ill_conditioned_gaussian needs dim >= 2 and positive variances"));
                }
            }
            TargetSpec::Logistic { prior, .. } => prior.validate()?,
            _ => {}
        }
        match &self.oracle {
            OracleSpec::Nn { hidden, epochs, batch_size, learning_rate, .. } => {
                if *hidden == 0 || *epochs == 0 || *batch_size == 0 || !(*learning_rate > 0.0) {
                    return Err(invalid("nn oracle needs positive hidden, epochs, batch_size and learning_rate"));
                }
                let schedule = self.schedule.as_ref().ok_or_else(|| invalid("the nn oracle needs a schedule"))?;
                schedule.validate()?;
                if schedule.end_iter > self.sampler.n_iterations {
                    return Err(invalid("schedule.end_iter exceeds sampler.n_iterations"));
                }
            }
            OracleSpec::Sghmc { minibatch_size, friction, .. } => {
                if !matches!(self.target, TargetSpec::Logistic { .. }) {
                    return Err(invalid("the sghmc oracle needs a logistic target"));
                }
                if *minibatch_size == 0 {
                    return Err(invalid("minibatch_size must be positive"));
                }
                if friction.is_some_and(|b| !(b >= 0.0 && b.is_finite())) {
                    return Err(invalid("friction must be non-negative"));
                }
            }
            OracleSpec::GpSurrogate { n_train, grid } => {
                if *n_train < 2 {
                    return Err(invalid("gp_surrogate needs n_train >= 2"));
                }
                if grid.length_scales.iter().chain(&grid.noise_variances).any(|v| !(*v > 0.0)) {
                    return Err(invalid("gp_surrogate grid values must be positive"));
                }
            }
            OracleSpec::Exact => {}
        }
        if self.schedule.is_some() && !matches!(self.oracle, OracleSpec::Nn { .. }) {
            return Err(invalid("schedule is only used by the nn oracle"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BANANA: &str = r#"{
        "name": "banana",
        "target": {"family": "banana"},
        "oracle": {"kind": "nn", "hidden": 20, "epochs": 50},
        "sampler": {"leapfrog_steps": 5, "step_size": 0.1, "n_iterations": 5000, "seed": 1},
        "schedule": {"start_iter": 400, "end_iter": 1000, "check_interval": 200}
    }"#;

    #[test]
    fn defaults_are_written_back() {
        let cfg = ExperimentConfig::from_json(BANANA).unwrap();
        cfg.validate().unwrap();
        let v: serde_json::Value = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(v["target"]["c"], 17.4);
        assert_eq!(v["oracle"]["batch_size"], 32);
        assert_eq!(v["schedule"]["probe_draws"], 50);
        assert_eq!(v["precision"], "f64");
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn every_target_family_round_trips() {
        let csv = CsvSchema::binary("y");
        let targets = vec![
            TargetSpec::Banana { a: 1.0, b: 0.1, c: 1.0 },
            TargetSpec::Gaussian { variances: vec![1.0, 2.5] },
            TargetSpec::StandardGaussian { dim: 3 },
            serde_json::from_str(r#"{"family": "ill_conditioned_gaussian"}"#).unwrap(),
            TargetSpec::Garch { m: 2, r: 1, prior_sd: 10.0, data: DataSpec::Garch { n: 100, alpha: vec![0.1, 0.2, 0.1], beta: vec![0.5], seed: 3 } },
            TargetSpec::Logistic { prior: Prior::Laplace { scale: 0.5 }, data: DataSpec::Csv { path: "a.csv".into(), schema: csv } },
            TargetSpec::GpRegression {
                prior_l: LogNormalPrior::default(),
                prior_sigma2: LogNormalPrior { location: -1.0, scale: 2.0 },
                data: DataSpec::GpRegression { n: 50, k: 4, noise_sd: 0.1, seed: 0 },
            },
        ];
        for t in targets {
            let s = serde_json::to_string(&t).unwrap();
            let back: TargetSpec = serde_json::from_str(&s).unwrap();
            assert_eq!(back, t, "{s}");
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = BANANA.replace("\"hidden\": 20", "\"hiden\": 20");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn invalid_combinations_fail_validation() {
        let mut cfg = ExperimentConfig::from_json(BANANA).unwrap();
        cfg.schedule = None;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::from_json(BANANA).unwrap();
        cfg.oracle = OracleSpec::Sghmc { minibatch_size: 10, friction: None, mh_correction: true };
        cfg.schedule = None;
        assert!(cfg.validate().is_err(), "sghmc on banana");
        let mut cfg = ExperimentConfig::from_json(BANANA).unwrap();
        cfg.sampler.step_size = -0.1;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::from_json(BANANA).unwrap();
        cfg.oracle = OracleSpec::Exact;
        assert!(cfg.validate().is_err(), "schedule without nn");
    }
}
