//! Leapfrog integration, the HMC transition with an exact-potential
//! Metropolis test, and the SGHMC baseline.

mod chain;
mod hmc;
mod leapfrog;
mod oracle;
pub mod properties;
mod sghmc;

pub use chain::{Chain, Counters, PhaseTimings};
pub use hmc::{hmc_step, run_chain, HmcConfig, Sampler, StepOutcome, DIVERGENCE_THRESHOLD};
pub use leapfrog::{leapfrog, leapfrog_with_kick, Trajectory};
pub use oracle::{
    CostClass, ExactOracle, GradientOracle, MinibatchOracle, PerturbedOracle, RecordingOracle, TrainingSet,
    ZeroOracle,
};
pub use sghmc::{sghmc_run, SghmcConfig};
