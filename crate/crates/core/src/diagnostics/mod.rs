//! Effective sample size, chain comparison and speed accounting.

mod compare;
mod ess;
mod speed;

pub use compare::{compare_chains, ks_distance, ChainComparison};
pub use ess::{ess, ess_1d, EssReport, BURN_IN};
pub use speed::{format_speed_table, speed_report, SpeedRow};

/// Drop the first `fraction` of rows.
pub(crate) fn after_burn_in(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction).floor() as usize
}
