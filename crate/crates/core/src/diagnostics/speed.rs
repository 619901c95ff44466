use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::ess::{ess, BURN_IN};
use crate::error::{Error, Result};
use crate::samplers::{Chain, CostClass};
use crate::scalar::Real;

/// One row of a speed table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedRow {
    pub method: String,
    /// Acceptance of the method's final phase (surrogate iterations when present).
    pub acceptance: f64,
    pub ess_min: f64,
    pub ess_median: f64,
    pub ess_max: f64,
    /// Wall-clock seconds over all phases.
    pub cpu_time: f64,
    pub median_ess_per_sec: f64,
    pub speed_up: f64,
}

fn final_phase_acceptance<T: Real>(c: &Chain<T>) -> f64 {
    if c.oracle.contains(&CostClass::Surrogate) {
        c.acceptance_for(CostClass::Surrogate)
    } else {
        c.acceptance_rate()
    }
}

/// Rows for every chain, with speed-up relative to `chains[baseline]`.
/// Time is the sum of collection, training and sampling phases.
pub fn speed_report<T: Real>(chains: &[(&str, &Chain<T>)], baseline: usize) -> Result<Vec<SpeedRow>> {
    if baseline >= chains.len() {
        return Err(Error::InvalidConfig(format!("baseline index {baseline} out of range")));
    }
    let mut rows = Vec::with_capacity(chains.len());
    for (name, c) in chains {
        let t = c.timings.ok_or_else(|| Error::MissingTimings(name.to_string()))?;
        let r = ess(&c.draws_f64(), BURN_IN)?;
        let total = t.total();
        rows.push(SpeedRow {
            method: name.to_string(),
            acceptance: final_phase_acceptance(c),
            ess_min: r.min,
            ess_median: r.median,
            ess_max: r.max,
            cpu_time: total,
            median_ess_per_sec: r.median / total,
            speed_up: f64::NAN,
        });
    }
    let base = rows[baseline].median_ess_per_sec;
    for row in &mut rows {
        row.speed_up = row.median_ess_per_sec / base;
    }
    rows[baseline].speed_up = 1.0;
    Ok(rows)
}

/// Aligned plain-text table.
pub fn format_speed_table(rows: &[SpeedRow]) -> String {
    let header = ["Method", "AP", "ESS (min, median, max)", "CPU time", "Median ESS/s", "Speed-up"];
    let body: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.method.clone(),
                format!("{:.2}", r.acceptance),
                format!("({:.0}, {:.0}, {:.0})", r.ess_min, r.ess_median, r.ess_max),
                format!("{:.2}s", r.cpu_time),
                format!("{:.2}", r.median_ess_per_sec),
                format!("{:.2}", r.speed_up),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for row in &body {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let parts: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &header);
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("  "));
    for row in &body {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut out, &cells);
    }
    out
}
