use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{execute, RunOutput, RunSummary};
use crate::diagnostics::{compare_chains, ess, format_speed_table, speed_report, ChainComparison, EssReport, SpeedRow, BURN_IN};
use crate::error::{Error, Result};
use crate::samplers::properties::{verify_all, Integrator, VerifyReport};
use crate::samplers::Chain;

pub const CONFIG_FILE: &str = "config.json";
pub const DRAWS_FILE: &str = "draws.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const NET_FILE: &str = "net.json";

/// Create `dir`, or refuse if it already holds anything unless `overwrite`.
/// With `overwrite`, artifacts of an earlier run are removed first.
fn prepare_run_dir(dir: &Path, overwrite: bool) -> Result<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir)?.next().is_some();
        if occupied && !overwrite {
            return Err(Error::RunDirExists(dir.to_path_buf()));
        }
        for f in [CONFIG_FILE, DRAWS_FILE, SUMMARY_FILE, NET_FILE] {
            let p = dir.join(f);
            if p.exists() {
                fs::remove_file(p)?;
            }
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_run(dir: &Path, out: &RunOutput) -> Result<RunSummary> {
    fs::write(dir.join(CONFIG_FILE), out.resolved.to_json()?)?;
    out.chain.write_csv(dir.join(DRAWS_FILE))?;
    let summary = out.summary();
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
    if let Some(net) = &out.net_json {
        fs::write(dir.join(NET_FILE), net)?;
    }
    Ok(summary)
}

/// Run one config and write `config.json` (resolved), `draws.csv`,
/// `summary.json` and, when a network was trained, `net.json`.
/// `dir` overrides the config's output directory.
pub fn cmd_sample(cfg: &ExperimentConfig, dir: Option<&Path>, overwrite: bool) -> Result<(PathBuf, RunSummary)> {
    cfg.validate()?;
    let dir = dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| Error::InvalidConfig("no output directory: set output.dir or pass one".into()))?;
    prepare_run_dir(&dir, overwrite)?;
    let mut out = execute(cfg)?;
    out.resolved.output.dir = Some(dir.clone());
    let summary = write_run(&dir, &out)?;
    Ok((dir, summary))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub method: String,
    pub baseline: String,
    pub comparison: ChainComparison,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: usize,
    pub rows: Vec<SpeedRow>,
    /// Every non-baseline chain against the baseline.
    pub pairs: Vec<PairComparison>,
    pub summaries: Vec<RunSummary>,
}

impl ComparisonReport {
    pub fn table(&self) -> String {
        format_speed_table(&self.rows)
    }
}

/// Run every config (identical sampler settings are run once and shared)
/// and tabulate speed against `configs[baseline]`. When `dir` is given each
/// run gets its own subdirectory and the report is written next to them.
pub fn cmd_compare(
    configs: &[ExperimentConfig],
    baseline: usize,
    dir: Option<&Path>,
    overwrite: bool,
) -> Result<ComparisonReport> {
    if configs.is_empty() {
        return Err(Error::InvalidConfig("compare needs at least one config".into()));
    }
    if baseline >= configs.len() {
        return Err(Error::InvalidConfig(format!("baseline index {baseline} out of range")));
    }
    for c in configs {
        c.validate()?;
        if c.target != configs[0].target {
            return Err(Error::InvalidConfig(format!("config `{}` has a different target", c.name)));
        }
    }
    if let Some(d) = dir {
        prepare_run_dir(d, overwrite)?;
    }
    let mut cache: HashMap<String, usize> = HashMap::new();
    let mut outputs: Vec<RunOutput> = Vec::with_capacity(configs.len());
    for (i, c) in configs.iter().enumerate() {
        let mut key = c.clone();
        key.name.clear();
        key.output.dir = None;
        let key = key.to_json()?;
        let mut out = match cache.get(&key) {
            Some(&j) => outputs[j].clone(),
            None => {
                cache.insert(key, i);
                execute(c)?
            }
        };
        out.resolved.name = c.name.clone();
        if let Some(d) = dir {
            let sub = d.join(format!("{i}_{}", c.name));
            prepare_run_dir(&sub, overwrite)?;
            out.resolved.output.dir = Some(sub.clone());
            write_run(&sub, &out)?;
        }
        outputs.push(out);
    }
    let named: Vec<(&str, &Chain<f64>)> = outputs.iter().map(|o| (o.resolved.name.as_str(), &o.chain)).collect();
    let rows = speed_report(&named, baseline)?;
    let mut pairs = Vec::new();
    for (i, o) in outputs.iter().enumerate() {
        if i != baseline {
            pairs.push(PairComparison {
                method: o.resolved.name.clone(),
                baseline: outputs[baseline].resolved.name.clone(),
                comparison: compare_chains(&o.chain.draws, &outputs[baseline].chain.draws, BURN_IN)?,
            });
        }
    }
    let report = ComparisonReport { baseline, rows, pairs, summaries: outputs.iter().map(RunOutput::summary).collect() };
    if let Some(d) = dir {
        fs::write(d.join("compare.json"), serde_json::to_string_pretty(&report)?)?;
        fs::write(d.join("table.txt"), report.table())?;
    }
    Ok(report)
}

/// The property suites with the given integrator.
pub fn cmd_verify(integrator: Integrator) -> Result<VerifyReport> {
    verify_all(integrator)
}

/// Diagnostics recomputed from a `draws.csv`.
pub fn cmd_ess(draws: &Path, burn_in: f64) -> Result<EssReport> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidConfig("burn_in must lie in [0, 1)".into()));
    }
    ess(&Chain::read_csv(draws)?.draws, burn_in)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn banana_exact(n: usize) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{
                "name": "hmc",
                "target": {{"family": "banana"}},
                "oracle": {{"kind": "exact"}},
                "sampler": {{"leapfrog_steps": 5, "step_size": 0.1, "n_iterations": {n}, "seed": 4}}
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn exact_run_writes_no_training_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        let (dir, summary) = cmd_sample(&banana_exact(300), Some(&dir), false).unwrap();
        assert!(dir.join(DRAWS_FILE).exists() && dir.join(CONFIG_FILE).exists() && dir.join(SUMMARY_FILE).exists());
        assert!(!dir.join(NET_FILE).exists());
        assert!(summary.schedule.is_none());
        assert_eq!(summary.acceptance_by_oracle.keys().collect::<Vec<_>>(), vec!["full_data"]);
        let resolved = ExperimentConfig::load(dir.join(CONFIG_FILE)).unwrap();
        assert_eq!(resolved.sampler.init, Some(vec![0.0, 100.0 * 0.05 / 17.4]));
    }

    #[test]
    fn run_dirs_are_append_only() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = banana_exact(150);
        cmd_sample(&cfg, Some(tmp.path()), true).unwrap();
        assert!(matches!(cmd_sample(&cfg, Some(tmp.path()), false), Err(Error::RunDirExists(_))));
        let first = fs::read(tmp.path().join(DRAWS_FILE)).unwrap();
        cmd_sample(&cfg, Some(tmp.path()), true).unwrap();
        assert_eq!(first, fs::read(tmp.path().join(DRAWS_FILE)).unwrap(), "same seed, same bytes");
    }

    #[test]
    fn compare_with_itself_has_unit_speed_up() {
        let cfg = banana_exact(400);
        let report = cmd_compare(&[cfg.clone(), cfg], 0, None, false).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows.iter().all(|r| r.speed_up == 1.0));
        assert_eq!(report.pairs[0].comparison.max_ks(), 0.0);
    }

    #[test]
    fn ess_recomputes_from_csv() {
        let tmp = tempfile::tempdir().unwrap();
        let (dir, summary) = cmd_sample(&banana_exact(500), Some(tmp.path()), true).unwrap();
        let report = cmd_ess(&dir.join(DRAWS_FILE), BURN_IN).unwrap();
        assert_eq!(Some(report), summary.ess);
    }
}
