use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use nnghmc::diagnostics::BURN_IN;
use nnghmc::experiment::{cmd_compare, cmd_ess, cmd_sample, cmd_verify, ExperimentConfig};
use nnghmc::samplers::properties::{sign_flipped_leapfrog, standard_leapfrog};

/// Neural-network-gradient HMC experiments.
#[derive(Parser)]
#[command(name = "nnghmc", version)]
struct Cli {
    /// Print full JSON records instead of one-line summaries.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Sample {
        config: PathBuf,
        /// Run directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Allow writing into a non-empty run directory.
        #[arg(long)]
        overwrite: bool,
    },
    /// Run several configs on the same target and tabulate their speed.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Index of the reference config.
        #[arg(long, default_value_t = 0)]
        baseline: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        overwrite: bool,
    },
    /// Run the integrator and sampler property checks.
    Verify {
        /// Replace the integrator with one whose final kick has the wrong sign.
        #[arg(long, hide = true)]
        inject_sign_flip: bool,
    },
    /// Recompute effective sample sizes from a draws.csv.
    Ess {
        draws: PathBuf,
        #[arg(long, default_value_t = BURN_IN)]
        burn_in: f64,
    },
}

enum Failure {
    Config(anyhow::Error),
    Verify,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

fn load(path: &PathBuf) -> anyhow::Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sample { config, out, overwrite } => {
            let cfg = load(&config)?;
            let (dir, s) = cmd_sample(&cfg, out.as_deref(), overwrite).map_err(anyhow::Error::from)?;
            if cli.verbose {
                println!("{}", serde_json::to_string_pretty(&s).map_err(anyhow::Error::from)?);
            } else {
                let phases: Vec<String> = s.acceptance_by_oracle.iter().map(|(k, v)| format!("{k} {v:.3}")).collect();
                println!(
                    "{}: {} draws, acceptance {:.3} ({}), median ESS {}, {:.2}s -> {}",
                    s.name,
                    s.n_draws,
                    s.acceptance,
                    phases.join(", "),
                    s.ess.as_ref().map_or("n/a".into(), |e| format!("{:.0}", e.median)),
                    s.timings.total(),
                    dir.display()
                );
            }
        }
        Command::Compare { configs, baseline, out, overwrite } => {
            let cfgs = configs.iter().map(load).collect::<anyhow::Result<Vec<_>>>()?;
            let report = cmd_compare(&cfgs, baseline, out.as_deref(), overwrite).map_err(anyhow::Error::from)?;
            print!("{}", report.table());
            if cli.verbose {
                println!("{}", serde_json::to_string_pretty(&report.pairs).map_err(anyhow::Error::from)?);
            }
        }
        Command::Verify { inject_sign_flip } => {
            let integrator = if inject_sign_flip { sign_flipped_leapfrog } else { standard_leapfrog };
            let report = cmd_verify(integrator).map_err(anyhow::Error::from)?;
            for c in &report.checks {
                println!("{} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if !report.all_passed() {
                return Err(Failure::Verify);
            }
        }
        Command::Ess { draws, burn_in } => {
            let r = cmd_ess(&draws, burn_in).map_err(anyhow::Error::from)?;
            if cli.verbose {
                println!("{}", serde_json::to_string_pretty(&r).map_err(anyhow::Error::from)?);
            } else {
                println!("ESS min {:.1}, median {:.1}, max {:.1} over {} draws", r.min, r.median, r.max, r.n_used);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Verify) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
    }
}
