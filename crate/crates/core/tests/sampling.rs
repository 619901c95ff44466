use std::path::PathBuf;

use nnghmc::data_io::gen_logistic;
use nnghmc::diagnostics::{compare_chains, BURN_IN};
use nnghmc::experiment::{execute, ExperimentConfig};
use nnghmc::nn::{run_nnghmc, NetSpec, NnghmcConfig, TrainConfig, TrainingSchedule};
use nnghmc::samplers::{run_chain, sghmc_run, ExactOracle, HmcConfig, SghmcConfig};
use nnghmc::targets::{IllConditionedGaussianTarget, LogisticRegressionTarget, Prior, StandardGaussianTarget};

fn hmc(l: usize, eps: f64, n: usize, seed: u64) -> HmcConfig {
    HmcConfig { leapfrog_steps: l, step_size: eps, n_iterations: n, seed }
}

fn column(draws: &nnghmc::linalg::Matrix<f64>, j: usize) -> Vec<f64> {
    let skip = (BURN_IN * draws.rows() as f64) as usize;
    (skip..draws.rows()).map(|i| draws.get(i, j)).collect()
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
    (m, v.sqrt())
}

fn quantile(x: &[f64], p: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s[((s.len() - 1) as f64 * p).round() as usize]
}

#[test]
fn logistic_posterior_sits_on_the_mode_and_near_the_truth() {
    let (data, beta) = gen_logistic(2000, 5, 3).unwrap();
    let t = LogisticRegressionTarget::<f64>::from_dataset(&data, Prior::Gaussian { variance: 10.0 }).unwrap();
    let mode = t.posterior_mode().unwrap();
    let chain = run_chain(&t, &mut ExactOracle::new(&t), &hmc(10, 0.02, 3000, 1), mode.clone()).unwrap();
    assert!(chain.acceptance_rate() > 0.6);
    for j in 0..5 {
        let (m, sd) = mean_sd(&column(&chain.draws, j));
        assert!((m - mode[j]).abs() < 0.3 * sd, "dim {j}: mean {m}, mode {}, sd {sd}", mode[j]);
        assert!((m - beta[j]).abs() < 4.0 * sd, "dim {j}: mean {m}, true {}, sd {sd}", beta[j]);
    }
}

#[test]
fn garch_intervals_cover_the_true_parameters() {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", "garch_exact.json"].iter().collect();
    let out = execute(&ExperimentConfig::load(&path).unwrap()).unwrap();
    let truth = [0.015, 0.2, 0.1, 0.6];
    for (j, &v) in truth.iter().enumerate() {
        let x = column(&out.chain.draws, j);
        let (lo, hi) = (quantile(&x, 0.005), quantile(&x, 0.995));
        assert!(lo <= v && v <= hi, "param {j}: true {v} outside [{lo:.4}, {hi:.4}]");
    }
}

#[test]
fn independent_exact_chains_agree() {
    let t = IllConditionedGaussianTarget::<f64>::new(vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
    let a = run_chain(&t, &mut ExactOracle::new(&t), &hmc(10, 0.2, 4000, 1), vec![0.0; 6]).unwrap();
    let b = run_chain(&t, &mut ExactOracle::new(&t), &hmc(10, 0.2, 4000, 2), vec![0.0; 6]).unwrap();
    let cmp = compare_chains(&a.draws, &b.draws, BURN_IN).unwrap();
    println!("max mean gap {:.2} SE", cmp.max_mean_gap_se());
    assert!(cmp.max_mean_gap_se() < 3.5, "{:?}", cmp.mean_gap_se);
}

#[test]
fn nn_draws_are_as_close_to_exact_as_a_second_exact_chain() {
    let d = 10;
    let t = StandardGaussianTarget::new(d);
    let mut schedule = TrainingSchedule::new(0, 500, 500);
    schedule.acceptance_target = 0.0;
    let cfg = NnghmcConfig { hmc: hmc(10, 0.1, 4500, 5), schedule, net: NetSpec::single(100), train: TrainConfig::new(10, 5) };
    let nn = run_nnghmc(&t, &cfg, vec![0.0; d]).unwrap().chain;
    let a = run_chain(&t, &mut ExactOracle::new(&t), &hmc(10, 0.1, 4000, 6), vec![0.0; d]).unwrap();
    let b = run_chain(&t, &mut ExactOracle::new(&t), &hmc(10, 0.1, 4000, 7), vec![0.0; d]).unwrap();
    let nn_draws = nn.draws.select_rows(&(500..4500).collect::<Vec<_>>());
    let baseline = compare_chains(&a.draws, &b.draws, BURN_IN).unwrap().max_ks();
    let ks = compare_chains(&nn_draws, &a.draws, BURN_IN).unwrap().max_ks();
    println!("nn vs exact KS {ks:.3}, exact pair {baseline:.3}");
    assert!(ks <= 2.0 * baseline, "nn vs exact KS {ks:.3}, exact pair {baseline:.3}");
}

#[test]
fn uncorrected_sghmc_depends_on_the_step_size() {
    let (data, _) = gen_logistic(5000, 4, 8).unwrap();
    let t = LogisticRegressionTarget::<f64>::from_dataset(&data, Prior::Laplace { scale: 1.0 }).unwrap();
    let mode = t.posterior_mode().unwrap();
    let exact = run_chain(&t, &mut ExactOracle::new(&t), &hmc(10, 0.005, 4000, 1), mode.clone()).unwrap();
    let sg = |eps: f64, seed: u64| {
        let cfg = SghmcConfig {
            step_size: eps,
            n_leapfrog: 10,
            minibatch_size: 100,
            friction: None,
            mh_correction: false,
            n_iterations: 4000,
            seed,
        };
        sghmc_run(&t, &cfg, mode.clone()).unwrap()
    };
    let (coarse, fine) = (sg(0.005, 2), sg(0.0005, 3));
    let exact_sd = mean_sd(&column(&exact.draws, 0)).1;
    let (coarse_sd, fine_sd) = (mean_sd(&column(&coarse.draws, 0)).1, mean_sd(&column(&fine.draws, 0)).1);
    println!("sd of coefficient 0: coarse {coarse_sd:.4}, fine {fine_sd:.4}, exact {exact_sd:.4}");
    assert!(coarse_sd > 1.5 * exact_sd, "coarse steps should inflate the spread");
    assert!((fine_sd / exact_sd - 1.0).abs() < 0.25, "fine steps should track the exact spread");
}
