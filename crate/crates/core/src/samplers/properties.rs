//! Numerical property checks of the integrator and the transition kernel.
//!
//! Every suite takes the integrator as a plain function so that a
//! deliberately broken one can be substituted; the verify command runs them
//! all with fixed seeds.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::hmc::{run_chain, HmcConfig};
use super::leapfrog::{leapfrog, leapfrog_with_kick, Trajectory};
use super::oracle::{ExactOracle, GradientOracle, PerturbedOracle, ZeroOracle};
use crate::data_io::{gen_garch, gen_gp_regression, gen_logistic};
use crate::diagnostics::ess_1d;
use crate::error::Result;
use crate::linalg::norm;
use crate::nn::{backprop_gradient, finite_difference_weights, MlpGradientNet, NetOracle, NetSpec, Scaler};
use crate::numdiff::{central_jacobian, determinant, max_rel_error};
use crate::rng::{standard_normal, stream, Stream};
use crate::targets::{
    gradient_fd_error, BananaTarget, GarchTarget, GpRegressionTarget, IllConditionedGaussianTarget,
    LogNormalPrior, LogisticRegressionTarget, Prior, StandardGaussianTarget, TargetModel,
};

/// `(oracle, q, p, steps, ε, scratch gradient)`, updating `q` and `p` in place.
pub type Integrator = fn(&mut dyn GradientOracle<f64>, &mut [f64], &mut [f64], usize, f64, &mut [f64]) -> Trajectory;

/// The production integrator behind the [`Integrator`] signature.
pub fn standard_leapfrog(
    oracle: &mut dyn GradientOracle<f64>,
    q: &mut [f64],
    p: &mut [f64],
    steps: usize,
    eps: f64,
    grad: &mut [f64],
) -> Trajectory {
    leapfrog(oracle, q, p, steps, eps, grad)
}

/// Mutation fixture: the closing half kick has the wrong sign. Still
/// volume preserving, but no longer reversible.
pub fn sign_flipped_leapfrog(
    oracle: &mut dyn GradientOracle<f64>,
    q: &mut [f64],
    p: &mut [f64],
    steps: usize,
    eps: f64,
    grad: &mut [f64],
) -> Trajectory {
    let mut kicks = 0;
    leapfrog_with_kick(oracle, q, p, steps, eps, grad, |p, g, h| {
        kicks += 1;
        let sign = if kicks == steps + 1 { -1.0 } else { 1.0 };
        for (pi, &gi) in p.iter_mut().zip(g) {
            *pi -= sign * h * gi;
        }
    })
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The measured statistic.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, threshold: f64, detail: String) -> Self {
        Self { name: name.into(), passed: value < threshold, value, threshold, detail }
    }
}

/// All checks of a verify run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| standard_normal::<f64, _>(rng)).collect()
}

fn random_net(dim: usize, hidden: usize, seed: u64) -> MlpGradientNet<f64> {
    let mut net = MlpGradientNet::new(dim, &NetSpec::single(hidden), seed).expect("valid net spec");
    let mut rng = stream(seed, Stream::Init);
    for b in net.blocks_mut() {
        for v in b.b1.iter_mut().chain(b.b2.iter_mut()) {
            *v = rng.random_range(-0.5..0.5);
        }
    }
    net
}

/// Forward `steps`, negate `p`, forward `steps`, negate `p`; worst relative
/// distance from the start over `starts` random states.
pub fn round_trip_error(
    integrator: Integrator,
    oracle: &mut dyn GradientOracle<f64>,
    steps: usize,
    eps: f64,
    starts: usize,
    seed: u64,
) -> f64 {
    let d = oracle.dim();
    let mut rng = stream(seed, Stream::Probe);
    let mut grad = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for _ in 0..starts {
        let q0 = normals(&mut rng, d);
        let p0 = normals(&mut rng, d);
        let (mut q, mut p) = (q0.clone(), p0.clone());
        let a = integrator(oracle, &mut q, &mut p, steps, eps, &mut grad);
        p.iter_mut().for_each(|v| *v = -*v);
        let b = integrator(oracle, &mut q, &mut p, steps, eps, &mut grad);
        p.iter_mut().for_each(|v| *v = -*v);
        if a.divergent || b.divergent {
            return f64::INFINITY;
        }
        for (x, x0) in q.iter().chain(&p).zip(q0.iter().chain(&p0)) {
            worst = worst.max((x - x0).abs() / x0.abs().max(1.0));
        }
    }
    worst
}

/// Round trips for exact, network, zero and perturbed oracles on a 2-dim
/// Gaussian with `L = 30`, `ε = 0.05`.
pub fn reversibility(integrator: Integrator, seed: u64) -> Vec<Check> {
    let target = IllConditionedGaussianTarget::new(vec![1.0, 4.0]).expect("valid variances");
    let net = random_net(2, 8, seed);
    let mut exact = ExactOracle::new(&target);
    let mut nn = NetOracle::new(&net);
    let mut zero = ZeroOracle::new(2);
    let mut perturbed = PerturbedOracle::new::<f64>(ExactOracle::new(&target), 0.1, seed);
    let oracles: [(&str, &mut dyn GradientOracle<f64>); 4] =
        [("exact", &mut exact), ("nn", &mut nn), ("zero", &mut zero), ("perturbed", &mut perturbed)];
    oracles
        .into_iter()
        .map(|(name, o)| {
            let e = round_trip_error(integrator, o, 30, 0.05, 20, seed);
            Check::below(format!("reversibility/{name}"), e, 1e-10, format!("max relative round-trip error {e:.3e}"))
        })
        .collect()
}

/// `|det J − 1|` of one leapfrog map under a network oracle at 20 random
/// points, in dimensions 2 and 4.
pub fn volume_preservation(integrator: Integrator, seed: u64) -> Vec<Check> {
    [2usize, 4]
        .into_iter()
        .map(|d| {
            let net = random_net(d, 10, seed + d as u64);
            let mut rng = stream(seed + d as u64, Stream::Probe);
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let z0 = normals(&mut rng, 2 * d);
                let map = |z: &[f64]| {
                    let mut oracle = NetOracle::new(&net);
                    let (mut q, mut p) = (z[..d].to_vec(), z[d..].to_vec());
                    let mut g = vec![0.0; d];
                    integrator(&mut oracle, &mut q, &mut p, 5, 0.1, &mut g);
                    q.extend(p);
                    q
                };
                let det = determinant(central_jacobian(map, &z0, 1e-5));
                worst = worst.max((det - 1.0).abs());
            }
            Check::below(format!("volume/dim{d}"), worst, 1e-6, format!("max |det J - 1| = {worst:.3e}"))
        })
        .collect()
}

fn mean_abs_delta_h(
    integrator: Integrator,
    target: &dyn TargetModel<f64>,
    oracle: &mut dyn GradientOracle<f64>,
    steps: usize,
    eps: f64,
    starts: usize,
    seed: u64,
) -> f64 {
    let d = target.dim();
    let mut rng = stream(seed, Stream::Probe);
    let mut grad = vec![0.0; d];
    let mut total = 0.0;
    for _ in 0..starts {
        let mut q = normals(&mut rng, d);
        let mut p = normals(&mut rng, d);
        let h0 = target.potential(&q) + 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        integrator(oracle, &mut q, &mut p, steps, eps, &mut grad);
        let h1 = target.potential(&q) + 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        total += (h1 - h0).abs();
    }
    total / starts as f64
}

/// Mean `|ΔH|` over trajectories of fixed length `T = 2` with exact
/// gradients; halving `ε` should divide it by about 4.
pub fn energy_scaling(integrator: Integrator, seed: u64) -> Check {
    let target = IllConditionedGaussianTarget::new(vec![1.0, 2.0, 4.0]).expect("valid variances");
    let mut oracle = ExactOracle::new(&target);
    let coarse = mean_abs_delta_h(integrator, &target, &mut oracle, 20, 0.1, 500, seed);
    let fine = mean_abs_delta_h(integrator, &target, &mut oracle, 40, 0.05, 500, seed);
    let ratio = coarse / fine;
    Check {
        name: "energy_scaling".into(),
        passed: (3.5..=4.5).contains(&ratio),
        value: ratio,
        threshold: 4.0,
        detail: format!("mean |dH| {coarse:.3e} at eps 0.1, {fine:.3e} at eps 0.05; ratio must lie in [3.5, 4.5]"),
    }
}

/// `|dH/dt|` proxy (mean `|ΔH| / T` over short trajectories at `ε = 1e-4`)
/// under perturbations of norm `1/n`, `n ∈ {1, 10, 100, 1000}`. Must decrease
/// monotonically; `n · proxy` should stay roughly constant.
pub fn perturbation_limit(integrator: Integrator, seed: u64) -> Check {
    let target = StandardGaussianTarget::new(2);
    let (eps, steps) = (1e-4, 1000);
    let time = eps * steps as f64;
    let ns = [1.0, 10.0, 100.0, 1000.0];
    let proxies: Vec<f64> = ns
        .iter()
        .map(|n| {
            let mut o = PerturbedOracle::new::<f64>(ExactOracle::new(&target), 1.0 / n, seed);
            mean_abs_delta_h(integrator, &target, &mut o, steps, eps, 50, seed) / time
        })
        .collect();
    let monotone = proxies.windows(2).all(|w| w[1] < w[0]);
    let scaled: Vec<f64> = proxies.iter().zip(&ns).map(|(p, n)| p * n).collect();
    let spread = scaled.iter().fold(0.0f64, |m, v| m.max(*v)) / scaled.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    Check {
        name: "perturbation_limit".into(),
        passed: monotone && spread < 3.0,
        value: spread,
        threshold: 3.0,
        detail: format!(
            "|dH/dt| proxy {}; n*proxy spread {spread:.3}",
            proxies.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

/// Exact flow of `H = ½|q|² + ½|p|²` after time `t`.
fn rotation(q: &[f64], p: &[f64], t: f64) -> Vec<f64> {
    let (c, s) = (t.cos(), t.sin());
    q.iter().zip(p).map(|(&a, &b)| a * c + b * s).chain(q.iter().zip(p).map(|(&a, &b)| -a * s + b * c)).collect()
}

/// One Euler step under a perturbed gradient against the exact flow:
/// error `≤ Δt·δ + C·Δt²`, with `C` the worst unperturbed constant.
pub fn local_error_bound(seed: u64) -> Check {
    let target = StandardGaussianTarget::new(2);
    let mut rng = stream(seed, Stream::Probe);
    let states: Vec<(Vec<f64>, Vec<f64>)> = (0..50).map(|_| (normals(&mut rng, 2), normals(&mut rng, 2))).collect();
    let dts = [0.2, 0.1, 0.05, 0.01];
    let euler_error = |delta: f64, dt: f64, q: &[f64], p: &[f64]| {
        let mut o = PerturbedOracle::new::<f64>(ExactOracle::new(&target), delta, seed);
        let mut g = [0.0; 2];
        o.eval(q, &mut g).expect("gaussian gradient");
        let mut z: Vec<f64> = q.iter().zip(p).map(|(a, b)| a + dt * b).collect();
        z.extend(p.iter().zip(&g).map(|(b, g)| b - dt * g));
        let exact = rotation(q, p, dt);
        norm(&z.iter().zip(&exact).map(|(a, b)| a - b).collect::<Vec<_>>())
    };
    let mut c: f64 = 0.0;
    for &dt in &dts {
        for (q, p) in &states {
            c = c.max(euler_error(0.0, dt, q, p) / (dt * dt));
        }
    }
    let mut worst: f64 = 0.0;
    for delta in [1.0, 0.1, 0.01] {
        for &dt in &dts {
            for (q, p) in &states {
                let bound = dt * delta + c * dt * dt;
                worst = worst.max(euler_error(delta, dt, q, p) / (bound * (1.0 + 1e-12)));
            }
        }
    }
    Check {
        name: "local_error_bound".into(),
        passed: worst <= 1.0,
        value: worst,
        threshold: 1.0,
        detail: format!("C = {c:.4}; worst error / bound = {worst:.4}"),
    }
}

/// Leapfrog with a perturbed gradient against the exact flow after time `T`:
/// error `≤ (e^{TL̂} − 1)(δ/L̂ + Δt·M/(2L̂))` with `L̂ = 1` for the standard
/// Gaussian field and `M` calibrated at `δ = 0`.
pub fn global_error_bound(integrator: Integrator, seed: u64) -> Check {
    let target = StandardGaussianTarget::new(2);
    let lip = 1.0;
    let dt = 0.01;
    let mut rng = stream(seed, Stream::Probe);
    let states: Vec<(Vec<f64>, Vec<f64>)> = (0..20).map(|_| (normals(&mut rng, 2), normals(&mut rng, 2))).collect();
    let times = [0.5, 1.0, 2.0];
    let global_error = |delta: f64, t: f64| {
        let steps = (t / dt).round() as usize;
        let mut o = PerturbedOracle::new::<f64>(ExactOracle::new(&target), delta, seed);
        let mut g = [0.0; 2];
        states
            .iter()
            .map(|(q0, p0)| {
                let (mut q, mut p) = (q0.clone(), p0.clone());
                integrator(&mut o, &mut q, &mut p, steps, dt, &mut g);
                let exact = rotation(q0, p0, t);
                q.extend(p);
                norm(&q.iter().zip(&exact).map(|(a, b)| a - b).collect::<Vec<_>>())
            })
            .fold(0.0f64, f64::max)
    };
    let growth = |t: f64| (t * lip).exp() - 1.0;
    let m = times.iter().map(|&t| global_error(0.0, t) * 2.0 * lip / (growth(t) * dt)).fold(0.0f64, f64::max);
    let mut worst: f64 = 0.0;
    for delta in [0.1, 0.01, 0.001] {
        for &t in &times {
            let bound = growth(t) * (delta / lip + dt * m / (2.0 * lip));
            worst = worst.max(global_error(delta, t) / bound);
        }
    }
    Check {
        name: "global_error_bound".into(),
        passed: worst <= 1.0,
        value: worst,
        threshold: 1.0,
        detail: format!("M = {m:.4}; worst error / bound = {worst:.4}"),
    }
}

/// Analytic gradients of every target family against central differences
/// at 20 random points each.
pub fn target_gradients(seed: u64) -> Result<Vec<Check>> {
    let mut rng = stream(seed, Stream::Probe);
    let mut checks = Vec::new();
    let mut run = |name: &str, t: &dyn TargetModel<f64>, draw: &mut dyn FnMut(&mut rand_chacha::ChaCha8Rng) -> Vec<f64>| -> Result<()> {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        while n < 20 {
            let q = draw(&mut rng);
            if !t.in_support(&q) {
                continue;
            }
            worst = worst.max(gradient_fd_error(t, &q, 1e-6)?);
            n += 1;
        }
        checks.push(Check::below(format!("gradient_fd/{name}"), worst, 1e-5, format!("max relative error {worst:.3e}")));
        Ok(())
    };
    let banana = BananaTarget::new(2.0, 0.05, 17.4);
    run("banana", &banana, &mut |r| vec![r.random_range(-10.0..10.0), r.random_range(-5.0..5.0)])?;
    let gauss = IllConditionedGaussianTarget::<f64>::with_spread(6, 0.1, 1000.0, 1.0, 100.0, seed)?;
    run("gaussian", &gauss, &mut |r| (0..6).map(|_| r.random_range(-5.0..5.0)).collect())?;
    let y = gen_garch(300, &[0.2, 0.15, 0.1], &[0.5], seed)?;
    let garch = GarchTarget::new(&y, 2, 1, 10.0)?;
    run("garch", &garch, &mut |r| {
        vec![r.random_range(0.05..0.5), r.random_range(0.01..0.3), r.random_range(0.01..0.3), r.random_range(0.01..0.5)]
    })?;
    let (data, _) = gen_logistic(100, 4, seed)?;
    let logistic = LogisticRegressionTarget::<f64>::from_dataset(&data, Prior::Gaussian { variance: 10.0 })?;
    run("logistic", &logistic, &mut |r| (0..4).map(|_| r.random_range(-2.0..2.0)).collect())?;
    let gp_data = gen_gp_regression(30, 2, 0.3, seed)?;
    let gp = GpRegressionTarget::<f64>::from_dataset(&gp_data, LogNormalPrior::default(), LogNormalPrior::default())?;
    run("gp_regression", &gp, &mut |r| vec![r.random_range(-1.5..1.5), r.random_range(-4.0..0.5)])?;
    Ok(checks)
}

/// Backpropagated loss gradients against central differences of the loss,
/// over random single and block networks.
pub fn backprop_gradients(seed: u64) -> Check {
    let mut rng = stream(seed, Stream::Probe);
    let mut worst: f64 = 0.0;
    for trial in 0..6u64 {
        let d = 3;
        let spec = NetSpec { hidden: rng.random_range(2..7), blocks: 1 + (trial as usize % 3) };
        let mut net = MlpGradientNet::<f64>::new(d, &spec, seed + trial).expect("valid net spec");
        for b in net.blocks_mut() {
            for v in b.b1.iter_mut().chain(b.b2.iter_mut()) {
                *v = rng.random_range(-0.5..0.5);
            }
        }
        let x = crate::linalg::Matrix::from_fn(8, d, |_, _| standard_normal::<f64, _>(&mut rng));
        let y = crate::linalg::Matrix::from_fn(8, d, |i, j| (x.get(i, j) * x.get(i, (j + 1) % d)).sin());
        net.set_scalers(Scaler::fit(&x), Scaler::fit(&y)).expect("matching dims");
        let (_, g) = backprop_gradient(&net, &x, &y);
        worst = worst.max(max_rel_error(&g.flatten(), &finite_difference_weights(&net, &x, &y)));
    }
    Check::below("backprop_fd", worst, 1e-4, format!("max relative error {worst:.3e}"))
}

/// ESS of an AR(1) series with `ρ = 0.5` and `n = 50000` against `n/3`.
pub fn ess_ar1(seed: u64) -> Check {
    let n = 50_000;
    let rho: f64 = 0.5;
    let mut rng = stream(seed, Stream::Probe);
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = Vec::with_capacity(n);
    let mut v = standard_normal::<f64, _>(&mut rng);
    for _ in 0..n {
        x.push(v);
        v = rho * v + innov * standard_normal::<f64, _>(&mut rng);
    }
    let (ess, _) = ess_1d(&x);
    let want = n as f64 * (1.0 - rho) / (1.0 + rho);
    let rel = (ess - want).abs() / want;
    Check::below("ess_ar1", rel, 0.1, format!("ESS {ess:.0} vs {want:.0}"))
}

/// Pearson statistic of `draws` against `N(0, 1)` on `bins` equiprobable
/// bins, and the `1 − alpha` critical value.
pub fn chi_square_standard_normal(draws: &[f64], bins: usize, alpha: f64) -> (f64, f64) {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let edges: Vec<f64> = (1..bins).map(|k| normal.inverse_cdf(k as f64 / bins as f64)).collect();
    let mut counts = vec![0usize; bins];
    for &x in draws {
        counts[edges.partition_point(|&e| e < x)] += 1;
    }
    let expected = draws.len() as f64 / bins as f64;
    let stat = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((bins - 1) as f64).expect("positive df").inverse_cdf(1.0 - alpha);
    (stat, critical)
}

/// HMC with an all-zero gradient oracle on `N(0, 1)`: the exact Metropolis
/// test alone must keep the target. Draws are thinned to roughly independent
/// ones before a 20-bin χ² test at the 1% level.
pub fn zero_oracle_exactness(n_draws: usize, seed: u64) -> Result<Check> {
    let target = StandardGaussianTarget::new(1);
    let cfg = HmcConfig { leapfrog_steps: 4, step_size: 0.5, n_iterations: n_draws, seed };
    let chain = run_chain(&target, &mut ZeroOracle::new(1), &cfg, vec![0.0f64])?;
    let x: Vec<f64> = chain.draws.as_slice().to_vec();
    let (ess, _) = ess_1d(&x);
    let thin = (x.len() as f64 / ess).ceil().max(1.0) as usize;
    let thinned: Vec<f64> = x.iter().step_by(thin).copied().collect();
    let (stat, critical) = chi_square_standard_normal(&thinned, 20, 0.01);
    Ok(Check::below(
        "zero_oracle_chi2",
        stat,
        critical,
        format!(
            "{} draws, acceptance {:.3}, thinned by {thin} to {}; chi2 {stat:.2} vs {critical:.2}",
            x.len(),
            chain.acceptance_rate(),
            thinned.len()
        ),
    ))
}

/// Every suite with fixed seeds.
pub fn verify_all(integrator: Integrator) -> Result<VerifyReport> {
    let seed = 20_240_601;
    let mut checks = reversibility(integrator, seed);
    checks.extend(volume_preservation(integrator, seed));
    checks.push(energy_scaling(integrator, seed));
    checks.push(perturbation_limit(integrator, seed));
    checks.push(local_error_bound(seed));
    checks.push(global_error_bound(integrator, seed));
    checks.extend(target_gradients(seed)?);
    checks.push(backprop_gradients(seed));
    checks.push(ess_ar1(seed));
    checks.push(zero_oracle_exactness(200_000, seed)?);
    Ok(VerifyReport { checks })
}
