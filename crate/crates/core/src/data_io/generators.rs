use rand::Rng;
use serde_json::json;

use super::{default_names, Dataset, Provenance};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{standard_normal, stream, uniform01, Stream};

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Logistic-regression data: `X` iid standard normal, `β ~ U(-1, 1)^d`,
/// `y_i ~ Bernoulli(σ(x_iᵀβ))`. Returns the data and the true `β`.
pub fn gen_logistic(n: usize, d: usize, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    if d == 0 {
        return Err(Error::InvalidConfig("gen_logistic needs d >= 1".into()));
    }
    let mut rng = stream(seed, Stream::Init);
    let beta: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut data = gen_logistic_with_beta(n, &beta, seed)?;
    if let Provenance::Generator { name, .. } = &mut data.provenance {
        *name = "logistic".into();
    }
    Ok((data, beta))
}

/// Same recipe with a caller-supplied `β`.
pub fn gen_logistic_with_beta(n: usize, beta: &[f64], seed: u64) -> Result<Dataset> {
    let d = beta.len();
    if n == 0 || d == 0 {
        return Err(Error::InvalidConfig("gen_logistic needs n, d >= 1".into()));
    }
    let mut rng = stream(seed, Stream::Data);
    let x = Matrix::from_fn(n, d, |_, _| standard_normal::<f64, _>(&mut rng));
    let y = (0..n)
        .map(|i| {
            let p = logistic(crate::linalg::dot(x.row(i), beta));
            if uniform01(&mut rng) < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(Dataset {
        x,
        y,
        feature_names: default_names(d),
        provenance: Provenance::Generator {
            name: "logistic_fixed_beta".into(),
            seed,
            params: json!({ "n": n, "d": d }),
        },
    })
}

/// Simulated GARCH(m, r) series with `m = alpha.len() - 1`, `r = beta.len()`.
/// Pre-sample variances and squared observations are set to the
/// unconditional variance `α₀ / (1 − Σα_{j≥1} − Σβ)`.
pub fn gen_garch(t_len: usize, alpha: &[f64], beta: &[f64], seed: u64) -> Result<Vec<f64>> {
    if alpha.is_empty() || !(alpha[0] > 0.0) {
        return Err(Error::InvalidConfig("gen_garch needs α₀ > 0".into()));
    }
    if alpha[1..].iter().chain(beta).any(|&v| v < 0.0) {
        return Err(Error::InvalidConfig("gen_garch needs non-negative coefficients".into()));
    }
    let persistence: f64 = alpha[1..].iter().chain(beta).sum();
    if persistence >= 1.0 {
        return Err(Error::InvalidConfig("gen_garch parameters are not stationary".into()));
    }
    let uncond = alpha[0] / (1.0 - persistence);
    let (m, r) = (alpha.len() - 1, beta.len());
    let lag = m.max(r);
    let mut rng = stream(seed, Stream::Data);
    // lag pre-sample slots followed by the series
    let mut y2 = vec![uncond; lag + t_len];
    let mut s2 = vec![uncond; lag + t_len];
    let mut y = Vec::with_capacity(t_len);
    for t in lag..lag + t_len {
        let mut v = alpha[0];
        for j in 1..=m {
            v += alpha[j] * y2[t - j];
        }
        for j in 1..=r {
            v += beta[j - 1] * s2[t - j];
        }
        s2[t] = v;
        let obs = v.sqrt() * standard_normal::<f64, _>(&mut rng);
        y2[t] = obs * obs;
        y.push(obs);
    }
    Ok(y)
}

/// The regression surface used by [`gen_gp_regression`]:
/// `f(x) = Σ_j x_j + ½ Σ_j x_j² − ½ Σ_{j<k} x_j x_k`.
pub fn gp_polynomial(x: &[f64]) -> f64 {
    let mut f = 0.0;
    for (j, &a) in x.iter().enumerate() {
        f += a + 0.5 * a * a;
        for &b in &x[j + 1..] {
            f -= 0.5 * a * b;
        }
    }
    f
}

/// GP-regression data: `X` iid standard normal `n × k`,
/// `Y = gp_polynomial(x) + N(0, noise_sd²)`.
pub fn gen_gp_regression(n: usize, k: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidConfig("gen_gp_regression needs n, k >= 1".into()));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::InvalidConfig("noise_sd must be non-negative".into()));
    }
    let mut rng = stream(seed, Stream::Data);
    let x = Matrix::from_fn(n, k, |_, _| standard_normal::<f64, _>(&mut rng));
    let y = (0..n)
        .map(|i| gp_polynomial(x.row(i)) + noise_sd * standard_normal::<f64, _>(&mut rng))
        .collect();
    Ok(Dataset {
        x,
        y,
        feature_names: default_names(k),
        provenance: Provenance::Generator {
            name: "gp_regression".into(),
            seed,
            params: json!({ "n": n, "k": k, "noise_sd": noise_sd }),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_zero_beta_is_a_fair_coin() {
        let d = gen_logistic_with_beta(10_000, &[0.0], 3).unwrap();
        let m = d.y.iter().sum::<f64>() / 10_000.0;
        assert!((0.45..=0.55).contains(&m), "{m}");
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_logistic(50, 3, 9).unwrap(), gen_logistic(50, 3, 9).unwrap());
        assert_ne!(gen_logistic(50, 3, 9).unwrap().0.y, gen_logistic(50, 3, 10).unwrap().0.y);
        assert_eq!(gen_garch(300, &[0.1, 0.2], &[0.3], 4).unwrap(), gen_garch(300, &[0.1, 0.2], &[0.3], 4).unwrap());
        assert_eq!(gen_gp_regression(20, 4, 0.1, 1).unwrap(), gen_gp_regression(20, 4, 0.1, 1).unwrap());
    }

    #[test]
    fn garch_without_dynamics_is_iid() {
        let y = gen_garch(20_000, &[0.7, 0.0], &[0.0], 2).unwrap();
        let v = y.iter().map(|a| a * a).sum::<f64>() / y.len() as f64;
        assert!((v - 0.7).abs() < 0.03, "{v}");
    }

    #[test]
    fn garch_long_run_variance_is_unconditional() {
        let y = gen_garch(200_000, &[0.2, 0.15, 0.1], &[0.5], 6).unwrap();
        let v = y.iter().map(|a| a * a).sum::<f64>() / y.len() as f64;
        assert!((v - 0.2 / 0.25).abs() < 0.05 * 0.8, "{v}");
    }

    #[test]
    fn garch_rejects_non_stationary() {
        assert!(gen_garch(10, &[0.1, 0.6], &[0.5], 1).is_err());
    }

    #[test]
    fn noiseless_gp_data_is_the_polynomial() {
        let d = gen_gp_regression(30, 4, 0.0, 5).unwrap();
        for i in 0..30 {
            assert_eq!(d.y[i], gp_polynomial(d.x.row(i)));
        }
        assert_eq!((d.n(), d.d()), (30, 4));
        assert_eq!(gp_polynomial(&[1.0, 2.0]), 1.0 + 0.5 + 2.0 + 2.0 - 1.0);
    }
}
