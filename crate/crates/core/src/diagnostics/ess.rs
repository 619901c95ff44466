use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Burn-in fraction used by every report.
pub const BURN_IN: f64 = 0.1;

/// Per-dimension effective sample sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssReport {
    pub per_dim: Vec<f64>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub burn_in: f64,
    pub n_used: usize,
    /// Dimensions whose retained draws were constant.
    pub degenerate: Vec<bool>,
}

/// ESS of one series: `n / (1 + 2 Σ ρ(k))` with autocovariances by direct
/// summation and the lag sum cut by Geyer's initial positive sequence.
/// Returns `(ess, degenerate)`; a constant series gives `(1, true)`.
pub fn ess_1d(x: &[f64]) -> (f64, bool) {
    let n = x.len();
    if n < 2 {
        return (1.0, true);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let autocov = |k: usize| c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let g0 = autocov(0);
    if !(g0 > 0.0) || !g0.is_finite() {
        return (1.0, true);
    }
    // τ = -1 + 2 Σ_m (ρ_{2m} + ρ_{2m+1}) over the initial positive pairs
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (if m == 0 { g0 } else { autocov(2 * m) } + autocov(2 * m + 1)) / g0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    ((n as f64 / tau).clamp(1.0, n as f64), false)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// ESS per column after dropping the leading `burn_in` fraction of rows.
pub fn ess(draws: &Matrix<f64>, burn_in: f64) -> Result<EssReport> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidConfig(format!("burn-in fraction {burn_in} not in [0, 1)")));
    }
    let skip = super::after_burn_in(draws.rows(), burn_in);
    let n = draws.rows() - skip;
    if n < 100 {
        return Err(Error::InvalidConfig(format!("ESS needs at least 100 draws after burn-in, got {n}")));
    }
    if draws.cols() == 0 {
        return Err(Error::InvalidConfig("ESS of a zero-dimensional chain".into()));
    }
    let (mut per_dim, mut degenerate) = (Vec::new(), Vec::new());
    for j in 0..draws.cols() {
        let col: Vec<f64> = (skip..draws.rows()).map(|i| draws.get(i, j)).collect();
        let (e, d) = ess_1d(&col);
        per_dim.push(e);
        degenerate.push(d);
    }
    let mut sorted = per_dim.clone();
    let med = median(&mut sorted);
    Ok(EssReport {
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        median: med,
        per_dim,
        burn_in,
        n_used: n,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream, Stream};
    use proptest::prelude::*;

    fn ar1(n: usize, rho: f64, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, Stream::Data);
        let s = (1.0 - rho * rho).sqrt();
        let mut x = standard_normal::<f64, _>(&mut rng);
        (0..n)
            .map(|_| {
                x = rho * x + s * standard_normal::<f64, _>(&mut rng);
                x
            })
            .collect()
    }

    #[test]
    fn iid_is_near_n() {
        let x = ar1(10_000, 0.0, 1);
        let (e, d) = ess_1d(&x);
        assert!(!d && (9_000.0..=11_000.0).contains(&e), "{e}");
    }

    #[test]
    fn ar1_matches_analytic() {
        let n = 50_000;
        for rho in [0.0, 0.5, 0.9] {
            let (e, _) = ess_1d(&ar1(n, rho, 7));
            let want = n as f64 * (1.0 - rho) / (1.0 + rho);
            assert!((e - want).abs() < 0.1 * want, "rho {rho}: {e} vs {want}");
        }
    }

    #[test]
    fn constant_chain_is_degenerate() {
        let m = Matrix::from_fn(500, 2, |_, j| j as f64);
        let r = ess(&m, 0.1).unwrap();
        assert_eq!(r.per_dim, vec![1.0, 1.0]);
        assert_eq!(r.degenerate, vec![true, true]);
    }

    #[test]
    fn too_short_is_an_error() {
        let m = Matrix::from_fn(105, 1, |i, _| i as f64);
        assert!(ess(&m, 0.1).is_err());
    }

    #[test]
    fn report_summaries() {
        let a = ar1(2_000, 0.0, 2);
        let b = ar1(2_000, 0.9, 3);
        let c = ar1(2_000, 0.5, 4);
        let m = Matrix::from_fn(2_000, 3, |i, j| [a[i], b[i], c[i]][j]);
        let r = ess(&m, 0.1).unwrap();
        assert_eq!(r.n_used, 1_800);
        assert_eq!(r.min, r.per_dim[1]);
        assert_eq!(r.max, r.per_dim[0]);
        assert_eq!(r.median, r.per_dim[2]);
    }

    proptest! {
        #[test]
        fn affine_invariant(scale in 0.01f64..100.0, shift in -50.0f64..50.0, seed in 0u64..1000) {
            let x = ar1(400, 0.6, seed);
            let y: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            let (ex, _) = ess_1d(&x);
            let (ey, _) = ess_1d(&y);
            prop_assert!((ex - ey).abs() <= 1e-8 * ex);
        }

        #[test]
        fn bounded_by_one_and_n(seed in 0u64..1000, rho in -0.9f64..0.99) {
            let x = ar1(300, rho, seed);
            let (e, _) = ess_1d(&x);
            prop_assert!((1.0..=300.0).contains(&e));
        }
    }
}
