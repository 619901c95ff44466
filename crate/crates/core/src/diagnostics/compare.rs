use serde::{Deserialize, Serialize};

use super::ess::ess_1d;
use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;

/// Per-dimension discrepancies between two chains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainComparison {
    /// Two-sample Kolmogorov–Smirnov statistic.
    pub ks: Vec<f64>,
    /// `|Δmean| / √(var_a/ess_a + var_b/ess_b)`.
    pub mean_gap_se: Vec<f64>,
    /// `|Δvar|` over the joint standard error of the two sample variances.
    pub variance_gap_se: Vec<f64>,
}

impl ChainComparison {
    pub fn max_ks(&self) -> f64 {
        self.ks.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_mean_gap_se(&self) -> f64 {
        self.mean_gap_se.iter().copied().fold(0.0, f64::max)
    }
}

/// `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

struct Moments {
    mean: f64,
    var: f64,
    m4: f64,
    ess: f64,
}

fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let (ess, _) = ess_1d(x);
    Moments { mean, var, m4, ess }
}

fn gap(diff: f64, se2: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se2 > 0.0 {
        diff.abs() / se2.sqrt()
    } else {
        f64::INFINITY
    }
}

/// Compare two chains column by column after dropping `burn_in` of each.
pub fn compare_chains(a: &Matrix<f64>, b: &Matrix<f64>, burn_in: f64) -> Result<ChainComparison> {
    check_dim(a.cols(), b.cols())?;
    let sa = super::after_burn_in(a.rows(), burn_in);
    let sb = super::after_burn_in(b.rows(), burn_in);
    if a.rows() - sa < 2 || b.rows() - sb < 2 {
        return Err(Error::InvalidConfig("chains too short to compare".into()));
    }
    let mut out = ChainComparison { ks: Vec::new(), mean_gap_se: Vec::new(), variance_gap_se: Vec::new() };
    for j in 0..a.cols() {
        let xa: Vec<f64> = (sa..a.rows()).map(|i| a.get(i, j)).collect();
        let xb: Vec<f64> = (sb..b.rows()).map(|i| b.get(i, j)).collect();
        out.ks.push(ks_distance(&xa, &xb));
        let (ma, mb) = (moments(&xa), moments(&xb));
        out.mean_gap_se.push(gap(ma.mean - mb.mean, ma.var / ma.ess + mb.var / mb.ess));
        let va = (ma.m4 - ma.var * ma.var).max(0.0) / ma.ess;
        let vb = (mb.m4 - mb.var * mb.var).max(0.0) / mb.ess;
        out.variance_gap_se.push(gap(ma.var - mb.var, va + vb));
    }
    Ok(out)
}
