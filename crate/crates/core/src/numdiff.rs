//! Central finite differences, used as an independent check on analytic
//! gradients and Jacobians.

/// Central-difference gradient with step `h·(|q_j|+1)` per coordinate.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, q: &[f64], h: f64) -> Vec<f64> {
    let mut x = q.to_vec();
    (0..q.len())
        .map(|j| {
            let step = h * (q[j].abs() + 1.0);
            x[j] = q[j] + step;
            let up = f(&x);
            x[j] = q[j] - step;
            let down = f(&x);
            x[j] = q[j];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Central-difference Jacobian of `f: R^n -> R^m`, row-major `m x n`.
pub fn central_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut xs = x.to_vec();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        xs[j] = x[j] + h;
        let up = f(&xs);
        xs[j] = x[j] - h;
        let down = f(&xs);
        xs[j] = x[j];
        cols.push(up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h)).collect::<Vec<_>>());
    }
    let m = cols.first().map_or(0, Vec::len);
    (0..m).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

/// Relative error `|a-b| / max(|a|,|b|,floor)` maximized over coordinates.
/// The floor keeps near-zero components from dominating.
pub fn max_rel_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-3 * scale).max(1e-8);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Determinant by partial-pivot LU; intended for the small Jacobians of
/// the volume check.
pub fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .expect("non-empty");
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_cubic() {
        let g = central_gradient(|x| x[0].powi(3) + 2.0 * x[1], &[2.0, -1.0], 1e-5);
        assert!((g[0] - 12.0).abs() < 1e-6);
        assert!((g[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn determinant_of_known_matrix() {
        let d = determinant(vec![vec![0.0, 2.0], vec![3.0, 1.0]]);
        assert!((d + 6.0).abs() < 1e-12);
    }
}
