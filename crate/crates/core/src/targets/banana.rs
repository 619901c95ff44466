use super::{assert_dim, TargetModel};
use crate::error::Result;
use crate::scalar::Real;

/// Two-dimensional banana:
/// `U(x) = (A x₁)²/200 + ½ (C x₂ + B (A x₁)² − 100 B)²`.
///
/// `A` and `C` scale the two axes, `B` bends the ridge.
#[derive(Clone, Debug)]
pub struct BananaTarget<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Real> BananaTarget<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Self { a, b, c }
    }

    /// Ridge residual `C x₂ + B (A x₁)² − 100 B`.
    #[inline]
    fn residual(&self, q: &[T]) -> T {
        let ax = self.a * q[0];
        self.c * q[1] + self.b * ax * ax - T::lit(100.0) * self.b
    }

    /// The minimizer `(0, 100B/C)`.
    pub fn mode(&self) -> [T; 2] {
        [T::zero(), T::lit(100.0) * self.b / self.c]
    }
}

impl<T: Real> TargetModel<T> for BananaTarget<T> {
    fn dim(&self) -> usize {
        2
    }

    fn potential(&self, q: &[T]) -> T {
        assert_dim(2, q.len());
        let ax = self.a * q[0];
        let s = self.residual(q);
        ax * ax / T::lit(200.0) + T::lit(0.5) * s * s
    }

    fn gradient(&self, q: &[T], grad: &mut [T]) -> Result<()> {
        assert_dim(2, q.len());
        let a2 = self.a * self.a;
        let s = self.residual(q);
        grad[0] = a2 * q[0] / T::lit(100.0) + s * T::lit(2.0) * self.b * a2 * q[0];
        grad[1] = s * self.c;
        Ok(())
    }

    fn name(&self) -> &str {
        "banana"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::fd::gradient_rel_error;
    use rand::Rng;

    #[test]
    fn potential_vanishes_at_mode() {
        let t = BananaTarget::new(1.0, 0.1, 1.0);
        assert_eq!(t.potential(&[0.0, 10.0]), 0.0);
        let mut g = [1.0; 2];
        t.gradient(&[0.0, 10.0], &mut g).unwrap();
        assert_eq!(g, [0.0, 0.0]);
        assert_eq!(t.mode(), [0.0, 10.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = crate::rng::stream(3, crate::rng::Stream::Data);
        for (a, b, c) in [(1.0, 0.1, 1.0), (2.0, 0.05, 17.4)] {
            let t = BananaTarget::new(a, b, c);
            for _ in 0..100 {
                let q = [rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0)];
                assert!(gradient_rel_error(&t, &q, 1e-5) < 1e-5);
            }
        }
    }

    #[test]
    fn density_normalizes_on_a_grid() {
        // ∫∫ exp(-U) = √(2π)·10/A · √(2π)/C in closed form
        let t = BananaTarget::new(1.0f64, 0.1, 1.0);
        let (h1, h2) = (0.05, 0.01);
        let mut z = 0.0;
        let mut x1 = -60.0;
        while x1 <= 60.0 {
            // integrate x2 only where the ridge lives
            let centre = 10.0 - 0.1 * x1 * x1;
            let mut x2 = centre - 10.0;
            while x2 <= centre + 10.0 {
                z += (-t.potential(&[x1, x2])).exp() * h1 * h2;
                x2 += h2;
            }
            x1 += h1;
        }
        let exact = 2.0 * std::f64::consts::PI * 10.0;
        assert!(z.is_finite());
        assert!((z - exact).abs() / exact < 1e-3, "z = {z}");
    }
}
