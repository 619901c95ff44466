//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// Besides the usual arithmetic bounds this carries the two dense
/// symmetric positive-definite kernels the Gaussian-process code needs.
/// They are dispatched per concrete type to `faer`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Widen to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Lower Cholesky factor of a row-major `n x n` SPD matrix, row-major.
    /// `None` when the matrix is not numerically positive definite.
    fn cholesky_lower(a: &[Self], n: usize) -> Option<Vec<Self>>;

    /// Lower factor and full inverse of a row-major SPD matrix.
    fn cholesky_with_inverse(a: &[Self], n: usize) -> Option<(Vec<Self>, Vec<Self>)>;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn cholesky_lower(a: &[Self], n: usize) -> Option<Vec<Self>> {
                debug_assert_eq!(a.len(), n * n);
                let m = faer::Mat::<$t>::from_fn(n, n, |i, j| a[i * n + j]);
                let llt = m.llt(faer::Side::Lower).ok()?;
                let l = llt.L();
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..=i {
                        out[i * n + j] = l[(i, j)];
                    }
                }
                Some(out)
            }

            fn cholesky_with_inverse(a: &[Self], n: usize) -> Option<(Vec<Self>, Vec<Self>)> {
                use faer::linalg::solvers::DenseSolveCore;
                debug_assert_eq!(a.len(), n * n);
                let m = faer::Mat::<$t>::from_fn(n, n, |i, j| a[i * n + j]);
                let llt = m.llt(faer::Side::Lower).ok()?;
                let l = llt.L();
                let mut lower = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..=i {
                        lower[i * n + j] = l[(i, j)];
                    }
                }
                let inv = llt.inverse();
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = inv[(i, j)];
                    }
                }
                Some((lower, out))
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
