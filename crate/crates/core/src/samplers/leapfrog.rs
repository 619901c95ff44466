use super::oracle::GradientOracle;
use crate::scalar::Real;

/// How an integration ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub divergent: bool,
    pub oracle_calls: usize,
}

#[inline]
fn finite<T: Real>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Leapfrog with a caller-supplied momentum update `kick(p, ∇̂U, duration)`.
///
/// Half kick, then `steps` drifts each followed by a kick (full, except the
/// last which is a half kick). `steps + 1` oracle calls when nothing fails.
/// A failing oracle or a non-finite state stops the trajectory as divergent.
pub fn leapfrog_with_kick<T, O, K>(
    oracle: &mut O,
    q: &mut [T],
    p: &mut [T],
    steps: usize,
    eps: T,
    grad: &mut [T],
    mut kick: K,
) -> Trajectory
where
    T: Real,
    O: GradientOracle<T> + ?Sized,
    K: FnMut(&mut [T], &[T], T),
{
    let half = eps * T::lit(0.5);
    let mut calls = 1;
    let diverged = |calls| Trajectory { divergent: true, oracle_calls: calls };
    if oracle.eval(q, grad).is_err() || !finite(grad) {
        return diverged(calls);
    }
    kick(p, grad, half);
    for s in 0..steps {
        for (qi, &pi) in q.iter_mut().zip(p.iter()) {
            *qi += eps * pi;
        }
        if !finite(q) {
            return diverged(calls);
        }
        calls += 1;
        if oracle.eval(q, grad).is_err() || !finite(grad) {
            return diverged(calls);
        }
        kick(p, grad, if s + 1 == steps { half } else { eps });
        if !finite(p) {
            return diverged(calls);
        }
    }
    Trajectory { divergent: false, oracle_calls: calls }
}

/// Standard leapfrog for `H = U(q) + ½pᵀp`, updating `q` and `p` in place.
pub fn leapfrog<T, O>(oracle: &mut O, q: &mut [T], p: &mut [T], steps: usize, eps: T, grad: &mut [T]) -> Trajectory
where
    T: Real,
    O: GradientOracle<T> + ?Sized,
{
    leapfrog_with_kick(oracle, q, p, steps, eps, grad, |p, g, h| {
        for (pi, &gi) in p.iter_mut().zip(g) {
            *pi -= h * gi;
        }
    })
}
