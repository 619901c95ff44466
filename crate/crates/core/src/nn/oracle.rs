use super::mlp::{MlpGradientNet, Scratch};
use crate::error::Result;
use crate::samplers::{CostClass, GradientOracle};
use crate::scalar::Real;
use crate::targets::Prior;

/// Gradient oracle backed by a trained network.
pub struct NetOracle<'a, T> {
    net: &'a MlpGradientNet<T>,
    scratch: Scratch<T>,
}

impl<'a, T: Real> NetOracle<'a, T> {
    pub fn new(net: &'a MlpGradientNet<T>) -> Self {
        Self { net, scratch: net.scratch() }
    }
}

impl<T: Real> GradientOracle<T> for NetOracle<'_, T> {
    fn dim(&self) -> usize {
        self.net.dim()
    }
    fn eval(&mut self, q: &[T], grad: &mut [T]) -> Result<()> {
        self.net.forward_into(q, grad, &mut self.scratch);
        Ok(())
    }
    fn cost_class(&self) -> CostClass {
        CostClass::Surrogate
    }
}

/// A network trained under one prior, corrected to another:
/// `base(q) + (∇U_new_prior(q) − ∇U_old_prior(q))`.
pub struct PriorSwapOracle<'a, T> {
    base: NetOracle<'a, T>,
    old: Prior,
    new: Prior,
    buf_old: Vec<T>,
    buf_new: Vec<T>,
}

impl<'a, T: Real> PriorSwapOracle<'a, T> {
    pub fn new(net: &'a MlpGradientNet<T>, old: Prior, new: Prior) -> Self {
        let d = net.dim();
        Self { base: NetOracle::new(net), old, new, buf_old: vec![T::zero(); d], buf_new: vec![T::zero(); d] }
    }
}

impl<T: Real> GradientOracle<T> for PriorSwapOracle<'_, T> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval(&mut self, q: &[T], grad: &mut [T]) -> Result<()> {
        self.base.eval(q, grad)?;
        self.old.gradient_into(q, &mut self.buf_old);
        self.new.gradient_into(q, &mut self.buf_new);
        for ((g, &n), &o) in grad.iter_mut().zip(&self.buf_new).zip(&self.buf_old) {
            *g += n - o;
        }
        Ok(())
    }
    fn cost_class(&self) -> CostClass {
        CostClass::Surrogate
    }
}

/// [`PriorSwapOracle`] output at a single point.
pub fn prior_swap<T: Real>(net: &MlpGradientNet<T>, old: Prior, new: Prior, q: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); q.len()];
    PriorSwapOracle::new(net, old, new).eval(q, &mut out).expect("network oracle is total");
    out
}
