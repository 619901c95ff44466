use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{stream, Stream};
use crate::scalar::Real;

/// `ln(1 + eˣ)` without overflow.
#[inline]
pub fn softplus<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `d softplus / dx`.
#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Per-coordinate affine map `(x − mean) / sd`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler<T> {
    pub mean: Vec<T>,
    pub sd: Vec<T>,
}

impl<T: Real> Scaler<T> {
    pub fn identity(d: usize) -> Self {
        Self { mean: vec![T::zero(); d], sd: vec![T::one(); d] }
    }

    /// Column means and sample standard deviations; constant columns get sd 1.
    pub fn fit(m: &Matrix<T>) -> Self {
        let (n, d) = (m.rows(), m.cols());
        let nf = T::lit(n as f64);
        let mut mean = vec![T::zero(); d];
        for i in 0..n {
            for (a, &x) in mean.iter_mut().zip(m.row(i)) {
                *a += x;
            }
        }
        mean.iter_mut().for_each(|a| *a /= nf);
        let mut var = vec![T::zero(); d];
        for i in 0..n {
            for ((v, &x), &mu) in var.iter_mut().zip(m.row(i)).zip(&mean) {
                *v += (x - mu) * (x - mu);
            }
        }
        let denom = T::lit((n.max(2) - 1) as f64);
        let sd = var
            .into_iter()
            .map(|v| {
                let s = (v / denom).sqrt();
                if s > T::zero() && s.is_finite() {
                    s
                } else {
                    T::one()
                }
            })
            .collect();
        Self { mean, sd }
    }
}

/// One hidden layer mapping `input_indices` of the (scaled) position to the
/// gradient coordinates in `output_indices`.
#[derive(Clone, Debug, PartialEq)]
pub struct Block<T> {
    pub w1: Matrix<T>,
    pub b1: Vec<T>,
    pub w2: Matrix<T>,
    pub b2: Vec<T>,
    pub input_indices: Vec<usize>,
    pub output_indices: Vec<usize>,
}

impl<T: Real> Block<T> {
    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    pub fn n_params(&self) -> usize {
        self.w1.as_slice().len() + self.b1.len() + self.w2.as_slice().len() + self.b2.len()
    }

    pub(crate) fn params_mut(&mut self) -> [&mut [T]; 4] {
        [self.w1.as_mut_slice(), &mut self.b1, self.w2.as_mut_slice(), &mut self.b2]
    }
}

/// Architecture: hidden width per block and how outputs are split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub hidden: usize,
    /// Number of blocks; outputs are split into contiguous, near-equal runs
    /// and every block reads the whole input.
    #[serde(default = "one")]
    pub blocks: usize,
}

fn one() -> usize {
    1
}

impl NetSpec {
    pub fn single(hidden: usize) -> Self {
        Self { hidden, blocks: 1 }
    }

    /// Contiguous output partition of `0..dim`.
    pub fn partition(&self, dim: usize) -> Result<Vec<Vec<usize>>> {
        if self.blocks == 0 || self.blocks > dim {
            return Err(Error::InvalidConfig(format!("cannot split {dim} outputs into {} blocks", self.blocks)));
        }
        let (base, extra) = (dim / self.blocks, dim % self.blocks);
        let mut start = 0;
        Ok((0..self.blocks)
            .map(|b| {
                let len = base + usize::from(b < extra);
                let r: Vec<usize> = (start..start + len).collect();
                start += len;
                r
            })
            .collect())
    }
}

/// Reusable buffers for allocation-free forward passes.
#[derive(Clone, Debug, Default)]
pub struct Scratch<T> {
    z: Vec<T>,
    a: Vec<T>,
    o: Vec<T>,
}

/// Gradient-field network `q ↦ ∇̂U(q)`: per block
/// `W2 · softplus(W1 · scale(q) + b1) + b2`, then the output scaler is undone.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGradientNet<T> {
    pub(crate) dim: usize,
    pub(crate) blocks: Vec<Block<T>>,
    pub(crate) input_scaler: Scaler<T>,
    pub(crate) output_scaler: Scaler<T>,
}

impl<T: Real> MlpGradientNet<T> {
    /// Glorot-uniform weights, zero biases, identity scalers.
    pub fn new(dim: usize, spec: &NetSpec, seed: u64) -> Result<Self> {
        let parts = spec.partition(dim)?;
        let all: Vec<usize> = (0..dim).collect();
        Self::with_blocks(dim, parts.into_iter().map(|o| (all.clone(), o)).collect(), spec.hidden, seed)
    }

    /// Explicit `(input_indices, output_indices)` per block. Outputs must
    /// partition `0..dim`.
    pub fn with_blocks(dim: usize, layout: Vec<(Vec<usize>, Vec<usize>)>, hidden: usize, seed: u64) -> Result<Self> {
        let mut seen = vec![false; dim];
        for (inputs, outputs) in &layout {
            if inputs.is_empty() || inputs.iter().any(|&i| i >= dim) {
                return Err(Error::InvalidConfig("block inputs must be non-empty indices below dim".into()));
            }
            for &o in outputs {
                if o >= dim || seen[o] {
                    return Err(Error::InvalidConfig(format!("output index {o} repeated or out of range")));
                }
                seen[o] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidConfig("block outputs must cover every coordinate".into()));
        }
        let mut rng = stream(seed, Stream::Init);
        let mut glorot = |rows: usize, cols: usize| {
            let lim = (6.0 / (rows + cols).max(1) as f64).sqrt();
            Matrix::from_fn(rows, cols, |_, _| T::lit(rng.random_range(-lim..=lim)))
        };
        let blocks = layout
            .into_iter()
            .map(|(inputs, outputs)| Block {
                w1: glorot(hidden, inputs.len()),
                b1: vec![T::zero(); hidden],
                w2: glorot(outputs.len(), hidden),
                b2: vec![T::zero(); outputs.len()],
                input_indices: inputs,
                output_indices: outputs,
            })
            .collect();
        Ok(Self { dim, blocks, input_scaler: Scaler::identity(dim), output_scaler: Scaler::identity(dim) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block<T>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block<T>] {
        &mut self.blocks
    }

    pub fn input_scaler(&self) -> &Scaler<T> {
        &self.input_scaler
    }

    pub fn output_scaler(&self) -> &Scaler<T> {
        &self.output_scaler
    }

    pub fn set_scalers(&mut self, input: Scaler<T>, output: Scaler<T>) -> Result<()> {
        for s in [&input, &output] {
            if s.mean.len() != self.dim || s.sd.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: s.mean.len() });
            }
        }
        self.input_scaler = input;
        self.output_scaler = output;
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.blocks.iter().map(Block::n_params).sum()
    }

    pub fn scratch(&self) -> Scratch<T> {
        Scratch { z: vec![T::zero(); self.dim], a: Vec::new(), o: Vec::new() }
    }

    /// Network output in standardized label units for block `b`, given the
    /// already-scaled input `z`. Writes hidden activations into `a`.
    pub(crate) fn block_raw(&self, b: usize, z: &[T], a: &mut Vec<T>, out: &mut [T]) {
        let blk = &self.blocks[b];
        let h = blk.hidden();
        a.clear();
        for k in 0..h {
            let w = blk.w1.row(k);
            let mut s = blk.b1[k];
            for (&wi, &i) in w.iter().zip(&blk.input_indices) {
                s += wi * z[i];
            }
            a.push(softplus(s));
        }
        for (o, slot) in out.iter_mut().enumerate() {
            *slot = blk.b2[o] + crate::linalg::dot(blk.w2.row(o), a);
        }
    }

    pub(crate) fn scale_input(&self, q: &[T], z: &mut [T]) {
        let s = &self.input_scaler;
        for j in 0..self.dim {
            z[j] = (q[j] - s.mean[j]) / s.sd[j];
        }
    }

    /// `∇̂U(q)` into `out`, reusing `scratch`.
    pub fn forward_into(&self, q: &[T], out: &mut [T], scratch: &mut Scratch<T>) {
        assert_eq!(q.len(), self.dim, "network input has wrong dimension");
        scratch.z.resize(self.dim, T::zero());
        let Scratch { z, a, o: buf } = scratch;
        self.scale_input(q, z);
        for b in 0..self.blocks.len() {
            let blk = &self.blocks[b];
            buf.resize(blk.output_indices.len(), T::zero());
            self.block_raw(b, z, a, buf);
            for (&o, &v) in blk.output_indices.iter().zip(buf.iter()) {
                out[o] = v * self.output_scaler.sd[o] + self.output_scaler.mean[o];
            }
        }
    }

    pub fn forward(&self, q: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.forward_into(q, &mut out, &mut self.scratch());
        out
    }
}
