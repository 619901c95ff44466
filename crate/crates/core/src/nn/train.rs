use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::mlp::{sigmoid, MlpGradientNet, Scaler};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{stream, Stream};
use crate::samplers::TrainingSet;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub seed: u64,
    /// Fit the loss on standardized labels and undo the scaling at forward
    /// time, so the network still outputs gradients in physical units.
    #[serde(default = "default_true")]
    pub standardize_labels: bool,
}

fn default_batch() -> usize {
    32
}

fn default_true() -> bool {
    true
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        Self { epochs, batch_size: 32, adam: AdamConfig::default(), seed, standardize_labels: true }
    }
}

/// Loss history of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Full-data loss before the first update.
    pub initial_loss: f64,
    /// Mean minibatch loss per epoch.
    pub epoch_losses: Vec<f64>,
    /// Full-data loss after the last update.
    pub final_loss: f64,
    pub updates: u64,
    pub n_train: usize,
}

/// Loss gradients shaped like the network: per block `[W1, b1, W2, b2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grads<T> {
    pub blocks: Vec<[Vec<T>; 4]>,
}

impl<T: Real> Grads<T> {
    pub fn zeros_like(net: &MlpGradientNet<T>) -> Self {
        Self {
            blocks: net
                .blocks()
                .iter()
                .map(|b| {
                    [
                        vec![T::zero(); b.w1.as_slice().len()],
                        vec![T::zero(); b.b1.len()],
                        vec![T::zero(); b.w2.as_slice().len()],
                        vec![T::zero(); b.b2.len()],
                    ]
                })
                .collect(),
        }
    }

    fn clear(&mut self) {
        for b in &mut self.blocks {
            for g in b.iter_mut() {
                g.fill(T::zero());
            }
        }
    }
}

fn scale_with<T: Real>(m: &Matrix<T>, s: &Scaler<T>) -> Matrix<T> {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| (m.get(i, j) - s.mean[j]) / s.sd[j])
}

/// Mean squared error over `rows` and all outputs, on pre-scaled inputs `z`
/// and standardized labels `t`; accumulates `∂loss/∂weights` into `grads`.
fn backprop_scaled<T: Real>(
    net: &MlpGradientNet<T>,
    z: &Matrix<T>,
    t: &Matrix<T>,
    rows: &[usize],
    grads: &mut Grads<T>,
) -> T {
    let d = net.dim();
    let norm = T::lit((rows.len() * d) as f64);
    let two_over = T::lit(2.0) / norm;
    let mut loss = T::zero();
    let mut pre = Vec::new();
    let mut act = Vec::new();
    let mut dout = Vec::new();
    let mut da = Vec::new();
    for (bi, blk) in net.blocks().iter().enumerate() {
        let h = blk.hidden();
        let [gw1, gb1, gw2, gb2] = &mut grads.blocks[bi];
        let din = blk.input_indices.len();
        for &r in rows {
            let zr = z.row(r);
            pre.clear();
            act.clear();
            for k in 0..h {
                let mut s = blk.b1[k];
                for (&w, &i) in blk.w1.row(k).iter().zip(&blk.input_indices) {
                    s += w * zr[i];
                }
                pre.push(s);
                act.push(super::mlp::softplus(s));
            }
            dout.clear();
            for (o, &oi) in blk.output_indices.iter().enumerate() {
                let y = blk.b2[o] + crate::linalg::dot(blk.w2.row(o), &act);
                let e = y - t.get(r, oi);
                loss += e * e;
                dout.push(two_over * e);
            }
            da.clear();
            da.resize(h, T::zero());
            for (o, &g) in dout.iter().enumerate() {
                gb2[o] += g;
                let w2row = blk.w2.row(o);
                let grow = &mut gw2[o * h..(o + 1) * h];
                for k in 0..h {
                    grow[k] += g * act[k];
                    da[k] += g * w2row[k];
                }
            }
            for k in 0..h {
                let dp = da[k] * sigmoid(pre[k]);
                gb1[k] += dp;
                let grow = &mut gw1[k * din..(k + 1) * din];
                for (gw, &i) in grow.iter_mut().zip(&blk.input_indices) {
                    *gw += dp * zr[i];
                }
            }
        }
    }
    loss / norm
}

/// Loss of `net` on physical-unit `(inputs, labels)`: inputs pass through the
/// input scaler and labels through the output scaler before the squared error.
pub fn batch_loss<T: Real>(net: &MlpGradientNet<T>, inputs: &Matrix<T>, labels: &Matrix<T>) -> T {
    let mut g = Grads::zeros_like(net);
    backprop_gradient_into(net, inputs, labels, &mut g)
}

/// Exact gradient of [`batch_loss`] with respect to every weight and bias.
pub fn backprop_gradient<T: Real>(net: &MlpGradientNet<T>, inputs: &Matrix<T>, labels: &Matrix<T>) -> (T, Grads<T>) {
    let mut g = Grads::zeros_like(net);
    let l = backprop_gradient_into(net, inputs, labels, &mut g);
    (l, g)
}

fn backprop_gradient_into<T: Real>(
    net: &MlpGradientNet<T>,
    inputs: &Matrix<T>,
    labels: &Matrix<T>,
    g: &mut Grads<T>,
) -> T {
    assert!(inputs.rows() > 0, "backprop needs a non-empty batch");
    let z = scale_with(inputs, net.input_scaler());
    let t = scale_with(labels, net.output_scaler());
    let rows: Vec<usize> = (0..inputs.rows()).collect();
    backprop_scaled(net, &z, &t, &rows, g)
}

/// Fit scalers to `data`, then run `cfg.epochs` epochs of shuffled minibatch
/// Adam on the mean squared error. A batch size above the data size is
/// clamped to it.
pub fn train<T: Real>(net: &mut MlpGradientNet<T>, data: &TrainingSet<T>, cfg: &TrainConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    crate::error::check_dim(net.dim(), data.dim())?;
    if cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be positive".into()));
    }
    let input = Scaler::fit(&data.inputs);
    let output = if cfg.standardize_labels { Scaler::fit(&data.labels) } else { Scaler::identity(net.dim()) };
    net.set_scalers(input, output)?;
    let z = scale_with(&data.inputs, net.input_scaler());
    let t = scale_with(&data.labels, net.output_scaler());
    let n = data.len();
    let all: Vec<usize> = (0..n).collect();
    let mut grads = Grads::zeros_like(net);
    let initial_loss = backprop_scaled(net, &z, &t, &all, &mut grads).as_f64();
    let mut adam = AdamState::new(net, cfg.adam);
    let mut rng = stream(cfg.seed, Stream::Shuffle);
    let mut order = all.clone();
    let batch = cfg.batch_size.min(n);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut count) = (0.0, 0usize);
        for chunk in order.chunks(batch) {
            grads.clear();
            sum += backprop_scaled(net, &z, &t, chunk, &mut grads).as_f64();
            count += 1;
            adam.update(net, &grads);
        }
        epoch_losses.push(sum / count as f64);
    }
    grads.clear();
    let final_loss = backprop_scaled(net, &z, &t, &all, &mut grads).as_f64();
    Ok(TrainReport { initial_loss, epoch_losses, final_loss, updates: adam.t, n_train: n })
}

impl Grads<f64> {
    /// All entries in block, then `[W1, b1, W2, b2]`, order.
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.iter().flatten().copied()).collect()
    }
}

/// Central differences of [`batch_loss`] over every parameter, in
/// [`Grads::flatten`] order.
pub fn finite_difference_weights(net: &MlpGradientNet<f64>, inputs: &Matrix<f64>, labels: &Matrix<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    let mut probe = net.clone();
    for b in 0..net.blocks.len() {
        for f in 0..4 {
            let len = probe.blocks[b].params_mut()[f].len();
            for i in 0..len {
                let w = probe.blocks[b].params_mut()[f][i];
                let h = 1e-6 * (w.abs() + 1.0);
                probe.blocks[b].params_mut()[f][i] = w + h;
                let up = batch_loss(&probe, inputs, labels);
                probe.blocks[b].params_mut()[f][i] = w - h;
                let down = batch_loss(&probe, inputs, labels);
                probe.blocks[b].params_mut()[f][i] = w;
                out.push((up - down) / (2.0 * h));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::mlp::NetSpec;
    use crate::numdiff::max_rel_error;
    use rand::Rng;

    fn random_set(n: usize, d: usize, seed: u64, f: impl Fn(&[f64]) -> Vec<f64>) -> TrainingSet<f64> {
        let mut rng = stream(seed, Stream::Data);
        let mut s = TrainingSet::new(d);
        for _ in 0..n {
            let q: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            s.push(&q, &f(&q)).unwrap();
        }
        s
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = stream(99, Stream::Data);
        for trial in 0..20 {
            let d = 3;
            let spec = NetSpec { hidden: rng.random_range(1..6), blocks: 1 + trial % 3 };
            let mut net = MlpGradientNet::<f64>::new(d, &spec, trial as u64).unwrap();
            for b in net.blocks_mut() {
                for v in b.b1.iter_mut().chain(b.b2.iter_mut()) {
                    *v = rng.random_range(-0.5..0.5);
                }
            }
            let set = random_set(7, d, trial as u64, |q| vec![q[0] * q[1], q[2].sin(), q[0] - q[2]]);
            net.set_scalers(Scaler::fit(&set.inputs), Scaler::fit(&set.labels)).unwrap();
            let (_, g) = backprop_gradient(&net, &set.inputs, &set.labels);
            let fd = finite_difference_weights(&net, &set.inputs, &set.labels);
            let err = max_rel_error(&g.flatten(), &fd);
            assert!(err < 1e-4, "trial {trial}: {err}");
        }
    }

    #[test]
    fn zero_error_batch_has_zero_gradient() {
        let net = MlpGradientNet::<f64>::new(2, &NetSpec::single(3), 5).unwrap();
        let set = random_set(10, 2, 1, |q| net.forward(q));
        let (loss, g) = backprop_gradient(&net, &set.inputs, &set.labels);
        assert!(loss.abs() < 1e-28);
        assert!(g.flatten().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn duplicating_rows_keeps_mean_gradient() {
        let net = MlpGradientNet::<f64>::new(2, &NetSpec::single(3), 5).unwrap();
        let set = random_set(6, 2, 2, |q| vec![q[0] * 2.0, -q[1]]);
        let mut twice = set.clone();
        for i in 0..set.len() {
            twice.push(set.inputs.row(i), set.labels.row(i)).unwrap();
        }
        let (_, a) = backprop_gradient(&net, &set.inputs, &set.labels);
        let (_, b) = backprop_gradient(&net, &twice.inputs, &twice.labels);
        assert!(max_rel_error(&a.flatten(), &b.flatten()) < 1e-12);
    }

    #[test]
    fn already_optimal_net_stays_put() {
        let mut net = MlpGradientNet::<f64>::new(3, &NetSpec::single(4), 2).unwrap();
        for b in net.blocks_mut() {
            b.w2.as_mut_slice().fill(0.0);
            b.b2.fill(0.0);
        }
        let before = net.clone();
        let set = random_set(64, 3, 3, |_| vec![0.0; 3]);
        let rep = train(&mut net, &set, &TrainConfig::new(3, 1)).unwrap();
        assert_eq!(rep.initial_loss, 0.0);
        assert_eq!(rep.final_loss, 0.0);
        for (a, b) in net.blocks.iter().zip(&before.blocks) {
            assert_eq!(a.w1, b.w1);
            assert_eq!(a.w2, b.w2);
        }
    }

    #[test]
    fn learns_a_linear_field() {
        let mut rng = stream(17, Stream::Data);
        let m: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let field = |q: &[f64]| (0..5).map(|i| (0..5).map(|j| m[i * 5 + j] * q[j]).sum()).collect::<Vec<f64>>();
        let set = random_set(1000, 5, 4, field);
        let mut net = MlpGradientNet::<f64>::new(5, &NetSpec::single(100), 8).unwrap();
        let mut cfg = TrainConfig::new(200, 3);
        cfg.standardize_labels = false;
        let rep = train(&mut net, &set, &cfg).unwrap();
        assert!(rep.final_loss < rep.initial_loss);
        let label_ms = set.labels.as_slice().iter().map(|v| v * v).sum::<f64>() / set.labels.as_slice().len() as f64;
        assert!(rep.final_loss.sqrt() < 0.01 * label_ms.sqrt(), "rmse {} vs rms {}", rep.final_loss.sqrt(), label_ms.sqrt());
    }

    #[test]
    fn training_is_deterministic() {
        let set = random_set(200, 3, 6, |q| vec![q[0], q[1] * q[1], -q[2]]);
        let run = || {
            let mut net = MlpGradientNet::<f64>::new(3, &NetSpec::single(10), 1).unwrap();
            train(&mut net, &set, &TrainConfig::new(5, 2)).unwrap();
            net
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_set_is_an_error() {
        let mut net = MlpGradientNet::<f64>::new(2, &NetSpec::single(3), 1).unwrap();
        assert!(matches!(train(&mut net, &TrainingSet::new(2), &TrainConfig::new(1, 1)), Err(Error::EmptyTrainingSet)));
    }
}
