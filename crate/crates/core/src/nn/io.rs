use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Block, MlpGradientNet, Scaler};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

const FORMAT: &str = "nnghmc-mlp";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Array2 {
    shape: [usize; 2],
    data: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct BlockFile {
    input_indices: Vec<usize>,
    output_indices: Vec<usize>,
    w1: Array2,
    b1: Vec<f64>,
    w2: Array2,
    b2: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScalerFile {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct NetFile {
    format: String,
    version: u32,
    activation: String,
    dim: usize,
    input_scaler: ScalerFile,
    output_scaler: ScalerFile,
    blocks: Vec<BlockFile>,
}

fn to64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn from64<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn arr<T: Real>(m: &Matrix<T>) -> Array2 {
    Array2 { shape: [m.rows(), m.cols()], data: (0..m.rows()).map(|i| to64(m.row(i))).collect() }
}

fn mat<T: Real>(a: &Array2) -> Result<Matrix<T>> {
    if a.data.len() != a.shape[0] || a.data.iter().any(|r| r.len() != a.shape[1]) {
        return Err(Error::NetFormat(format!("array does not match its shape {:?}", a.shape)));
    }
    let flat: Vec<T> = a.data.iter().flat_map(|r| r.iter().map(|&x| T::lit(x))).collect();
    Matrix::from_vec(a.shape[0], a.shape[1], flat)
}

impl<T: Real> MlpGradientNet<T> {
    /// Versioned JSON with nested weight arrays, shapes, scalers and block maps.
    pub fn to_json(&self) -> Result<String> {
        let sc = |s: &Scaler<T>| ScalerFile { mean: to64(&s.mean), sd: to64(&s.sd) };
        let file = NetFile {
            format: FORMAT.into(),
            version: VERSION,
            activation: "softplus".into(),
            dim: self.dim,
            input_scaler: sc(&self.input_scaler),
            output_scaler: sc(&self.output_scaler),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockFile {
                    input_indices: b.input_indices.clone(),
                    output_indices: b.output_indices.clone(),
                    w1: arr(&b.w1),
                    b1: to64(&b.b1),
                    w2: arr(&b.w2),
                    b2: to64(&b.b2),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: NetFile = serde_json::from_str(s)?;
        if f.format != FORMAT || f.version != VERSION {
            return Err(Error::NetFormat(format!("{} v{}", f.format, f.version)));
        }
        if f.activation != "softplus" {
            return Err(Error::NetFormat(format!("activation {}", f.activation)));
        }
        let layout: Vec<(Vec<usize>, Vec<usize>)> =
            f.blocks.iter().map(|b| (b.input_indices.clone(), b.output_indices.clone())).collect();
        let hidden = f.blocks.first().map_or(0, |b| b.b1.len());
        let mut net = MlpGradientNet::with_blocks(f.dim, layout, hidden, 0)?;
        for (dst, src) in net.blocks.iter_mut().zip(&f.blocks) {
            let blk = Block {
                w1: mat(&src.w1)?,
                b1: from64(&src.b1),
                w2: mat(&src.w2)?,
                b2: from64(&src.b2),
                input_indices: src.input_indices.clone(),
                output_indices: src.output_indices.clone(),
            };
            let h = blk.b1.len();
            if blk.w1.rows() != h
                || blk.w1.cols() != blk.input_indices.len()
                || blk.w2.rows() != blk.output_indices.len()
                || blk.w2.cols() != h
                || blk.b2.len() != blk.output_indices.len()
            {
                return Err(Error::NetFormat("block shapes are inconsistent".into()));
            }
            *dst = blk;
        }
        let sc = |s: &ScalerFile| Scaler { mean: from64(&s.mean), sd: from64(&s.sd) };
        net.set_scalers(sc(&f.input_scaler), sc(&f.output_scaler))?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
