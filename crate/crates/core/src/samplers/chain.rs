use std::path::Path;

use serde::{Deserialize, Serialize};

use super::oracle::CostClass;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Wall-clock seconds per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub collection: f64,
    pub training: f64,
    pub sampling: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.collection + self.training + self.sampling
    }
}

/// Evaluation counts by kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub full_gradient_evals: u64,
    pub surrogate_evals: u64,
    pub minibatch_evals: u64,
    pub potential_evals: u64,
}

impl Counters {
    pub fn record_gradient(&mut self, class: CostClass, n: u64) {
        match class {
            CostClass::FullData => self.full_gradient_evals += n,
            CostClass::Surrogate => self.surrogate_evals += n,
            CostClass::Minibatch => self.minibatch_evals += n,
        }
    }

    pub fn gradient_evals(&self) -> u64 {
        self.full_gradient_evals + self.surrogate_evals + self.minibatch_evals
    }
}

/// Ordered draws with per-iteration diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain<T> {
    pub draws: Matrix<T>,
    pub accepted: Vec<bool>,
    /// `H(end) − H(start)`; NaN where no Metropolis test ran.
    pub delta_h: Vec<f64>,
    pub divergent: Vec<bool>,
    pub oracle: Vec<CostClass>,
    pub timings: Option<PhaseTimings>,
    pub counters: Counters,
}

impl<T: Real> Chain<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            draws: Matrix::zeros(0, dim),
            accepted: Vec::new(),
            delta_h: Vec::new(),
            divergent: Vec::new(),
            oracle: Vec::new(),
            timings: None,
            counters: Counters::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.draws.cols()
    }

    pub fn push(&mut self, q: &[T], accepted: bool, delta_h: f64, divergent: bool, oracle: CostClass) {
        self.draws.push_row(q).expect("draw dimension is fixed by the chain");
        self.accepted.push(accepted);
        self.delta_h.push(delta_h);
        self.divergent.push(divergent);
        self.oracle.push(oracle);
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance_between(0, self.len())
    }

    pub fn acceptance_between(&self, from: usize, to: usize) -> f64 {
        let to = to.min(self.len());
        if from >= to {
            return f64::NAN;
        }
        self.accepted[from..to].iter().filter(|&&a| a).count() as f64 / (to - from) as f64
    }

    /// Acceptance over the iterations that used a given oracle class.
    pub fn acceptance_for(&self, class: CostClass) -> f64 {
        let (mut n, mut a) = (0usize, 0usize);
        for (acc, c) in self.accepted.iter().zip(&self.oracle) {
            if *c == class {
                n += 1;
                a += *acc as usize;
            }
        }
        if n == 0 {
            f64::NAN
        } else {
            a as f64 / n as f64
        }
    }

    pub fn draws_f64(&self) -> Matrix<f64> {
        self.draws.cast()
    }

    /// The same chain with draws in double precision.
    pub fn to_f64(&self) -> Chain<f64> {
        Chain {
            draws: self.draws.cast(),
            accepted: self.accepted.clone(),
            delta_h: self.delta_h.clone(),
            divergent: self.divergent.clone(),
            oracle: self.oracle.clone(),
            timings: self.timings,
            counters: self.counters,
        }
    }

    /// Append another chain's iterations and counters.
    pub fn extend(&mut self, other: &Chain<T>) {
        for i in 0..other.len() {
            self.push(other.draws.row(i), other.accepted[i], other.delta_h[i], other.divergent[i], other.oracle[i]);
        }
        let c = &other.counters;
        self.counters.full_gradient_evals += c.full_gradient_evals;
        self.counters.surrogate_evals += c.surrogate_evals;
        self.counters.minibatch_evals += c.minibatch_evals;
        self.counters.potential_evals += c.potential_evals;
    }

    /// One row per draw: `iteration,accepted,delta_h,oracle,q0,..`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["iteration".to_string(), "accepted".into(), "delta_h".into(), "oracle".into()];
        header.extend((0..self.dim()).map(|j| format!("q{j}")));
        w.write_record(&header)?;
        let mut rec = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            rec.clear();
            rec.push(i.to_string());
            rec.push((self.accepted[i] as u8).to_string());
            rec.push(format!("{:?}", self.delta_h[i]));
            rec.push(self.oracle[i].as_str().to_string());
            rec.extend(self.draws.row(i).iter().map(|v| format!("{:?}", v.as_f64())));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Chain<f64> {
    /// Read a `draws.csv` written by [`Chain::write_csv`]. Timings are not
    /// stored in the CSV and come back as `None`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let dim = header.iter().filter(|h| h.starts_with('q')).count();
        for col in ["iteration", "accepted", "delta_h", "oracle"] {
            if !header.iter().any(|h| h == col) {
                return Err(Error::MissingColumn(col.into()));
            }
        }
        let mut chain = Chain::new(dim);
        let mut bad = Vec::new();
        let mut q = vec![0.0; dim];
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let parsed = (|| {
                let accepted = rec.get(1)? == "1";
                let dh: f64 = rec.get(2)?.parse().ok()?;
                let oracle = CostClass::parse(rec.get(3)?)?;
                for (j, slot) in q.iter_mut().enumerate() {
                    *slot = rec.get(4 + j)?.parse().ok()?;
                }
                Some((accepted, dh, oracle))
            })();
            match parsed {
                Some((a, dh, o)) => chain.push(&q, a, dh, false, o),
                None => bad.push(line),
            }
        }
        if !bad.is_empty() {
            return Err(Error::MalformedRows { lines: bad, reason: "unparseable draw row".into() });
        }
        Ok(chain)
    }
}
