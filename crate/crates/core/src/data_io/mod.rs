//! Synthetic generators and CSV ingestion.

mod csv_io;
mod generators;

pub use csv_io::{load_csv, save_csv, CsvSchema, LabelRule};
pub use generators::{gen_garch, gen_gp_regression, gen_logistic, gen_logistic_with_beta, gp_polynomial};

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

/// Column statistics removed by opt-in standardization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub column: String,
    pub mean: f64,
    pub sd: f64,
}

/// Where a dataset came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Generator {
        name: String,
        seed: u64,
        params: serde_json::Value,
    },
    File {
        path: String,
        rows_read: usize,
        subsample: Option<Subsample>,
        label_rule: LabelRule,
        standardized: Vec<ColumnScaling>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsample {
    pub rows: usize,
    pub seed: u64,
}

/// Design matrix plus response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix<f64>,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    /// First `rows` rows, keeping provenance.
    pub fn head(&self, rows: usize) -> Dataset {
        let idx: Vec<usize> = (0..rows.min(self.n())).collect();
        Dataset {
            x: self.x.select_rows(&idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

pub(crate) fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}
