use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{ColumnScaling, Dataset, Provenance, Subsample};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{stream, Stream};

/// How the raw label column maps to the response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LabelRule {
    /// Keep numeric values as they are (regression).
    Numeric,
    /// Values must already be 0 or 1.
    ZeroOne,
    /// `1` when the raw field equals `value`, else `0`.
    Equals { value: String },
}

/// What to read from a CSV with a header row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label: String,
    /// Feature columns in order; `None` takes every column but the label.
    #[serde(default)]
    pub features: Option<Vec<String>>,
    pub label_rule: LabelRule,
    #[serde(default)]
    pub subsample: Option<Subsample>,
    /// Columns to centre and scale to unit sample variance.
    #[serde(default)]
    pub standardize: Vec<String>,
}

impl CsvSchema {
    pub fn binary(label: &str) -> Self {
        Self {
            label: label.into(),
            features: None,
            label_rule: LabelRule::ZeroOne,
            subsample: None,
            standardize: Vec::new(),
        }
    }
}

fn parse_label(raw: &str, rule: &LabelRule, line: u64) -> std::result::Result<f64, Error> {
    let raw = raw.trim();
    match rule {
        LabelRule::Equals { value } => Ok(if raw == value { 1.0 } else { 0.0 }),
        LabelRule::Numeric | LabelRule::ZeroOne => {
            let v: f64 = raw.parse().map_err(|_| Error::MalformedRows {
                lines: vec![line],
                reason: format!("label {raw:?} is not numeric"),
            })?;
            if matches!(rule, LabelRule::ZeroOne) && v != 0.0 && v != 1.0 {
                return Err(Error::NonBinaryLabel { line, value: raw.into() });
            }
            Ok(v)
        }
    }
}

/// Read a numeric CSV into a [`Dataset`].
///
/// Every malformed row is reported by its 1-based file line. Subsampling
/// draws a seeded row set (kept in file order) before standardization.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let label_col = find(&schema.label)?;
    let feature_names: Vec<String> = match &schema.features {
        Some(f) => f.clone(),
        None => header.iter().filter(|h| **h != schema.label).cloned().collect(),
    };
    let feature_cols = feature_names.iter().map(|f| find(f)).collect::<Result<Vec<_>>>()?;
    for s in &schema.standardize {
        if !feature_names.contains(s) {
            return Err(Error::MissingColumn(s.clone()));
        }
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut bad = Vec::new();
    let mut bad_reason = String::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            bad_reason = format!("expected {} fields", header.len());
            bad.push(line);
            continue;
        }
        let parsed: Option<Vec<f64>> = feature_cols.iter().map(|&c| rec[c].trim().parse().ok()).collect();
        let Some(parsed) = parsed.filter(|v| v.iter().all(|x: &f64| x.is_finite())) else {
            bad_reason = "non-numeric or missing feature value".into();
            bad.push(line);
            continue;
        };
        match parse_label(&rec[label_col], &schema.label_rule, line) {
            Ok(v) => labels.push(v),
            Err(Error::MalformedRows { lines, reason }) => {
                bad_reason = reason;
                bad.extend(lines);
                continue;
            }
            Err(e) => return Err(e),
        }
        rows.extend(parsed);
    }
    if !bad.is_empty() {
        return Err(Error::MalformedRows { lines: bad, reason: bad_reason });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_read = labels.len();
    let d = feature_cols.len();
    let mut x = Matrix::from_vec(n_read, d, rows)?;
    if let Some(sub) = schema.subsample {
        if sub.rows < n_read {
            let mut rng = stream(sub.seed, Stream::Shuffle);
            let mut idx = index::sample(&mut rng, n_read, sub.rows).into_vec();
            idx.sort_unstable();
            x = x.select_rows(&idx);
            labels = idx.iter().map(|&i| labels[i]).collect();
        }
    }

    let mut standardized = Vec::new();
    for name in &schema.standardize {
        let j = feature_names.iter().position(|f| f == name).expect("checked above");
        let col = x.column(j);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in 0..x.rows() {
            x.set(i, j, (x.get(i, j) - mean) / sd);
        }
        standardized.push(ColumnScaling { column: name.clone(), mean, sd });
    }

    Ok(Dataset {
        x,
        y: labels,
        feature_names,
        provenance: Provenance::File {
            path: path.display().to_string(),
            rows_read: n_read,
            subsample: schema.subsample,
            label_rule: schema.label_rule.clone(),
            standardized,
        },
    })
}

/// Write `features..., label` as CSV and the provenance record next to it
/// (`<file>.provenance.json`).
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>, label: &str) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = data.feature_names.clone();
    header.push(label.into());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = data.x.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(format!("{:?}", data.y[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let mut prov = path.as_os_str().to_owned();
    prov.push(".provenance.json");
    std::fs::write(prov, serde_json::to_string_pretty(&data.provenance)?)?;
    Ok(())
}
