//! Shared data model: datasets, solver configuration, fitted models, CSV I/O.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::adaptive::WeightMatrix;
use crate::error::{Result, SpcrError};
use crate::solver::UpdateStrategy;

/// Column means of a centered design must be below this in absolute value.
pub const CENTER_TOL: f64 = 1e-10;

/// Sweep cap per fit. Small-penalty fits on ill-conditioned designs can need
/// a few thousand sweeps to meet the default tolerance.
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

/// Predictor matrix `x` (n × p) and response `y` (n).
///
/// `x_means` and `x_scales` record the affine map that produced `x` from the raw
/// input (`x = (raw - mean) / scale`), so fitted models can predict raw rows.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    centered: bool,
    x_means: Array1<f64>,
    x_scales: Option<Array1<f64>>,
    names: Vec<String>,
}

impl Dataset {
    /// Wrap raw data without any preprocessing.
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        validate_shape(&x, &y)?;
        let p = x.ncols();
        Ok(Self {
            x,
            y,
            centered: false,
            x_means: Array1::zeros(p),
            x_scales: None,
            names: default_names(p),
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(SpcrError::Dimension(format!(
                "{} predictor names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.names = names;
        Ok(self)
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn x_means(&self) -> &Array1<f64> {
        &self.x_means
    }

    pub fn x_scales(&self) -> Option<&Array1<f64>> {
        self.x_scales.as_ref()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Copies of the selected rows, in this dataset's coordinates.
    pub fn rows(&self, idx: &[usize]) -> (Array2<f64>, Array1<f64>) {
        (self.x.select(Axis(0), idx), self.y.select(Axis(0), idx))
    }

    /// Apply this dataset's preprocessing to raw rows.
    pub fn transform(&self, x_raw: ArrayView2<f64>) -> Array2<f64> {
        apply_affine(x_raw, &self.x_means, self.x_scales.as_ref())
    }

    /// Center the columns and, when `standardize` is set, scale them to unit
    /// sample variance. Columns with zero variance keep scale 1.
    pub fn preprocess(x_raw: Array2<f64>, y_raw: Array1<f64>, standardize: bool) -> Result<Self> {
        let mut d = center(x_raw, y_raw)?;
        if standardize {
            let n = d.n() as f64;
            let scales: Array1<f64> =
                d.x.axis_iter(Axis(1))
                    .map(|c| {
                        let sd = (c.iter().map(|v| v * v).sum::<f64>() / (n - 1.0)).sqrt();
                        if sd > 0.0 {
                            sd
                        } else {
                            1.0
                        }
                    })
                    .collect();
            for (mut col, s) in d.x.axis_iter_mut(Axis(1)).zip(scales.iter()) {
                col.mapv_inplace(|v| v / s);
            }
            d.x_scales = Some(scales);
        }
        Ok(d)
    }
}

fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

fn validate_shape(x: &Array2<f64>, y: &Array1<f64>) -> Result<()> {
    let (n, p) = x.dim();
    if n < 2 {
        return Err(SpcrError::Dimension(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if p < 1 {
        return Err(SpcrError::Dimension("need at least 1 predictor".into()));
    }
    if y.len() != n {
        return Err(SpcrError::Dimension(format!(
            "x has {n} rows but y has {} entries",
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SpcrError::NonFinite("predictor matrix".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SpcrError::NonFinite("response".into()));
    }
    Ok(())
}

fn apply_affine(
    x: ArrayView2<f64>,
    means: &Array1<f64>,
    scales: Option<&Array1<f64>>,
) -> Array2<f64> {
    let mut out = &x - &means.view().insert_axis(Axis(0));
    if let Some(s) = scales {
        out /= &s.view().insert_axis(Axis(0));
    }
    out
}

/// Shift every predictor column to mean zero. The response is passed through
/// unchanged; the intercept absorbs its mean.
pub fn center(x_raw: Array2<f64>, y_raw: Array1<f64>) -> Result<Dataset> {
    validate_shape(&x_raw, &y_raw)?;
    let means = x_raw.mean_axis(Axis(0)).expect("n >= 2");
    let x = apply_affine(x_raw.view(), &means, None);
    let p = x.ncols();
    Ok(Dataset {
        x,
        y: y_raw,
        centered: true,
        x_means: means,
        x_scales: None,
        names: default_names(p),
    })
}

/// Tuning and solver controls for one SPCR fit.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpcrConfig {
    /// Number of components.
    pub k: usize,
    /// Regression/reconstruction trade-off, in (0, 1).
    pub w: f64,
    /// L1/L2 mix on the loadings, in [0, 1).
    pub zeta: f64,
    pub lambda_beta: f64,
    pub lambda_gamma: f64,
    /// Coordinate weights on the loading L1 penalty; `None` means all ones.
    #[serde(skip)]
    pub weights: Option<WeightMatrix>,
    pub max_sweeps: usize,
    /// Relative objective-change stopping threshold.
    pub tol: f64,
    pub seed: u64,
    pub strategy: UpdateStrategy,
}

impl SpcrConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            w: 0.1,
            zeta: 0.01,
            lambda_beta: 1.0,
            lambda_gamma: 1.0,
            weights: None,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            tol: 1e-7,
            seed: 0,
            strategy: UpdateStrategy::Covariance,
        }
    }

    pub fn with_lambdas(mut self, lambda_beta: f64, lambda_gamma: f64) -> Self {
        self.lambda_beta = lambda_beta;
        self.lambda_gamma = lambda_gamma;
        self
    }

    pub fn with_weights(mut self, weights: Option<WeightMatrix>) -> Self {
        self.weights = weights;
        self
    }

    pub fn weight(&self, l: usize, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w.get(l, j))
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |m: String| Err(SpcrError::InvalidConfig(m));
        if self.k == 0 || self.k > p {
            return bad(format!("k must be in 1..={p}, got {}", self.k));
        }
        if !(self.w > 0.0 && self.w < 1.0) {
            return bad(format!("w must lie in (0, 1), got {}", self.w));
        }
        if !(self.zeta >= 0.0 && self.zeta < 1.0) {
            return bad(format!("zeta must lie in [0, 1), got {}", self.zeta));
        }
        if !(self.lambda_beta > 0.0 && self.lambda_beta.is_finite()) {
            return bad(format!(
                "lambda_beta must be positive, got {}",
                self.lambda_beta
            ));
        }
        if !(self.lambda_gamma > 0.0 && self.lambda_gamma.is_finite()) {
            return bad(format!(
                "lambda_gamma must be positive, got {}",
                self.lambda_gamma
            ));
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be positive".into());
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if let Some(w) = &self.weights {
            if w.dim() != (p, self.k) {
                return bad(format!(
                    "weight matrix is {:?}, expected ({p}, {})",
                    w.dim(),
                    self.k
                ));
            }
        }
        Ok(())
    }
}

/// A fitted SPCR/aSPCR model.
///
/// Columns are sign-canonical: the largest-magnitude loading of each `b`
/// column is positive (columns of `a` and entries of `gamma` flip with it).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpcrModel {
    pub gamma0: f64,
    #[serde(with = "serde_vector")]
    pub gamma: Array1<f64>,
    #[serde(with = "serde_matrix")]
    pub b: Array2<f64>,
    #[serde(with = "serde_matrix")]
    pub a: Array2<f64>,
    pub objective: f64,
    pub sweeps_used: usize,
    pub converged: bool,
    /// Objective at initialization followed by one value per sweep.
    pub trace: Vec<f64>,
    /// Preprocessing of the data the model was fit on.
    pub x_means: Vec<f64>,
    pub x_scales: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl SpcrModel {
    pub fn k(&self) -> usize {
        self.gamma.len()
    }

    pub fn p(&self) -> usize {
        self.b.nrows()
    }

    /// `Bγ`, see [`composite_coefficients`].
    pub fn composite(&self) -> Array1<f64> {
        composite_coefficients(self)
    }

    /// Predictions for rows already in the model's (centered/scaled) coordinates.
    pub fn predict_processed(&self, x: ArrayView2<f64>) -> Array1<f64> {
        x.dot(&self.composite()) + self.gamma0
    }

    /// Predictions for raw rows.
    pub fn predict(&self, x_raw: ArrayView2<f64>) -> Array1<f64> {
        let means = Array1::from(self.x_means.clone());
        let scales = self.x_scales.clone().map(Array1::from);
        let x = apply_affine(x_raw, &means, scales.as_ref());
        self.predict_processed(x.view())
    }

    /// Number of nonzero loadings.
    pub fn nnz(&self) -> usize {
        self.b.iter().filter(|v| **v != 0.0).count()
    }

    pub fn nnz_per_component(&self) -> Vec<usize> {
        self.b
            .axis_iter(Axis(1))
            .map(|c| c.iter().filter(|v| **v != 0.0).count())
            .collect()
    }

    /// Indices of components with `γ_j ≠ 0`.
    pub fn selected_components(&self) -> Vec<usize> {
        self.gamma
            .iter()
            .enumerate()
            .filter(|(_, g)| **g != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

/// The identifiable regression coefficients `Bγ` in predictor space.
pub fn composite_coefficients(model: &SpcrModel) -> Array1<f64> {
    model.b.dot(&model.gamma)
}

/// Test-set performance of one fit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EvalMetrics {
    pub mse: f64,
    pub tpr: f64,
    /// `None` when the true coefficient vector has no zero entries.
    pub tnr: Option<f64>,
}

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for ResponseColumn {
    type Err = std::convert::Infallible;

    /// Plain integers select by zero-based index, anything else by name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_string()),
        })
    }
}

/// A numeric CSV table.
#[derive(Debug, Clone)]
pub struct Table {
    pub names: Vec<String>,
    pub values: Array2<f64>,
}

impl Table {
    pub fn column_index(&self, sel: &ResponseColumn) -> Result<usize> {
        match sel {
            ResponseColumn::Index(i) if *i < self.names.len() => Ok(*i),
            ResponseColumn::Index(i) => Err(SpcrError::Csv {
                location: format!("column {i}"),
                message: format!("table has only {} columns", self.names.len()),
            }),
            ResponseColumn::Name(name) => {
                self.names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| SpcrError::Csv {
                        location: "header".into(),
                        message: format!("no column named '{name}'"),
                    })
            }
        }
    }

    /// Split into (predictors, response). The response column is removed.
    pub fn split_response(
        &self,
        sel: &ResponseColumn,
    ) -> Result<(Vec<String>, Array2<f64>, Array1<f64>)> {
        let r = self.column_index(sel)?;
        let keep: Vec<usize> = (0..self.names.len()).filter(|&j| j != r).collect();
        let names = keep.iter().map(|&j| self.names[j].clone()).collect();
        let x = self.values.select(Axis(1), &keep);
        let y = self.values.column(r).to_owned();
        Ok((names, x, y))
    }
}

/// Read an RFC-4180 numeric CSV. Without a header row, columns are named
/// `c0, c1, …`.
pub fn read_table(path: &Path, has_header: bool) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .from_path(path)
        .map_err(|e| SpcrError::Csv {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
    let mut names: Option<Vec<String>> = if has_header {
        let h = rdr.headers().map_err(|e| SpcrError::Csv {
            location: "header".into(),
            message: e.to_string(),
        })?;
        Some(h.iter().map(|s| s.trim().to_string()).collect())
    } else {
        None
    };
    let mut data = Vec::new();
    let mut rows = 0usize;
    let mut width = names.as_ref().map(|n| n.len());
    for (r, rec) in rdr.records().enumerate() {
        // 1-based line number, counting the header
        let line = r + 1 + usize::from(has_header);
        let rec = rec.map_err(|e| SpcrError::Csv {
            location: format!("line {line}"),
            message: e.to_string(),
        })?;
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(SpcrError::Csv {
                location: format!("line {line}"),
                message: format!("expected {w} fields, found {}", rec.len()),
            });
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| SpcrError::Csv {
                location: format!("line {line}, column {}", c + 1),
                message: format!("cannot parse '{field}' as a number"),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let width = width.unwrap_or(0);
    let names = names
        .take()
        .unwrap_or_else(|| (0..width).map(|j| format!("c{j}")).collect());
    let values = Array2::from_shape_vec((rows, width), data).map_err(|e| SpcrError::Csv {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(Table { names, values })
}

/// Load a CSV as a raw (unpreprocessed) dataset.
pub fn read_dataset(path: &Path, response: &ResponseColumn, has_header: bool) -> Result<Dataset> {
    let table = read_table(path, has_header)?;
    let (names, x, y) = table.split_response(response)?;
    Dataset::new(x, y)?.with_names(names)
}

/// Write predictors and response as CSV with a header row.
pub fn write_dataset(
    path: &Path,
    names: &[String],
    x: ArrayView2<f64>,
    y: &Array1<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| SpcrError::Csv {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut header: Vec<String> = names.to_vec();
    header.push("y".into());
    let csv_err = |e: csv::Error| SpcrError::Csv {
        location: path.display().to_string(),
        message: e.to_string(),
    };
    w.write_record(&header).map_err(csv_err)?;
    for (row, yi) in x.axis_iter(Axis(0)).zip(y.iter()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(yi.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Serialize an `Array2` as a list of rows.
pub mod serde_matrix {
    use ndarray::Array2;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.outer_iter().map(|r| r.to_vec()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix"));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Array2::from_shape_vec((nrows, ncols), flat).map_err(D::Error::custom)
    }
}

pub mod serde_vector {
    use ndarray::Array1;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Array1<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.to_vec().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array1<f64>, D::Error> {
        Ok(Array1::from(Vec::<f64>::deserialize(d)?))
    }
}
