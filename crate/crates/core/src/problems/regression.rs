//! ℓ₂-regularized least squares and logistic regression over CSV rows.
//!
//! Schema: every column is numeric and the last one is the label. For
//! logistic regression the labels must take exactly two values; the smaller
//! maps to −1 and the larger to +1.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DistributedObjective, Objective};
use crate::error::{Error, Result};
use crate::vector::DenseVector;

pub const DEFAULT_MU0: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionKind {
    LeastSquares,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Standardize every feature column to mean 0 and standard deviation 1.
    pub normalize: bool,
    pub mu0: f64,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { has_header: false, normalize: false, mu0: DEFAULT_MU0 }
    }
}

/// f(x) = w Σᵢ ℓ(aᵢ, bᵢ; x) + (μ₀/2)‖x‖², with ℓ = ½(aᵀx − b)² or
/// log(1 + exp(−b aᵀx)). The full problem uses w = 1/m; the nodes of a
/// k-way partition use w = k/m so that their mean is the full problem.
#[derive(Debug, Clone)]
pub struct Regression {
    kind: RegressionKind,
    features: DMatrix<f64>,
    labels: DVector<f64>,
    weight: f64,
    mu0: f64,
    l: f64,
    mu: f64,
    x_star: DenseVector,
    f_star: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Regression {
    pub fn new(kind: RegressionKind, features: DMatrix<f64>, labels: DVector<f64>, mu0: f64) -> Result<Self> {
        let m = features.nrows();
        Self::weighted(kind, features, labels, 1.0 / m as f64, mu0)
    }

    fn weighted(kind: RegressionKind, features: DMatrix<f64>, labels: DVector<f64>, weight: f64, mu0: f64) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::InvalidProblem("regression needs at least one row and one feature".into()));
        }
        if labels.len() != features.nrows() {
            return Err(Error::DimensionMismatch { expected: features.nrows(), actual: labels.len() });
        }
        if !(mu0 > 0.0) {
            return Err(Error::InvalidProblem(format!("regularizer mu0 must be positive, got {mu0}")));
        }
        if kind == RegressionKind::Logistic && labels.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::InvalidProblem("logistic labels must be -1 or +1".into()));
        }
        let gram = features.transpose() * &features;
        let eig = gram.clone().symmetric_eigen().eigenvalues;
        let g_max = eig.iter().copied().fold(0.0, f64::max).max(0.0);
        let g_min = eig.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
        let (l, mu) = match kind {
            RegressionKind::LeastSquares => (weight * g_max + mu0, weight * g_min + mu0),
            RegressionKind::Logistic => (0.25 * weight * g_max + mu0, mu0),
        };
        let mut r = Self {
            kind,
            features,
            labels,
            weight,
            mu0,
            l,
            mu,
            x_star: DenseVector::zeros(1),
            f_star: 0.0,
        };
        let x_star = match kind {
            RegressionKind::LeastSquares => {
                let d = r.dim();
                let h = gram * weight + DMatrix::identity(d, d) * mu0;
                let rhs = r.features.transpose() * &r.labels * weight;
                h.cholesky()
                    .ok_or_else(|| Error::InvalidProblem("normal equations are singular".into()))?
                    .solve(&rhs)
            }
            RegressionKind::Logistic => r.newton()?,
        };
        r.x_star = DenseVector::from_vec_unchecked(x_star.data.into());
        r.f_star = r.value(&r.x_star);
        Ok(r)
    }

    /// Damped Newton iterations for the logistic minimizer.
    fn newton(&self) -> Result<DVector<f64>> {
        let d = self.dim();
        let mut x = DVector::zeros(d);
        for _ in 0..200 {
            let xv = DenseVector::from_vec_unchecked(x.as_slice().to_vec());
            let (f, g) = self.value_and_grad(&xv);
            let g = DVector::from_column_slice(g.as_slice());
            if g.norm() <= 1e-13 * (1.0 + f.abs()) {
                return Ok(x);
            }
            let z = &self.features * &x;
            let mut h = DMatrix::identity(d, d) * self.mu0;
            for (i, row) in self.features.row_iter().enumerate() {
                let s = sigmoid(self.labels[i] * z[i]);
                h += row.transpose() * row * (self.weight * s * (1.0 - s));
            }
            let step = h
                .cholesky()
                .ok_or_else(|| Error::InvalidProblem("logistic Hessian is not positive definite".into()))?
                .solve(&g);
            let mut t = 1.0;
            loop {
                let trial = &x - &step * t;
                let tv = DenseVector::from_vec_unchecked(trial.as_slice().to_vec());
                if self.value(&tv) <= f - 1e-4 * t * g.dot(&step) || t < 1e-12 {
                    x = trial;
                    break;
                }
                t *= 0.5;
            }
        }
        Ok(x)
    }

    pub fn kind(&self) -> RegressionKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn from_csv(path: impl AsRef<Path>, kind: RegressionKind, opts: &CsvOptions) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text, kind, opts)
    }

    pub fn from_csv_str(text: &str, kind: RegressionKind, opts: &CsvOptions) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(opts.has_header).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::InvalidProblem(format!("row {}, column {}: non-numeric cell {cell:?}", r + 1, c + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() < 2 {
                return Err(Error::InvalidProblem(format!("row {} has no label column", r + 1)));
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::InvalidProblem(format!("row {} has {} columns, expected {}", r + 1, row.len(), first.len())));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::InvalidProblem("CSV has no data rows".into()));
        }
        let m = rows.len();
        let d = rows[0].len() - 1;
        let mut features = DMatrix::from_fn(m, d, |i, j| rows[i][j]);
        let mut labels = DVector::from_fn(m, |i, _| rows[i][d]);
        if opts.normalize {
            standardize(&mut features);
        }
        if kind == RegressionKind::Logistic {
            labels = signed_labels(&labels)?;
        }
        Self::new(kind, features, labels, opts.mu0)
    }

    /// Splits the rows round-robin into k nodes whose mean is this problem.
    pub fn partition(&self, k: usize) -> Result<DistributedObjective> {
        let m = self.rows();
        if k == 0 || k > m {
            return Err(Error::InvalidProblem(format!("cannot split {m} rows into {k} parts")));
        }
        let mut nodes: Vec<Box<dyn Objective>> = Vec::with_capacity(k);
        for part in 0..k {
            let idx: Vec<usize> = (part..m).step_by(k).collect();
            let features = self.features.select_rows(&idx);
            let labels = self.labels.select_rows(&idx);
            let w = self.weight * k as f64;
            nodes.push(Box::new(Self::weighted(self.kind, features, labels, w, self.mu0)?));
        }
        DistributedObjective::new(nodes, Box::new(self.clone()))
    }
}

fn standardize(features: &mut DMatrix<f64>) {
    let m = features.nrows() as f64;
    for mut col in features.column_iter_mut() {
        let mean = col.sum() / m;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
        let sd = var.sqrt();
        for v in col.iter_mut() {
            *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
        }
    }
}

fn signed_labels(labels: &DVector<f64>) -> Result<DVector<f64>> {
    let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if labels.iter().any(|&v| v != lo && v != hi) || lo == hi {
        return Err(Error::InvalidProblem("logistic regression needs exactly two label values".into()));
    }
    Ok(labels.map(|v| if v == hi { 1.0 } else { -1.0 }))
}

impl Objective for Regression {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let xv = DVector::from_column_slice(x.as_slice());
        let z = &self.features * &xv;
        let loss: f64 = match self.kind {
            RegressionKind::LeastSquares => z.iter().zip(self.labels.iter()).map(|(p, b)| 0.5 * (p - b) * (p - b)).sum(),
            RegressionKind::Logistic => z.iter().zip(self.labels.iter()).map(|(p, b)| softplus(-b * p)).sum(),
        };
        self.weight * loss + 0.5 * self.mu0 * x.norm_sq()
    }

    fn grad(&self, x: &DenseVector) -> DenseVector {
        let xv = DVector::from_column_slice(x.as_slice());
        let z = &self.features * &xv;
        let r = match self.kind {
            RegressionKind::LeastSquares => z - &self.labels,
            RegressionKind::Logistic => {
                DVector::from_fn(z.len(), |i, _| -self.labels[i] * sigmoid(-self.labels[i] * z[i]))
            }
        };
        let g = self.features.transpose() * r * self.weight + xv * self.mu0;
        DenseVector::from_vec_unchecked(g.data.into())
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn strong_convexity(&self) -> f64 {
        self.mu
    }

    fn minimizer(&self) -> Option<&DenseVector> {
        Some(&self.x_star)
    }

    fn f_star(&self) -> Option<f64> {
        Some(self.f_star)
    }
}
