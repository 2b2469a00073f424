//! Pearson and tetrachoric correlation matrices, PSD smoothing and the
//! symmetric eigensolver shared by the retention methods.

mod bvn;
mod eigen;
mod psd;
mod tetrachoric;

pub use bvn::{bivariate_normal_cdf, normal_cdf, normal_quantile};
pub use eigen::{sym_eigen, SymEigen};
pub use psd::{nearest_psd, PSD_EIGEN_FLOOR};
pub use tetrachoric::{tetrachoric_matrix, tetrachoric_pair, ContingencyTable2x2, TetrachoricEstimate};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datagen::{ContinuousDataset, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Pearson,
    Tetrachoric,
}

/// Symmetric, unit-diagonal matrix of item associations.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    values: DMatrix<f64>,
    kind: CorrelationKind,
}

impl CorrelationMatrix {
    /// Validates symmetry, unit diagonal and the [-1, 1] range.
    pub fn new(values: DMatrix<f64>, kind: CorrelationKind) -> Result<Self> {
        let p = values.nrows();
        if values.ncols() != p {
            return Err(Error::InvalidInput("correlation matrix must be square".into()));
        }
        let asym = crate::linalg::asymmetry(&values);
        if asym > 1e-12 {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        for i in 0..p {
            if (values[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "diagonal entry {i} is {} (expected 1)",
                    values[(i, i)]
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12) {
            return Err(Error::InvalidInput("correlations must lie in [-1, 1]".into()));
        }
        Ok(Self { values, kind })
    }

    pub(crate) fn from_parts_unchecked(values: DMatrix<f64>, kind: CorrelationKind) -> Self {
        Self { values, kind }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn kind(&self) -> CorrelationKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_abs_off_diagonal(&self) -> f64 {
        let p = self.dim();
        let mut m = 0.0f64;
        for i in 0..p {
            for j in (i + 1)..p {
                m = m.max(self.values[(i, j)].abs());
            }
        }
        m
    }
}

/// Product-moment correlations of the columns of `data`.
pub fn pearson_matrix(data: &ContinuousDataset) -> Result<CorrelationMatrix> {
    let n = data.n_obs();
    let p = data.n_items();
    if n < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 observations, got {n}")));
    }
    let mut centered = data.values.clone();
    let mut sds = vec![0.0; p];
    let mut constant = Vec::new();
    for (j, sd) in sds.iter_mut().enumerate() {
        let mut col = centered.column_mut(j);
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let ss = col.norm_squared();
        if ss <= f64::EPSILON * mean.abs().max(1.0) * n as f64 {
            constant.push(j);
        }
        *sd = ss.sqrt();
    }
    if !constant.is_empty() {
        return Err(Error::ConstantColumns { columns: constant });
    }
    let cross = centered.transpose() * &centered;
    let mut r = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            (cross[(i, j)] / (sds[i] * sds[j])).clamp(-1.0, 1.0)
        }
    });
    crate::linalg::symmetrize(&mut r);
    Ok(CorrelationMatrix::from_parts_unchecked(r, CorrelationKind::Pearson))
}

/// Pearson for continuous data, tetrachoric for binary data.
pub fn correlate(data: &Dataset) -> Result<CorrelationMatrix> {
    match data {
        Dataset::Binary(b) => tetrachoric_matrix(b),
        Dataset::Continuous(c) => pearson_matrix(c),
    }
}
