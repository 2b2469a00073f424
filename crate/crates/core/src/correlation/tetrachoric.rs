use nalgebra::DMatrix;
use rayon::prelude::*;

use super::bvn::{bivariate_normal_cdf, normal_cdf, normal_quantile};
use super::{nearest_psd, CorrelationKind, CorrelationMatrix};
use crate::datagen::BinaryDataset;
use crate::error::{Error, Result};
use crate::optim::brent_minimize;

/// Search interval for the tetrachoric correlation.
pub const RHO_BOUND: f64 = 0.999;

/// 2x2 cross-classification of two binary items. `n01` counts x = 0, y = 1.
///
/// Counts are stored as reals so that a continuity correction can be applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContingencyTable2x2 {
    pub n00: f64,
    pub n01: f64,
    pub n10: f64,
    pub n11: f64,
}

impl ContingencyTable2x2 {
    pub fn new(n00: f64, n01: f64, n10: f64, n11: f64) -> Result<Self> {
        let t = Self { n00, n01, n10, n11 };
        if [n00, n01, n10, n11].iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidInput("table counts must be non-negative".into()));
        }
        if t.total() <= 0.0 {
            return Err(Error::InvalidInput("table is empty".into()));
        }
        Ok(t)
    }

    pub fn from_columns(x: &[u8], y: &[u8]) -> Self {
        let mut c = [0usize; 4];
        for (&a, &b) in x.iter().zip(y) {
            c[(a as usize) * 2 + b as usize] += 1;
        }
        Self {
            n00: c[0] as f64,
            n01: c[1] as f64,
            n10: c[2] as f64,
            n11: c[3] as f64,
        }
    }

    pub fn total(&self) -> f64 {
        self.n00 + self.n01 + self.n10 + self.n11
    }

    pub fn has_zero_cell(&self) -> bool {
        self.n00 == 0.0 || self.n01 == 0.0 || self.n10 == 0.0 || self.n11 == 0.0
    }

    /// Adds `delta` to every cell.
    pub fn corrected(&self, delta: f64) -> Self {
        Self {
            n00: self.n00 + delta,
            n01: self.n01 + delta,
            n10: self.n10 + delta,
            n11: self.n11 + delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetrachoricEstimate {
    pub rho: f64,
    /// Latent threshold of x: `P(x = 0) = Phi(threshold_x)`.
    pub threshold_x: f64,
    pub threshold_y: f64,
}

/// Two-step ML estimate: thresholds from the margins, then a bounded 1-D
/// search for the latent correlation.
pub fn tetrachoric_pair(table: &ContingencyTable2x2) -> Result<TetrachoricEstimate> {
    let n = table.total();
    if !(n > 0.0) {
        return Err(Error::InvalidInput("table is empty".into()));
    }
    let x0 = table.n00 + table.n01;
    let y0 = table.n00 + table.n10;
    if x0 == 0.0 || x0 == n || y0 == 0.0 || y0 == n {
        return Err(Error::UndefinedCorrelation);
    }
    let tx = normal_quantile(x0 / n);
    let ty = normal_quantile(y0 / n);
    let (px, py) = (normal_cdf(tx), normal_cdf(ty));

    let neg_loglik = |rho: f64| {
        let p00 = bivariate_normal_cdf(tx, ty, rho);
        let p01 = px - p00;
        let p10 = py - p00;
        let p11 = 1.0 - px - py + p00;
        let term = |count: f64, prob: f64| {
            if count == 0.0 {
                0.0
            } else {
                count * prob.max(1e-300).ln()
            }
        };
        -(term(table.n00, p00) + term(table.n01, p01) + term(table.n10, p10) + term(table.n11, p11))
    };
    let rho = brent_minimize(neg_loglik, -RHO_BOUND, RHO_BOUND, 1e-10).clamp(-RHO_BOUND, RHO_BOUND);
    Ok(TetrachoricEstimate {
        rho,
        threshold_x: tx,
        threshold_y: ty,
    })
}

/// Pairwise tetrachoric correlations, smoothed to be positive semidefinite.
///
/// Any table with an empty cell gets 0.5 added to all four cells.
pub fn tetrachoric_matrix(data: &BinaryDataset) -> Result<CorrelationMatrix> {
    let constant = data.constant_columns();
    if !constant.is_empty() {
        return Err(Error::ConstantColumns { columns: constant });
    }
    let p = data.n_items();
    let columns: Vec<Vec<u8>> = (0..p)
        .map(|j| data.values.column(j).iter().copied().collect())
        .collect();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).collect();
    let estimates = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut table = ContingencyTable2x2::from_columns(&columns[i], &columns[j]);
            if table.has_zero_cell() {
                table = table.corrected(0.5);
            }
            tetrachoric_pair(&table).map(|e| e.rho)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut r = DMatrix::identity(p, p);
    for (&(i, j), rho) in pairs.iter().zip(estimates) {
        r[(i, j)] = rho;
        r[(j, i)] = rho;
    }
    nearest_psd(&r, CorrelationKind::Tetrachoric)
}
