//! Minimum average partial correlation.

use nalgebra::DMatrix;

use super::{best_index, Method, RetentionEstimate};
use crate::correlation::{sym_eigen, CorrelationMatrix};
use crate::error::{Error, Result};

/// Partials out the first k principal components for k = 1..kmax and picks
/// the k with the smallest mean squared off-diagonal partial correlation.
///
/// `kmax` is reduced to `p - 2` when larger. The search stops early once a
/// residual variance is no longer positive.
pub fn map_select(r: &CorrelationMatrix, kmax: usize) -> Result<RetentionEstimate> {
    let p = r.dim();
    if kmax == 0 {
        return Err(Error::InvalidInput("kmax must be at least 1".into()));
    }
    if p < 3 {
        return Err(Error::InvalidInput(format!("MAP needs at least 3 items, got {p}")));
    }
    let kmax = kmax.min(p - 2);
    let rm = r.values();
    let eig = sym_eigen(rm)?;
    let mut statistics = Vec::with_capacity(kmax);
    let mut resid = rm.clone();
    for k in 1..=kmax {
        let lambda = eig.values[k - 1].max(0.0);
        let a = eig.vectors.column(k - 1) * lambda.sqrt();
        resid -= &a * a.transpose();
        let d: Vec<f64> = (0..p).map(|i| resid[(i, i)]).collect();
        if d.iter().any(|&v| !(v > 0.0)) {
            break;
        }
        statistics.push(mean_squared_partial(&resid, &d));
    }
    let best = best_index(&statistics, |a, b| a < b).ok_or(Error::NonConvergence {
        what: "MAP: no positive residual variances at k = 1".into(),
        iterations: 0,
    })?;
    Ok(RetentionEstimate {
        method: Method::Map,
        k_hat: best + 1,
        statistics,
        reference: None,
    })
}

fn mean_squared_partial(c: &DMatrix<f64>, d: &[f64]) -> f64 {
    let p = d.len();
    let mut sum = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                sum += c[(i, j)] * c[(i, j)] / (d[i] * d[j]);
            }
        }
    }
    sum / (p * (p - 1)) as f64
}
