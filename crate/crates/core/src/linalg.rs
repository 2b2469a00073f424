//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest absolute difference between `m` and its transpose.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Lower Cholesky factor. Reports the 1-based leading minor that failed.
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// log det of a positive-definite matrix.
pub fn log_det_pd(m: &DMatrix<f64>) -> Result<f64> {
    let l = cholesky(m)?;
    Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Inverse of a positive-definite matrix via Cholesky.
pub fn inverse_pd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let l = cholesky(m)?;
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::NotPositiveDefinite { minor: n })?;
    let mut inv = l_inv.transpose() * l_inv;
    symmetrize(&mut inv);
    Ok(inv)
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Squared multiple correlation of each variable on all others: 1 - 1/diag(R^-1).
pub fn squared_multiple_correlations(r: &DMatrix<f64>) -> Result<DVector<f64>> {
    let inv = inverse_pd(r)?;
    Ok(DVector::from_iterator(
        r.nrows(),
        inv.diagonal().iter().map(|d| 1.0 - 1.0 / d),
    ))
}

/// Trace of the product `a * b` without forming it.
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut t = 0.0;
    for i in 0..n {
        for k in 0..n {
            t += a[(i, k)] * b[(k, i)];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reports_failing_minor() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]);
        match cholesky(&m) {
            Err(Error::NotPositiveDefinite { minor }) => assert_eq!(minor, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverse_matches_identity() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let inv = inverse_pd(&m).unwrap();
        let id = &m * &inv;
        assert!((id - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!((log_det_pd(&m).unwrap() - 1.75f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn smc_of_equicorrelation() {
        // closed form for compound symmetry: 1 - (1-a)(1+(m-1)a)/(1+(m-2)a)
        let a = 0.5;
        let m = 5;
        let r = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { a });
        let smc = squared_multiple_correlations(&r).unwrap();
        let expected = 1.0 - (1.0 - a) * (1.0 + (m as f64 - 1.0) * a) / (1.0 + (m as f64 - 2.0) * a);
        for v in smc.iter() {
            assert!((v - expected).abs() < 1e-12);
        }
    }
}
