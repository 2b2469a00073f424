//! Maximum-likelihood exploratory factor analysis on a correlation matrix.
//!
//! For fixed uniquenesses `psi` the ML loadings follow from the eigenvectors
//! of `Psi^-1/2 R Psi^-1/2`, so only `psi` is searched (projected BFGS inside
//! `[HEYWOOD_FLOOR, 1]`). The discrepancy at the optimum is
//! `sum_{j>k} (e_j - ln e_j - 1)` over the trailing eigenvalues `e_j`.

use nalgebra::{DMatrix, DVector};

use crate::correlation::{sym_eigen, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::{minimize_box_with_last, BoxOptions};

pub const HEYWOOD_FLOOR: f64 = 0.001;

#[derive(Debug, Clone)]
pub struct EfaFit {
    pub k: usize,
    /// p x k unrotated loadings.
    pub loadings: DMatrix<f64>,
    pub uniquenesses: DVector<f64>,
    pub discrepancy: f64,
    /// Bartlett-corrected likelihood-ratio statistic.
    pub chi_square: f64,
    pub df: i64,
    pub n_params: usize,
}

/// `((p - k)^2 - (p + k)) / 2`.
pub fn degrees_of_freedom(p: usize, k: usize) -> i64 {
    let (p, k) = (p as i64, k as i64);
    ((p - k) * (p - k) - (p + k)) / 2
}

/// Free parameters of a k-factor model: loadings up to rotation plus uniquenesses.
pub fn n_parameters(p: usize, k: usize) -> usize {
    p * k - k * (k.saturating_sub(1)) / 2 + p
}

pub fn fit_efa(r: &CorrelationMatrix, k: usize, n: usize) -> Result<EfaFit> {
    fit_efa_from(r, k, n, &default_start(r))
}

/// `1 - SMC`, capped to [0.05, 0.95].
pub fn default_start(r: &CorrelationMatrix) -> Vec<f64> {
    match linalg::squared_multiple_correlations(r.values()) {
        Ok(smc) => smc.iter().map(|s| (1.0 - s).clamp(0.05, 0.95)).collect(),
        Err(_) => vec![0.5; r.dim()],
    }
}

pub fn fit_efa_from(r: &CorrelationMatrix, k: usize, n: usize, start: &[f64]) -> Result<EfaFit> {
    let p = r.dim();
    if k == 0 {
        return Err(Error::InvalidInput("factor count must be at least 1".into()));
    }
    let df = degrees_of_freedom(p, k);
    if df < 0 || k >= p {
        return Err(Error::InfeasibleModel { k, p });
    }
    let rm = r.values();
    let objective = |psi: &[f64], grad: &mut [f64]| -> f64 {
        let Some((value, loadings)) = profile(rm, psi, k) else {
            return f64::INFINITY;
        };
        let implied = &loadings * loadings.transpose();
        for i in 0..p {
            grad[i] = (implied[(i, i)] + psi[i] - rm[(i, i)]) / (psi[i] * psi[i]);
        }
        value
    };
    let lower = vec![HEYWOOD_FLOOR; p];
    let upper = vec![1.0; p];
    let opts = BoxOptions::default();
    let best = match minimize_box_with_last(objective, start, &lower, &upper, opts) {
        Ok(m) => m,
        Err((Error::NonConvergence { what, iterations }, last)) => {
            return Err(Error::NonConvergence {
                what: format!("{k}-factor ML fit ({what}); last uniquenesses {:?}", last.x),
                iterations,
            })
        }
        Err((e, _)) => return Err(e),
    };
    let (discrepancy, loadings) = profile(rm, &best.x, k).ok_or(Error::NonConvergence {
        what: format!("{k}-factor ML fit"),
        iterations: best.iterations,
    })?;
    let discrepancy = discrepancy.max(0.0);
    let (pf, kf) = (p as f64, k as f64);
    let bartlett = n as f64 - 1.0 - (2.0 * pf + 5.0) / 6.0 - 2.0 * kf / 3.0;
    Ok(EfaFit {
        k,
        loadings,
        uniquenesses: DVector::from_vec(best.x),
        discrepancy,
        chi_square: bartlett * discrepancy,
        df,
        n_params: n_parameters(p, k),
    })
}

/// Discrepancy and ML loadings for fixed uniquenesses.
fn profile(r: &DMatrix<f64>, psi: &[f64], k: usize) -> Option<(f64, DMatrix<f64>)> {
    let p = r.nrows();
    let scale: Vec<f64> = psi.iter().map(|v| 1.0 / v.sqrt()).collect();
    let scaled = DMatrix::from_fn(p, p, |i, j| r[(i, j)] * scale[i] * scale[j]);
    let eig = sym_eigen(&scaled).ok()?;
    let mut value = 0.0;
    for j in k..p {
        let e = eig.values[j];
        if !(e > 0.0) {
            return None;
        }
        value += e - e.ln() - 1.0;
    }
    let loadings = DMatrix::from_fn(p, k, |i, f| {
        psi[i].sqrt() * eig.vectors[(i, f)] * (eig.values[f] - 1.0).max(0.0).sqrt()
    });
    Some((value, loadings))
}

/// Fits for k = 1..=kmax, skipping models with negative degrees of freedom.
///
/// Each fit starts from whichever of the default start and the previous
/// solution gives the lower discrepancy, which keeps the discrepancy
/// non-increasing in k.
pub fn fit_efa_sequence(r: &CorrelationMatrix, kmax: usize, n: usize) -> Vec<(usize, Result<EfaFit>)> {
    let p = r.dim();
    let start = default_start(r);
    let mut previous: Option<Vec<f64>> = None;
    let mut out = Vec::new();
    for k in 1..=kmax {
        if degrees_of_freedom(p, k) < 0 || k >= p {
            break;
        }
        let fresh = fit_efa_from(r, k, n, &start);
        let warm = previous.as_ref().map(|s| fit_efa_from(r, k, n, s));
        let fit = match (fresh, warm) {
            (Ok(a), Some(Ok(b))) => Ok(if b.discrepancy < a.discrepancy { b } else { a }),
            (Ok(a), _) => Ok(a),
            (Err(_), Some(Ok(b))) => Ok(b),
            (Err(e), _) => Err(e),
        };
        if let Ok(f) = &fit {
            previous = Some(f.uniquenesses.iter().copied().collect());
        }
        out.push((k, fit));
    }
    out
}

/// Orthogonal varimax rotation with Kaiser row normalization, by sweeps of
/// closed-form planar rotations over factor pairs.
pub fn varimax(loadings: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, k) = loadings.shape();
    if k < 2 {
        return loadings.clone();
    }
    let norms: Vec<f64> = (0..p)
        .map(|i| {
            let s = loadings.row(i).norm();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let mut x = DMatrix::from_fn(p, k, |i, j| loadings[(i, j)] / norms[i]);
    let pf = p as f64;
    for _ in 0..1000 {
        let mut max_angle = 0.0f64;
        for a in 0..k {
            for b in (a + 1)..k {
                let (mut su, mut sv, mut suv, mut s2) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    let u = xa * xa - xb * xb;
                    let v = 2.0 * xa * xb;
                    su += u;
                    sv += v;
                    suv += u * v;
                    s2 += u * u - v * v;
                }
                let num = 2.0 * suv - 2.0 * su * sv / pf;
                let den = s2 - (su * su - sv * sv) / pf;
                let phi = num.atan2(den) / 4.0;
                if phi.abs() < 1e-12 {
                    continue;
                }
                max_angle = max_angle.max(phi.abs());
                let (c, s) = (phi.cos(), phi.sin());
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    x[(i, a)] = c * xa + s * xb;
                    x[(i, b)] = -s * xa + c * xb;
                }
            }
        }
        if max_angle < 1e-10 {
            break;
        }
    }
    DMatrix::from_fn(p, k, |i, j| x[(i, j)] * norms[i])
}
