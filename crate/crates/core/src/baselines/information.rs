//! Model-selection rules built on ML factor fits for k = 1..kmax.

use nalgebra::DMatrix;

use super::efa::{fit_efa_sequence, varimax, EfaFit};
use super::{best_index, Method, RetentionEstimate};
use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_KMAX: usize = 10;

type Fits = [(usize, Result<EfaFit>)];

pub fn bic_select(r: &CorrelationMatrix, n: usize, kmax: usize) -> Result<RetentionEstimate> {
    check_kmax(kmax)?;
    bic_from_fits(&fit_efa_sequence(r, kmax, n), r.dim(), n)
}

pub fn ebic_select(r: &CorrelationMatrix, n: usize, kmax: usize, gamma: f64) -> Result<RetentionEstimate> {
    check_kmax(kmax)?;
    ebic_from_fits(&fit_efa_sequence(r, kmax, n), r.dim(), n, gamma)
}

pub fn vss_select(r: &CorrelationMatrix, n: usize, kmax: usize) -> Result<RetentionEstimate> {
    check_kmax(kmax)?;
    vss_from_fits(&fit_efa_sequence(r, kmax, n), r)
}

/// `BIC_k = chi2_k - df_k ln n`, minimized.
pub fn bic_from_fits(fits: &Fits, p: usize, n: usize) -> Result<RetentionEstimate> {
    ebic_core(fits, p, n, 0.0, Method::Bic)
}

/// `EBIC_k = BIC_k + 2 gamma n_params_k ln p`, minimized.
pub fn ebic_from_fits(fits: &Fits, p: usize, n: usize, gamma: f64) -> Result<RetentionEstimate> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be non-negative, got {gamma}")));
    }
    ebic_core(fits, p, n, gamma, Method::Ebic)
}

fn ebic_core(fits: &Fits, p: usize, n: usize, gamma: f64, method: Method) -> Result<RetentionEstimate> {
    let ln_n = (n as f64).ln();
    let ln_p = (p as f64).ln();
    let statistics: Vec<f64> = fits
        .iter()
        .map(|(_, fit)| match fit {
            Ok(f) => f.chi_square - f.df as f64 * ln_n + 2.0 * gamma * f.n_params as f64 * ln_p,
            Err(_) => f64::NAN,
        })
        .collect();
    select(fits, statistics, method, |a, b| a < b)
}

/// Very simple structure of complexity one on varimax-rotated loadings.
pub fn vss_from_fits(fits: &Fits, r: &CorrelationMatrix) -> Result<RetentionEstimate> {
    let statistics: Vec<f64> = fits
        .iter()
        .map(|(_, fit)| match fit {
            Ok(f) => vss_statistic(r.values(), &varimax(&f.loadings)),
            Err(_) => f64::NAN,
        })
        .collect();
    select(fits, statistics, Method::Vss, |a, b| a > b)
}

fn vss_statistic(r: &DMatrix<f64>, loadings: &DMatrix<f64>) -> f64 {
    let (p, k) = loadings.shape();
    let mut simple = DMatrix::zeros(p, k);
    for i in 0..p {
        let mut best = 0;
        for j in 1..k {
            if loadings[(i, j)].abs() > loadings[(i, best)].abs() {
                best = j;
            }
        }
        simple[(i, best)] = loadings[(i, best)];
    }
    let implied = &simple * simple.transpose();
    let (mut resid, mut total) = (0.0, 0.0);
    for i in 0..p {
        for j in i + 1..p {
            resid += (r[(i, j)] - implied[(i, j)]).powi(2);
            total += r[(i, j)].powi(2);
        }
    }
    1.0 - resid / total
}

fn select(
    fits: &Fits,
    statistics: Vec<f64>,
    method: Method,
    better: impl Fn(f64, f64) -> bool,
) -> Result<RetentionEstimate> {
    match best_index(&statistics, better) {
        Some(i) => Ok(RetentionEstimate {
            method,
            k_hat: fits[i].0,
            statistics,
            reference: None,
        }),
        None => Err(fits
            .iter()
            .find_map(|(_, f)| f.as_ref().err().cloned())
            .unwrap_or(Error::InfeasibleModel { k: 1, p: 0 })),
    }
}

fn check_kmax(kmax: usize) -> Result<()> {
    if kmax == 0 {
        return Err(Error::InvalidInput("kmax must be at least 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{pearson_matrix, CorrelationKind};
    use crate::datagen::{build_implied_sigma, dichotomize, sample_dataset, ContinuousDataset, FactorSpec};

    fn one_factor(p: usize, lambda: f64) -> CorrelationMatrix {
        let m = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { lambda * lambda });
        CorrelationMatrix::new(m, CorrelationKind::Pearson).unwrap()
    }

    fn two_factor_sample(seed: u64, n: usize) -> CorrelationMatrix {
        let sigma = build_implied_sigma(&FactorSpec::new(2, 5, 0.0).unwrap()).unwrap();
        let binary = dichotomize(&sample_dataset(&sigma, n, seed).unwrap());
        pearson_matrix(&ContinuousDataset::from_values(binary.values.map(f64::from)).unwrap()).unwrap()
    }

    #[test]
    fn vss_exact_one_factor() {
        let est = vss_select(&one_factor(8, 0.7), 500, 3).unwrap();
        assert_eq!(est.k_hat, 1);
        assert!((est.statistics[0] - 1.0).abs() < 1e-4, "{:?}", est.statistics);
        assert!(est.statistics.iter().all(|&v| v <= 1.0 + 1e-12));
    }

    #[test]
    fn kmax_caps_search() {
        let r = two_factor_sample(3, 1000);
        let est = bic_select(&r, 1000, 3).unwrap();
        assert_eq!(est.statistics.len(), 3);
        assert!(est.k_hat <= 3);
    }

    #[test]
    fn infeasible_k_excluded() {
        // p = 5 admits at most k = 2
        let r = one_factor(5, 0.6);
        let est = bic_select(&r, 200, 10).unwrap();
        assert_eq!(est.statistics.len(), 2);
    }

    #[test]
    fn all_infeasible_is_error() {
        let r = one_factor(3, 0.6);
        // p = 3: k = 1 has df 0, so it is feasible; p = 2 admits nothing
        assert!(bic_select(&r, 100, 2).is_ok());
        let r2 = one_factor(2, 0.6);
        assert!(bic_select(&r2, 100, 2).is_err());
    }

    #[test]
    fn zero_gamma_matches_bic() {
        let r = two_factor_sample(11, 1000);
        let fits = fit_efa_sequence(&r, 6, 1000);
        let b = bic_from_fits(&fits, r.dim(), 1000).unwrap();
        let e = ebic_from_fits(&fits, r.dim(), 1000, 0.0).unwrap();
        assert_eq!(b.k_hat, e.k_hat);
        assert_eq!(b.statistics, e.statistics);
        assert!(ebic_from_fits(&fits, r.dim(), 1000, -1.0).is_err());
    }

    #[test]
    fn ebic_penalty_increment() {
        let r = two_factor_sample(12, 1000);
        let fits = fit_efa_sequence(&r, 4, 1000);
        let b = bic_from_fits(&fits, 10, 1000).unwrap();
        let e = ebic_from_fits(&fits, 10, 1000, 0.5).unwrap();
        for (i, (k, _)) in fits.iter().enumerate() {
            let expected = b.statistics[i] + super::super::n_parameters(10, *k) as f64 * 10f64.ln();
            assert!((e.statistics[i] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn clean_two_factor_selected() {
        let mut hits = [0usize; 3];
        let seeds = 20;
        for seed in 0..seeds {
            let r = two_factor_sample(100 + seed, 1000);
            let fits = fit_efa_sequence(&r, 8, 1000);
            hits[0] += (bic_from_fits(&fits, 10, 1000).unwrap().k_hat == 2) as usize;
            hits[1] += (ebic_from_fits(&fits, 10, 1000, 0.5).unwrap().k_hat == 2) as usize;
            hits[2] += (vss_from_fits(&fits, &r).unwrap().k_hat == 2) as usize;
        }
        assert!(hits[0] >= 19, "bic {hits:?}");
        assert!(hits[1] >= 19, "ebic {hits:?}");
        assert!(hits[2] >= 17, "vss {hits:?}");
    }
}
