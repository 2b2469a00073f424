//! Eigenvalue-based retention: the greater-than-one rule and parallel analysis.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::efa::fit_efa;
use super::{Method, RetentionEstimate};
use crate::correlation::{correlate, sym_eigen, CorrelationMatrix};
use crate::datagen::{rng_from_seed, BinaryDataset, ContinuousDataset, Dataset};
use crate::error::Result;
use crate::linalg;

pub const DEFAULT_PA_ITERATIONS: usize = 20;

/// Which matrix the eigenvalue rules decompose.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenBasis {
    /// The correlation matrix itself.
    Component,
    /// The reduced matrix with squared multiple correlations on the diagonal.
    Factor,
    /// The reduced matrix with one-factor ML communalities on the diagonal.
    #[default]
    Communality,
}

/// Descending eigenvalues of `r` (or of its reduced form).
pub fn observed_eigenvalues(r: &CorrelationMatrix, basis: EigenBasis) -> Result<Vec<f64>> {
    let m = match basis {
        EigenBasis::Component => r.values().clone(),
        EigenBasis::Factor => {
            let smc = linalg::squared_multiple_correlations(r.values())?;
            let mut m = r.values().clone();
            m.set_diagonal(&smc);
            m
        }
        EigenBasis::Communality => {
            let fit = fit_efa(r, 1, r.dim().max(3))?;
            let mut m = r.values().clone();
            m.set_diagonal(&fit.uniquenesses.map(|u| 1.0 - u));
            m
        }
    };
    Ok(sym_eigen(&m)?.values.iter().copied().collect())
}

pub fn kaiser_rule(r: &CorrelationMatrix) -> Result<RetentionEstimate> {
    kaiser_rule_with(r, EigenBasis::default())
}

pub fn kaiser_rule_with(r: &CorrelationMatrix, basis: EigenBasis) -> Result<RetentionEstimate> {
    Ok(kaiser_from_eigenvalues(observed_eigenvalues(r, basis)?))
}

/// Count of eigenvalues strictly greater than one.
pub fn kaiser_from_eigenvalues(eigenvalues: Vec<f64>) -> RetentionEstimate {
    RetentionEstimate {
        method: Method::Kaiser,
        k_hat: eigenvalues.iter().filter(|&&e| e > 1.0).count(),
        statistics: eigenvalues,
        reference: None,
    }
}

pub fn parallel_analysis(data: &Dataset, n_iter: usize, seed: u64) -> Result<RetentionEstimate> {
    parallel_analysis_with(data, n_iter, seed, EigenBasis::default())
}

pub fn parallel_analysis_with(
    data: &Dataset,
    n_iter: usize,
    seed: u64,
    basis: EigenBasis,
) -> Result<RetentionEstimate> {
    let observed = observed_eigenvalues(&correlate(data)?, basis)?;
    let reference = reference_eigenvalues(data, n_iter, seed, basis)?;
    Ok(pa_from_eigenvalues(observed, reference))
}

/// Per-position mean eigenvalues over `n_iter` column-permuted copies.
pub fn reference_eigenvalues(data: &Dataset, n_iter: usize, seed: u64, basis: EigenBasis) -> Result<Vec<f64>> {
    let p = data.n_items();
    let mut rng = rng_from_seed(seed);
    let mut sum = vec![0.0; p];
    for _ in 0..n_iter.max(1) {
        let null = permute_columns(data, &mut rng);
        let ev = observed_eigenvalues(&correlate(&null)?, basis)?;
        for (s, e) in sum.iter_mut().zip(ev) {
            *s += e;
        }
    }
    Ok(sum.into_iter().map(|s| s / n_iter.max(1) as f64).collect())
}

/// Largest m with `observed[i] > reference[i]` for every i < m.
pub fn pa_from_eigenvalues(observed: Vec<f64>, reference: Vec<f64>) -> RetentionEstimate {
    let k_hat = observed.iter().zip(&reference).take_while(|(o, r)| o > r).count();
    RetentionEstimate {
        method: Method::Pa,
        k_hat,
        statistics: observed,
        reference: Some(reference),
    }
}

/// Shuffles each column independently, keeping every item's margin.
pub fn permute_columns<R: rand::Rng + ?Sized>(data: &Dataset, rng: &mut R) -> Dataset {
    match data {
        Dataset::Binary(b) => {
            let mut v = b.values.clone();
            for mut col in v.column_iter_mut() {
                col.as_mut_slice().shuffle(rng);
            }
            Dataset::Binary(BinaryDataset { values: v })
        }
        Dataset::Continuous(c) => {
            let mut v: DMatrix<f64> = c.values.clone();
            for mut col in v.column_iter_mut() {
                col.as_mut_slice().shuffle(rng);
            }
            Dataset::Continuous(ContinuousDataset {
                values: v,
                seed: c.seed,
            })
        }
    }
}
