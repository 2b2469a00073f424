//! Simulated item data from simple-structure factor models.
//!
//! The generating model is `Sigma = Lambda Psi Lambda' + Theta` with one
//! nonzero loading per item, equicorrelated factors and diagonal residuals.
//! Continuous draws can be dichotomized at the population mean (zero).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub type CovarianceMatrix = DMatrix<f64>;

/// Factor count, items per factor, inter-factor correlation and the
/// (shared) loading and residual variance of a simple-structure model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub n_factors: usize,
    pub items_per_factor: usize,
    pub factor_corr: f64,
    pub loading: f64,
    pub residual_var: f64,
}

impl FactorSpec {
    /// Unit loadings and unit residual variances.
    pub fn new(n_factors: usize, items_per_factor: usize, factor_corr: f64) -> Result<Self> {
        Self::with_parameters(n_factors, items_per_factor, factor_corr, 1.0, 1.0)
    }

    pub fn with_parameters(
        n_factors: usize,
        items_per_factor: usize,
        factor_corr: f64,
        loading: f64,
        residual_var: f64,
    ) -> Result<Self> {
        let spec = Self {
            n_factors,
            items_per_factor,
            factor_corr,
            loading,
            residual_var,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_factors == 0 {
            return Err(Error::InvalidSpec("n_factors must be at least 1".into()));
        }
        if self.items_per_factor == 0 {
            return Err(Error::InvalidSpec("items_per_factor must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.factor_corr) {
            return Err(Error::InvalidSpec(format!(
                "factor_corr must lie in [0, 1), got {}",
                self.factor_corr
            )));
        }
        if !self.loading.is_finite() || self.loading == 0.0 {
            return Err(Error::InvalidSpec("loading must be finite and nonzero".into()));
        }
        if !(self.residual_var > 0.0) || !self.residual_var.is_finite() {
            return Err(Error::InvalidSpec("residual_var must be positive".into()));
        }
        linalg::cholesky(&self.factor_covariance()).map_err(|_| {
            Error::InvalidSpec(format!(
                "factor correlation {} gives a non-positive-definite Psi",
                self.factor_corr
            ))
        })?;
        Ok(())
    }

    pub fn n_items(&self) -> usize {
        self.n_factors * self.items_per_factor
    }

    /// Factor that item `item` loads on (items are grouped factor by factor).
    pub fn factor_of(&self, item: usize) -> usize {
        item / self.items_per_factor
    }

    /// Block-diagonal p x m loading matrix.
    pub fn loadings(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_items(), self.n_factors, |i, f| {
            if self.factor_of(i) == f {
                self.loading
            } else {
                0.0
            }
        })
    }

    /// Psi: unit diagonal, `factor_corr` elsewhere.
    pub fn factor_covariance(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_factors, self.n_factors, |a, b| {
            if a == b {
                1.0
            } else {
                self.factor_corr
            }
        })
    }

    /// Theta: diagonal residual covariance.
    pub fn residual_covariance(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal_element(self.n_items(), self.n_items(), self.residual_var)
    }
}

/// `Lambda Psi Lambda' + Theta`.
pub fn build_implied_sigma(spec: &FactorSpec) -> Result<CovarianceMatrix> {
    spec.validate()?;
    let lambda = spec.loadings();
    let mut sigma = &lambda * spec.factor_covariance() * lambda.transpose() + spec.residual_covariance();
    linalg::symmetrize(&mut sigma);
    linalg::cholesky(&sigma)?;
    Ok(sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDataset {
    /// n x p, rows are observations.
    pub values: DMatrix<f64>,
    pub seed: u64,
}

impl ContinuousDataset {
    pub fn from_values(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset contains non-finite values".into()));
        }
        Ok(Self { values, seed: 0 })
    }

    pub fn n_obs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_items(&self) -> usize {
        self.values.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    /// n x p of 0/1 responses.
    pub values: DMatrix<u8>,
}

impl BinaryDataset {
    pub fn from_values(values: DMatrix<u8>) -> Result<Self> {
        if values.iter().any(|&v| v > 1) {
            return Err(Error::InvalidInput("binary dataset entries must be 0 or 1".into()));
        }
        Ok(Self { values })
    }

    pub fn n_obs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_items(&self) -> usize {
        self.values.ncols()
    }

    /// Indices of columns that are all 0 or all 1.
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.n_items())
            .filter(|&j| {
                let col = self.values.column(j);
                let ones = col.iter().filter(|&&v| v == 1).count();
                ones == 0 || ones == col.len()
            })
            .collect()
    }
}

/// Either kind of item data; drives the correlation choice downstream.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Binary(BinaryDataset),
    Continuous(ContinuousDataset),
}

impl Dataset {
    /// Binary when every value is exactly 0 or 1, continuous otherwise.
    pub fn detect(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().all(|&v| v == 0.0 || v == 1.0) {
            Ok(Dataset::Binary(BinaryDataset {
                values: values.map(|v| v as u8),
            }))
        } else {
            Ok(Dataset::Continuous(ContinuousDataset::from_values(values)?))
        }
    }

    pub fn n_obs(&self) -> usize {
        match self {
            Dataset::Binary(d) => d.n_obs(),
            Dataset::Continuous(d) => d.n_obs(),
        }
    }

    pub fn n_items(&self) -> usize {
        match self {
            Dataset::Binary(d) => d.n_items(),
            Dataset::Continuous(d) => d.n_items(),
        }
    }

    pub fn as_f64(&self) -> DMatrix<f64> {
        match self {
            Dataset::Binary(d) => d.values.map(f64::from),
            Dataset::Continuous(d) => d.values.clone(),
        }
    }
}

impl From<BinaryDataset> for Dataset {
    fn from(d: BinaryDataset) -> Self {
        Dataset::Binary(d)
    }
}

impl From<ContinuousDataset> for Dataset {
    fn from(d: ContinuousDataset) -> Self {
        Dataset::Continuous(d)
    }
}

/// The seedable, portable generator used everywhere randomness is needed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// n i.i.d. rows from N(0, sigma), generated as `L z` with `sigma = L L'`.
pub fn sample_dataset(sigma: &CovarianceMatrix, n: usize, seed: u64) -> Result<ContinuousDataset> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let l = linalg::cholesky(sigma)?;
    let p = sigma.nrows();
    let mut rng = rng_from_seed(seed);
    let mut values = DMatrix::<f64>::zeros(n, p);
    let mut z = vec![0.0; p];
    for row in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        for i in 0..p {
            let mut acc = 0.0;
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                acc += l[(i, k)] * zk;
            }
            values[(row, i)] = acc;
        }
    }
    Ok(ContinuousDataset { values, seed })
}

/// 1 where the value is strictly above zero (the population mean), else 0.
pub fn dichotomize(data: &ContinuousDataset) -> BinaryDataset {
    BinaryDataset {
        values: data.values.map(|v| u8::from(v > 0.0)),
    }
}

/// One cell of the simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationCondition {
    pub n_factors: usize,
    pub items_per_factor: usize,
    pub sample_size: usize,
    pub factor_corr: f64,
}

impl SimulationCondition {
    pub fn factor_spec(&self) -> Result<FactorSpec> {
        FactorSpec::new(self.n_factors, self.items_per_factor, self.factor_corr)
    }

    /// Position of this condition in [`condition_grid`], if it is a grid cell.
    pub fn grid_index(&self) -> Option<usize> {
        condition_grid().iter().position(|c| c == self)
    }
}

pub const GRID_FACTORS: [usize; 2] = [2, 4];
pub const GRID_ITEMS_PER_FACTOR: [usize; 2] = [5, 10];
pub const GRID_SAMPLE_SIZES: [usize; 4] = [100, 500, 1000, 5000];
pub const GRID_FACTOR_CORRS: [f64; 4] = [0.0, 0.2, 0.5, 0.7];

/// The 2 x 2 x 4 x 4 design in lexicographic order
/// (factors, items per factor, sample size, factor correlation).
pub fn condition_grid() -> Vec<SimulationCondition> {
    let mut grid = Vec::with_capacity(64);
    for &n_factors in &GRID_FACTORS {
        for &items_per_factor in &GRID_ITEMS_PER_FACTOR {
            for &sample_size in &GRID_SAMPLE_SIZES {
                for &factor_corr in &GRID_FACTOR_CORRS {
                    grid.push(SimulationCondition {
                        n_factors,
                        items_per_factor,
                        sample_size,
                        factor_corr,
                    });
                }
            }
        }
    }
    grid
}
