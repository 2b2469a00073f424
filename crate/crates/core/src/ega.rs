//! The exploratory graph analysis pipeline: correlations, EBIC-selected
//! graphical lasso, walktrap communities. The community count is the
//! estimated number of dimensions.
//!
//! Items the regularized network leaves unconnected form singleton
//! communities and each counts as a dimension, so data with no association
//! at all reports one dimension per item.

use serde::{Deserialize, Serialize};

use crate::correlation::{pearson_matrix, tetrachoric_matrix, CorrelationMatrix};
use crate::datagen::{ContinuousDataset, Dataset};
use crate::error::{Error, Result};
use crate::ggm::{ebic_glasso, EbicGlassoOptions, PartialNetwork};
use crate::walktrap::{walktrap_communities, CommunityPartition, WeightedGraph, DEFAULT_STEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationChoice {
    /// Tetrachoric for 0/1 data, Pearson otherwise.
    #[default]
    Auto,
    Pearson,
    Tetrachoric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgaOptions {
    pub gamma: f64,
    pub steps: usize,
    pub n_lambda: usize,
    pub correlation: CorrelationChoice,
}

impl Default for EgaOptions {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            steps: DEFAULT_STEPS,
            n_lambda: crate::ggm::DEFAULT_N_LAMBDA,
            correlation: CorrelationChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DimVariable {
    pub item: usize,
    pub dimension: usize,
}

#[derive(Debug, Clone)]
pub struct EgaResult {
    pub ndim: usize,
    pub correlation: CorrelationMatrix,
    pub network: PartialNetwork,
    /// Dimension of each item, ids from 1.
    pub membership: Vec<usize>,
    /// Items grouped by dimension, then by item index.
    pub dim_variables: Vec<DimVariable>,
    pub communities: CommunityPartition,
}

/// Correlation matrix for `data` under `choice`.
pub fn correlation_for(data: &Dataset, choice: CorrelationChoice) -> Result<CorrelationMatrix> {
    match (choice, data) {
        (CorrelationChoice::Auto, Dataset::Binary(b)) | (CorrelationChoice::Tetrachoric, Dataset::Binary(b)) => {
            tetrachoric_matrix(b)
        }
        (CorrelationChoice::Auto, Dataset::Continuous(c)) | (CorrelationChoice::Pearson, Dataset::Continuous(c)) => {
            pearson_matrix(c)
        }
        (CorrelationChoice::Pearson, Dataset::Binary(b)) => {
            pearson_matrix(&ContinuousDataset::from_values(b.values.map(f64::from))?)
        }
        (CorrelationChoice::Tetrachoric, Dataset::Continuous(_)) => {
            Err(Error::InvalidInput("tetrachoric correlations need 0/1 data".into()))
        }
    }
}

pub fn ega(data: &Dataset, opts: &EgaOptions) -> Result<EgaResult> {
    let (n, p) = (data.n_obs(), data.n_items());
    if n < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 observations, got {n}")).in_stage("ega"));
    }
    if p < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 items, got {p}")).in_stage("ega"));
    }
    let correlation = correlation_for(data, opts.correlation).map_err(|e| e.in_stage("correlation"))?;
    ega_from_correlation(correlation, n, opts)
}

/// Pipeline from an already-estimated correlation matrix.
pub fn ega_from_correlation(correlation: CorrelationMatrix, n: usize, opts: &EgaOptions) -> Result<EgaResult> {
    let glasso_opts = EbicGlassoOptions {
        gamma: opts.gamma,
        n_lambda: opts.n_lambda,
        ..Default::default()
    };
    let network = ebic_glasso(&correlation, n, &glasso_opts).map_err(|e| e.in_stage("glasso"))?;
    let graph = WeightedGraph::from_signed(&network.weights).map_err(|e| e.in_stage("walktrap"))?;
    let communities = walktrap_communities(&graph, opts.steps).map_err(|e| e.in_stage("walktrap"))?;
    let membership = communities.membership.clone();
    let mut dim_variables: Vec<DimVariable> = membership
        .iter()
        .enumerate()
        .map(|(item, &dimension)| DimVariable { item, dimension })
        .collect();
    dim_variables.sort_by_key(|d| (d.dimension, d.item));
    Ok(EgaResult {
        ndim: communities.n_communities,
        correlation,
        network,
        membership,
        dim_variables,
        communities,
    })
}
