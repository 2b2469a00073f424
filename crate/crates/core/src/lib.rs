//! Dimensionality estimation for item data.
//!
//! The central pipeline ([`ega::ega`]) estimates a correlation matrix, fits a
//! sparse Gaussian graphical model by EBIC-selected graphical lasso, and
//! counts the communities the walktrap algorithm finds in the resulting
//! partial-correlation network. Six classical factor-retention rules live in
//! [`baselines`], and [`simstudy`] runs all seven over simulated designs.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod correlation;
pub mod datagen;
pub mod ega;
pub mod error;
pub mod ggm;
pub mod linalg;
pub mod optim;
pub mod simstudy;
pub mod walktrap;

pub use correlation::{CorrelationKind, CorrelationMatrix};
pub use datagen::{BinaryDataset, ContinuousDataset, Dataset, FactorSpec, SimulationCondition};
pub use ega::{ega, EgaOptions, EgaResult};
pub use error::{Error, Result};
pub use ggm::PartialNetwork;
pub use walktrap::{CommunityPartition, WeightedGraph};
