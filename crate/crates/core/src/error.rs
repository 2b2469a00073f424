use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong inside the estimation pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid factor model: {0}")]
    InvalidSpec(String),

    #[error("matrix is not positive definite (leading minor {minor} is not positive)")]
    NotPositiveDefinite { minor: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("constant column(s) {columns:?}: correlation is undefined")]
    ConstantColumns { columns: Vec<usize> },

    #[error("tetrachoric correlation undefined: a margin of the 2x2 table is empty")]
    UndefinedCorrelation,

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("glasso did not converge at lambda = {lambda} after {iterations} sweeps")]
    GlassoNonConvergence {
        lambda: f64,
        iterations: usize,
        last_iterate: Box<nalgebra::DMatrix<f64>>,
    },

    #[error("factor model with {k} factors on {p} items has negative degrees of freedom")]
    InfeasibleModel { k: usize, p: usize },

    #[error("correlation matrix has no off-diagonal association; lambda path is degenerate")]
    DegeneratePath,

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips pipeline-stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
