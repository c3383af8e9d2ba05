use thiserror::Error;

use crate::graph::SampleId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("no connected draw after {attempts} attempts")]
    ConnectivityFailure { attempts: usize },

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("invalid passband: {0}")]
    InvalidPassband(String),

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("sample {0} out of range")]
    InvalidSample(SampleId),

    #[error("sample {0} already observed with a different sign")]
    ConflictingObservation(SampleId),

    #[error("equality constraints have rank {rank} >= dimension {dim}; cone is {{0}}")]
    DimensionCollapse { rank: usize, dim: usize },

    #[error("constraint row has norm {0:e} (zero row)")]
    ZeroRow(f64),

    #[error("subset enumeration needs {subsets} subsets, cap is {cap}; reduce the bandwidth")]
    EnumerationTooLarge { subsets: u128, cap: u128 },

    #[error("exact volume supports dimension 2 or 3 with inequality constraints only (got dim {0})")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fewer than {needed} linearly independent rows (found {found})")]
    RankDeficientBasis { needed: usize, found: usize },

    #[error("no candidates left")]
    NoCandidates,

    #[error("extreme-vector set is empty")]
    EmptyEvSet,

    #[error("budget {budget} must exceed bandwidth {bandwidth}")]
    BudgetTooSmall { budget: usize, bandwidth: usize },

    #[error("budget {budget} exceeds domain size {domain}")]
    BudgetTooLarge { budget: usize, domain: usize },

    #[error("iterate collapsed to zero after {restarts} restarts")]
    DegenerateIterate { restarts: usize },

    #[error("input vector is not unit norm (norm {0})")]
    NonUnitInput(f64),

    #[error("invalid volumes: parent {parent}, child {child}")]
    InvalidVolumes { parent: f64, child: f64 },

    #[error("segmentation tree depth {0} exceeds the cap of 12")]
    TreeTooLarge(usize),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("greedy criteria disagree: imbalance picks {imbalance}, benefit picks {benefit}")]
    PolicyDisagreement { imbalance: SampleId, benefit: SampleId },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("schema error: {0}")]
    SchemaError(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
