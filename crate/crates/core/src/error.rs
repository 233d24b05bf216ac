use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("site {site} out of range for a chain of {num_qubits} qubits")]
    SiteOutOfRange { site: usize, num_qubits: usize },

    #[error("gate is not unitary (deviation {deviation:e})")]
    NonUnitaryGate { deviation: f64 },

    #[error("trajectory annihilated: post-measurement norm {norm:e} at site {site}")]
    TrajectoryAnnihilated { site: usize, norm: f64 },

    #[error("invalid site list: {0}")]
    InvalidSites(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("rank collapse: Gram-Schmidt vector {index} became linearly dependent")]
    RankCollapse { index: usize },

    #[error("no finite relaxation time for a vanishing gap")]
    NoRelaxationTime,

    #[error("divergent gap in the projective limit eta = 1")]
    DivergentGap,

    #[error("parameter out of range: {0}")]
    OutOfRange(&'static str),

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("empty series: {0}")]
    EmptySeries(&'static str),
}
