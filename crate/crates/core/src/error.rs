use thiserror::Error;

/// Errors surfaced by configuration validation and the analysis pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The cloud-membership probability sank below the configured floor, so
    /// the cloud-to-ripple conditional probability is undefined. Only
    /// reachable for degree distributions whose mass sits entirely on
    /// degrees 0 and 1 (no cloud ever forms).
    #[error(
        "degenerate degree distribution at {unresolved} unresolved users: \
         cloud-membership probability {denominator:e} is below the floor {floor:e}"
    )]
    DegenerateDistribution {
        unresolved: u32,
        denominator: f64,
        floor: f64,
    },

    #[error("instance too large to enumerate: n*m = {edges} exceeds the bound {bound}")]
    EnumerationTooLarge { edges: u32, bound: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
