//! Finite-length performance analysis of frameless ALOHA on the collision
//! channel with successive interference cancellation.
//!
//! The crate computes the exact packet error rate and throughput of a batch
//! of `n` users contending over `m` slots, where each user transmits in each
//! slot independently with probability `beta / n`. Singleton slots decode;
//! decoded users are cancelled everywhere, possibly uncovering new
//! singletons (a peeling process). Three independent routes to the same
//! quantities are provided and cross-checked:
//!
//! - [`analysis`]: an exact dynamic program over the decoder's
//!   (cloud, ripple) state distribution,
//! - [`monte_carlo`]: a seeded, reproducible peeling simulator,
//! - [`oracle`]: exhaustive enumeration of all incidence matrices for tiny
//!   instances.
//!
//! On top of these sit PER lower [`bounds`] and grid-search [`optimizer`]s
//! for the peak-throughput load and for two-stage schedules that push the
//! error floor down.
//!
//! With the default `parallel` feature, simulations, enumerations, and
//! parameter sweeps fan out over a rayon pool; results are bit-identical to
//! the sequential build.

pub mod analysis;
pub mod bounds;
pub mod config;
pub mod degree;
pub mod error;
pub mod monte_carlo;
pub mod optimizer;
pub mod oracle;

mod exec;
mod num;

pub use analysis::{
    analyze, cloud_exit_probability, initial_state, transition, AnalysisResult, AnalyzeOptions,
    DecoderState, StateDistribution,
};
pub use bounds::{per_lower_bound, BoundResult};
pub use config::{ProtocolConfig, Schedule};
pub use degree::{
    binomial_omega, omega_for_config, poisson_omega, two_stage_omega, DegreeDistribution, OmegaMode,
};
pub use error::{Error, Result};
pub use monte_carlo::{
    peel, peel_with_rng, sample_graph, simulate, simulate_serial, ContentionGraph, SimulationResult,
};
pub use optimizer::{
    optimize_floor, optimize_peak, sweep, FloorSearchOptions, PeakResult, PeakSearchOptions,
    SweepOptions, SweepRow, TwoStageResult,
};
pub use oracle::{enumerate_exact, OracleResult};
