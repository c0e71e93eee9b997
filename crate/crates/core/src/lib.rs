//! Stochastic approximation Monte Carlo (SAMC) and its population variant
//! for estimating energy-region probabilities of a target density.

pub mod config;
pub mod density;
pub mod error;
pub mod gain;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod meanfield;
pub mod partition;
pub mod rng;
pub mod samc;
pub mod state;
pub mod stats;

pub use config::{Experiment, ExperimentConfig};
pub use density::{Component, EnergyFunction, MixtureDensity};
pub use error::{Error, Result};
pub use gain::{GainSchedule, ValidationReport, Verdict};
pub use harness::{
    compare_efficiency, mse_curve, normality_diagnostics, oracle_probs, rate_ratio_test, replicate,
    Algorithm, CurveTable, EmpiricalCovariance, OracleResult, Pairing, Progress, RatioReport,
    ReplicationSummary, RunSpec,
};
pub use kernels::{CrossoverConfig, MhKernel, RwProposal, StepOutcome};
pub use meanfield::{MassSource, MassVector, StabilityReport};
pub use partition::EnergyPartition;
pub use samc::{
    estimate_probs, estimate_probs_adjusted, run_pop_samc, run_samc, Checkpoint, CheckpointGrid,
    SamcConfig, Trajectory,
};
pub use state::{ChainState, DesiredDist, InitBox, PopulationState, ThetaState};
