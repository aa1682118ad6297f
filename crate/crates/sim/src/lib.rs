//! Simulation experiments comparing signflip and permutation parallel
//! analysis under homogeneous and heterogeneous noise.

// Negated comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod homogenization;
pub mod noise;
pub mod sweep;

pub use homogenization::{homogenization_demo, homogenization_demo_with, HomogenizationDemo, KsDistances};
pub use noise::{noise_sv_distributions, NoiseSvSamples, NoiseSvSummary};
pub use sweep::{
    default_theta_grid, experiment_hetero_grid, experiment_hetero_rows, experiment_homogeneous, parse_theta_grid,
    run_once, run_sweep, MethodSummary, SweepConfig, SweepResult, ThetaSummary,
};
