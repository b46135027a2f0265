//! Simulation library for Byzantine-resilient distributed SGD.
//!
//! A parameter server trains a model with `m` workers, some of which are
//! Byzantine. Each iteration it combines the received gradients with one of
//! the rules in [`aggregators`]: plain mean, coordinate-wise median, trimmed
//! mean, Krum, Bulyan, or LICM screening, which keeps the gradients whose
//! every coordinate stays within `gamma` times the movement of the
//! coordinate-wise median and needs no estimate of the number of attackers.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the `f64` instantiation that the simulator and CLI use.

pub mod aggregators;
pub mod attacks;
mod error;
pub mod rng;
mod scalar;
pub mod schedule;
pub mod simulator;
pub mod tasks;
mod vector;

pub use aggregators::{
    bulyan, coormed, krum, licm_aggregate, licm_select, mean, median_1d, trimmed_mean, AggregationResult,
    Aggregator, LicmState, Rule,
};
pub use attacks::{flip_labels, gaussian_attack, omniscient_attack, Attack, WorkerRoster};
pub use error::{DataError, Error, Result};
pub use rng::RngStream;
pub use scalar::Scalar;
pub use schedule::StepSchedule;
pub use simulator::{
    flat_region_radius, gradient_noise_std, run, seed_worker, MetricsRow, Purpose, RunConfig, RunResult,
};
pub use tasks::{
    accuracy, full_gradient, load_csv, load_idx, loss, make_synthetic_quadratic, write_idx, Dataset,
    GradientOracle, MlrTask, QuadraticTask, TaskSpec,
};
pub use vector::{dot, l2_norm, mean_of, vec_axpy, GradientBatch, Vector};

pub type ParamVector = Vector<f64>;
pub type ParamVector32 = Vector<f32>;
pub type Batch = GradientBatch<f64>;
pub type Batch32 = GradientBatch<f32>;
pub type Data = Dataset<f64>;
pub type Task = TaskSpec<f64>;
pub type Licm = LicmState<f64>;
pub type Config = RunConfig<f64>;
pub type Outcome = RunResult<f64>;
