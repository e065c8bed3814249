//! Sparse identification of falling-body dynamics.
//!
//! Heights sampled over time are smoothed and differentiated, and the
//! acceleration is regressed onto a polynomial library by sequentially
//! thresholded least squares, optionally with a support shared across many
//! trajectories. A drag simulator and a forecasting benchmark come along for
//! generating and scoring data.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod diffsmooth;
pub mod error;
pub mod io;
pub mod library;
pub mod lstsq;
pub mod ode;
pub mod rng;
pub mod simulate;
pub mod sindy;
pub mod trajectory;

pub use error::{Error, Result};
pub use simulate::{DragModel, SimResult};
pub use sindy::{FitConfig, GroupFitResult, PipelineConfig, Salience, SparseModel};
pub use trajectory::{BallSpec, FluidSpec, Trajectory};
