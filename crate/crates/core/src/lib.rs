//! Composite convex optimization with inexact proximal cubic-regularized
//! Newton methods.
//!
//! The crate provides:
//!
//! - composite test problems `F = f + h` with per-sample oracle access
//!   ([`problem`], [`dataset`]),
//! - subsampled gradient/Hessian estimators with Bernstein-based batch
//!   sizing ([`sampling`]),
//! - the cubic-regularized second-order model, its prox machinery and a
//!   high-accuracy reference subsolver with certified gaps ([`cubic`]),
//! - an importance-sampled variance-reduced subproblem solver ([`svrg`]),
//! - the inexact cubic Newton loop with per-iteration error-budget schedules
//!   ([`ipcnm`]) and its accelerated estimating-sequence variant
//!   ([`aipcnm`]),
//! - a proximal-gradient baseline and full-problem reference solves
//!   ([`baseline`]), and CSV-ready run logs ([`runlog`]).
//!
//! All numerics are generic over the scalar type through [`Scalar`]
//! (`f32` or `f64`); the `*64` aliases below cover the common
//! double-precision instantiations.

pub mod aipcnm;
pub mod baseline;
pub mod cubic;
pub mod dataset;
pub mod error;
pub mod ipcnm;
pub mod linalg;
pub mod problem;
pub mod runlog;
pub mod sampling;
pub mod scalar;
pub mod svrg;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Problem64 = problem::CompositeProblem<f64>;
pub type Nonsmooth64 = problem::NonsmoothTerm<f64>;
pub type ScheduleConfig64 = problem::ScheduleConfig<f64>;
pub type CubicModel64 = cubic::CubicModel<f64>;
pub type ModelSolution64 = cubic::ModelSolution<f64>;
pub type GradientEstimate64 = sampling::GradientEstimate<f64>;
pub type HessianEstimate64 = sampling::HessianEstimate<f64>;
pub type SvrgConfig64 = svrg::SvrgConfig<f64>;
pub type IpcnmConfig64 = ipcnm::IpcnmConfig<f64>;
pub type AipcnmConfig64 = aipcnm::AipcnmConfig<f64>;

pub type Problem32 = problem::CompositeProblem<f32>;
pub type CubicModel32 = cubic::CubicModel<f32>;
