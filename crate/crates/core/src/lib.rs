//! Complex basis pursuit denoising by randomized blockwise proximal gradient,
//! and a tomographic SAR pipeline built on it.
//!
//! The layers, bottom up:
//!
//! - [`model`]: acquisition geometry, parameter grids, steering matrix.
//! - [`prox`]: objective, gradient, soft-thresholding, backtracking.
//! - [`solver`]: RBPG, ISTA/FISTA references, SVD-Wiener.
//! - [`slimmer`]: L1 solve → model-order selection → debiased estimates.
//! - [`simulate`]: synthetic pixels and Monte Carlo detection rates.
//! - [`cli`]: stack files, run manifests and the `tomo` subcommands.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod prox;
pub mod rng;
pub mod simulate;
pub mod slimmer;
pub mod solver;

pub use error::{Error, Result};
pub use model::{AcquisitionGeometry, BaseFunction, GridAxis, MotionAxis, ParameterGrid, SteeringMatrix};
pub use prox::Objective;
pub use simulate::{DetectionResult, MonteCarloConfig, Scatterer, Scenario};
pub use slimmer::{Backend, Pipeline, PipelineConfig, ScattererEstimates};
pub use solver::{Solution, SolveStatus, SolverConfig};
