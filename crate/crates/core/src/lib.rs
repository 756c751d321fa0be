//! Split linearized Bregman paths for generalized linear models with
//! structural sparsity.
//!
//! A path produces two estimators at every recorded time: a dense predictor
//! `beta_pre` that fits the data, and an interpretable `beta_les` obtained by
//! projecting `beta_pre` onto the structure selected by the augmented sparse
//! variable `gamma`. The penalty structure is a stacked operator
//! `D = [I; rho * D_G]` over a voxel-neighbourhood graph, with a nonnegative
//! threshold on the vertex block and a signed threshold on the edge block.
//!
//! Modules:
//! - [`grid_graph`]: voxel grids, neighbourhood edges and the operator `D`.
//! - [`glm_loss`]: likelihoods, the split loss, gradients and spectral norms.
//! - [`sparsity_ops`]: shrinkage, supports and the kernel projection.
//! - [`solver`]: the iteration and regularization-path recording.
//! - [`metrics`]: accuracy, AUC, multi-set Dice and estimation errors.
//! - [`consistency_lab`]: subspace-angle diagnostics and the GLM simulation.
//! - [`synth_data`]: deterministic synthetic datasets and phantoms.
//! - [`io`]: text and CSV formats.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consistency_lab;
pub mod error;
pub mod glm_loss;
pub mod grid_graph;
pub mod io;
mod linalg;
pub mod metrics;
pub mod rng;
pub mod solver;
pub mod sparsity_ops;
pub mod synth_data;

pub use consistency_lab::{AngleEvaluationPoint, AngleProfile, SimulationConfig, SimulationResult};
pub use error::{Error, Result};
pub use glm_loss::{Dataset, GlmFamily, GlmModel, LossScale, SplitLossParams};
pub use grid_graph::{Connectivity, DifferenceOperator, EdgeList, VoxelGrid};
pub use metrics::MetricsReport;
pub use solver::{
    PathPoint, RecordSchedule, RegularizationPath, SolverConfig, SolverState, StepSize,
    VertexThreshold,
};
pub use sparsity_ops::SupportSet;
pub use synth_data::{PhantomSpec, PhantomTruth};
