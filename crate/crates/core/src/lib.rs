//! Generalized Lp-norm two-dimensional linear discriminant analysis with
//! regularization.
//!
//! Fits orthonormal discriminant directions for matrix-valued samples (for
//! example grayscale images) by minimizing the ratio of within-class to
//! between-class Lp-norm energy, with an Lp regularization term that keeps
//! every iteration's quadratic subproblem well posed. Each direction is the
//! limit of closed-form solves of reweighted quadratics; additional
//! directions are found in the orthogonal complement of the previous ones.
//! Measuring scatter with `p < 2` damps the influence of outliers; the
//! classical eigen-based L2 method is the special case `p = 2, sigma = 0`
//! and is included as a baseline.
//!
//! The crate also ships the surrounding experiment machinery: PGM dataset
//! ingestion, three seeded noise injectors (salt-and-pepper, rectangular
//! Gaussian, black block), a nearest-neighbor classifier under the Frobenius
//! metric, a synthetic dataset generator, and a deterministic harness that
//! sweeps reduced dimensions and writes CSV reports.

pub mod baseline;
pub mod classify;
pub mod dataset;
mod error;
pub mod experiment;
pub mod kv;
pub mod lp;
pub mod model;
pub mod noise;
pub mod pgm;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};

pub use baseline::{fit_2dlda, scatter_matrices, ScatterPair};
pub use classify::{accuracy, nn_classify, project, project_dataset, ProjectedSample};
pub use dataset::{class_statistics, load_dataset, ClassStats, Dataset, MatrixSample, PixelScale};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, MethodSpec};
pub use lp::{lp_norm, objective, LpParams};
pub use model::{ModelSource, ProjectionModel};
pub use noise::{
    inject_black_block, inject_gaussian_rect, inject_salt_pepper, NoiseKind, NoiseSpec,
};
pub use solver::{fit, null_space_basis, solve_direction, SolverConfig, SolverTrace, Termination};
pub use synth::{generate, make_synthetic, SynthSpec};
