//! Sparse principal component regression (SPCR) and its adaptive variant (aSPCR).
//!
//! The estimator fits a regression on `k` sparse principal components in a single
//! stage, trading a least-squares regression loss against a PCA reconstruction
//! loss:
//!
//! ```text
//! (1-w) Σ_i (y_i - γ0 - γᵀBᵀx_i)²  +  w Σ_i ‖x_i - ABᵀx_i‖²
//!   + λβ(1-ζ) Σ_{l,j} ω_lj |β_lj|  +  λβ ζ Σ_j ‖β_j‖²  +  λγ ‖γ‖₁,     AᵀA = I_k
//! ```
//!
//! Crate layout:
//!
//! - [`data`]: datasets, configuration, fitted models and CSV ingestion.
//! - [`solver`]: blockwise coordinate descent with covariance (Gram) updates.
//! - [`adaptive`]: the two-stage aSPCR pipeline.
//! - [`selection`]: λ grids and K-fold cross-validation.
//! - [`baselines`]: PCA and classical principal component regression.
//! - [`simbench`]: the synthetic cases, Monte Carlo replications and metrics.
//! - [`linalg`]: the small dense kernels everything above relies on.

pub mod adaptive;
pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod linalg;
pub mod reference;
pub mod rng;
pub mod selection;
pub mod simbench;
pub mod solver;

pub use adaptive::{adaptive_weights, fit_aspcr, AdaptiveFit, AdaptiveOptions, WeightMatrix};
pub use baselines::{pca, pcr_fit, PcaDecomposition, PcrModel};
pub use data::{center, composite_coefficients, Dataset, EvalMetrics, SpcrConfig, SpcrModel};
pub use error::{Result, SpcrError};
pub use selection::{cross_validate, lambda_grid, CvResult, FoldPlan, GridSpacing, LambdaGrid};
pub use simbench::{make_case, run_benchmark, support_metrics, BenchReport, CaseId, SimCase};
pub use solver::{fit, objective, soft_threshold, Problem, SolverState, UpdateStrategy};
