//! Randomized Nyström preconditioning for matrix-free variational image
//! reconstruction.
//!
//! The crate is organized bottom-up:
//!
//! - [`rng`], [`vector`], [`grid`], [`metrics`], [`dense`]: shared numerics.
//! - [`linops`]: matrix-free forward and regularization operators.
//! - [`sketch`]: Nyström approximation and the preconditioner built from it.
//! - [`krylov`]: CG and PCG.
//! - [`prox`]: proximal maps, dual-ball projections and weighted proximal
//!   mappings for `P = I + ŪŪᵀ`.
//! - [`solvers`]: the reweighted ℓp–ℓq method and weighted accelerated
//!   proximal gradient.
//! - [`problems`]: synthetic deblurring, super-resolution and CT instances.
//! - [`harness`]: experiment sweeps, CSV traces and the saved-time metric.

pub mod dense;
pub mod error;
pub mod grid;
pub mod harness;
pub mod krylov;
pub mod linops;
pub mod metrics;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod solvers;
pub mod sketch;
pub mod vector;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use grid::ImageGrid;
pub use linops::{GroupKind, GroupStructure, LinearOperator, Operator};
pub use rng::Rng;
pub use sketch::{NystromFactor, Preconditioner};
