//! Dense N-way tensors and a splitting augmented Lagrangian solver for
//! low multilinear-rank tensor completion.
//!
//! The crate is organized bottom-up:
//!
//! * [`tensor`] and [`mat`] provide the dense containers: first-index-fastest
//!   N-way tensors with mode-n unfolding/refolding and mode products, and
//!   the column-major matrices backing them.
//! * [`prox`] implements singular value thresholding, the proximal operator
//!   of the nuclear norm, on top of an internal Jacobi SVD.
//! * [`solver`] runs the splitting augmented Lagrangian iteration: project
//!   onto the observations, threshold every mode unfolding, update the
//!   multipliers, and grow the penalty on slow progress.
//! * [`problems`] generates reproducible random low multilinear-rank
//!   completion problems and scores recoveries (relative error, NRMSE).
//! * [`io`] persists tensors, masks, traces, summaries, and PPM images.
//!
//! Containers and the proximal layer are generic over the floating-point
//! scalar (see [`Scalar`]); the solver, generators, and file formats are
//! fixed to `f64`, which the accuracy targets and binary layouts assume.

pub mod error;
pub mod io;
pub mod mat;
pub mod problems;
pub mod prox;
pub mod scalar;
pub mod solver;
pub mod tensor;

mod rng;
mod svd;

pub use error::{Error, Result};
pub use mat::Mat;
pub use prox::{matrix_shrink, matrix_shrink_with_spectrum, numerical_rank, svd_full, vector_shrink, SvdFactors};
pub use problems::{gen_lowrank, nrmse, rel_err, GeneratedProblem, ProblemSpec};
pub use scalar::Scalar;
pub use solver::{
    beta_update, check_stop, multiplier_update, project_completion, solve, x_update, y_update,
    y_update_with_spectrum, IterTrace, SamplingMask, SolveResult, SolveStatus, SolverConfig,
    SolverState,
};
pub use tensor::{DenseTensor, Shape, UnfoldedMatrix};

/// Double-precision tensor, the type the solver pipeline works in.
pub type Tensor64 = DenseTensor<f64>;
/// Single-precision tensor for container-level work.
pub type Tensor32 = DenseTensor<f32>;
/// Double-precision column-major matrix.
pub type Mat64 = Mat<f64>;
/// Single-precision column-major matrix.
pub type Mat32 = Mat<f32>;
