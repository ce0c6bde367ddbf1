//! Dense matrices, initialization, first-order optimizers and a
//! finite-difference gradient oracle.

mod gradcheck;
mod init;
mod matrix;
mod optim;
mod rng;

pub use gradcheck::{finite_diff_grad, max_relative_error, DEFAULT_FD_EPS};
pub use init::{init_matrix, init_matrix_with, InitScheme};
pub use matrix::Matrix;
pub use optim::{OptimizerKind, OptimizerState};
pub use rng::{derive_seed, RngSeed};
