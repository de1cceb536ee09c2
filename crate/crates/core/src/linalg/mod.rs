//! Global tensor storage, a conjugate-gradient solver and MatrixMarket IO.

mod cg;
mod matrix_market;
mod sparse;

use thiserror::Error;

pub use cg::{cg_solve, cg_solve_with_guess, CgStats};
pub use matrix_market::{
    read_matrix_market, read_matrix_market_file, read_plain_vector, write_matrix_market, write_matrix_market_file,
    write_plain_vector, MatrixMarket,
};
pub use sparse::{Csr, DenseBlock, GlobalTensor, SparseMatrix};

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("index {index:?} out of range for shape {shape:?}")]
    IndexOutOfRange { index: Vec<usize>, shape: Vec<usize> },
    #[error("block has {block} axes but the tensor has rank {tensor}")]
    RankMismatch { tensor: usize, block: usize },
    #[error("block has {values} values, expected {expected}")]
    BlockSize { values: usize, expected: usize },
    #[error("tensors of rank {0} are not supported")]
    UnsupportedRank(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
