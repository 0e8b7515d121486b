//! Dense complex linear algebra for small quantum systems: Hermitian
//! eigendecomposition, spectral matrix functions, Kronecker products and
//! partial traces.

mod dense;
mod eigen;
pub mod io;

pub use dense::{
    partial_trace_matrix, tensor, ComplexMatrix, HermitianMatrix, Subsystem, HERMITIAN_TOL,
    MAX_DIM,
};
pub use eigen::{
    eig_hermitian, log_sum_exp, log_trace_exp, matrix_exp, matrix_func, matrix_log,
    numerical_rank, EigenDecomposition, JACOBI_TOL, RANK_TOL,
};

use crate::error::Result;
use crate::states::DensityMatrix;

/// Reduced state of the kept subsystem of a bipartite density matrix.
pub fn partial_trace(
    rho_ab: &DensityMatrix,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<DensityMatrix> {
    let reduced = partial_trace_matrix(rho_ab.as_matrix(), dims, keep)?;
    DensityMatrix::new(HermitianMatrix::new(reduced)?)
}
