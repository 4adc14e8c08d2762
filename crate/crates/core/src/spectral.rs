//! Dense eigendecomposition check that a state lies in the kernel of a
//! Hermitian operator. Independent of the residual route in `history`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{Operator, StateVector, C64};

/// Eigenvalues with `|lambda| <= ZERO_EIGEN_TOL` span the kernel.
pub const ZERO_EIGEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelCheck {
    /// Dimension of the numerical zero eigenspace.
    pub kernel_dim: usize,
    /// `||psi - P psi|| / ||psi||` with `P` the kernel projector.
    pub projection_residual: f64,
    /// Smallest nonzero `|lambda|`, the spectral gap above the kernel.
    pub gap: f64,
}

pub fn kernel_projection(op: &Operator, psi: &StateVector) -> Result<KernelCheck> {
    let n = op.dim();
    if psi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: op.dims().to_vec(),
            found: psi.dims().to_vec(),
        });
    }
    if !op.is_hermitian(1e-12) {
        return Err(Error::InvalidArgument("kernel oracle requires a Hermitian operator".into()));
    }
    let m = DMatrix::from_row_slice(n, n, op.entries());
    let eig = m.symmetric_eigen();
    let v = DVector::from_column_slice(psi.amplitudes());
    let mut projected = DVector::<C64>::zeros(n);
    let mut kernel_dim = 0;
    let mut gap = f64::INFINITY;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= ZERO_EIGEN_TOL {
            let col = eig.eigenvectors.column(i);
            let coeff = col.dotc(&v);
            projected += col * coeff;
            kernel_dim += 1;
        } else {
            gap = gap.min(lambda.abs());
        }
    }
    let residual = (&v - projected).norm() / v.norm();
    Ok(KernelCheck {
        kernel_dim,
        projection_residual: residual,
        gap,
    })
}
