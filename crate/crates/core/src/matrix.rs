//! Dense complex matrix helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Hermiticity tolerance used by constructors that require Hermitian input.
pub const HERMITICITY_TOL: f64 = 1e-10;

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest entrywise deviation from Hermiticity, max_ij |A_ij - conj(A_ji)|.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_hermitian(a: &CMatrix, tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = hermiticity_defect(a);
    if defect > tol {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// (A + A^dag)/2; cheap way to strip round-off from a nominally Hermitian matrix.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.norm()
}

pub fn trace_re(a: &CMatrix) -> f64 {
    a.trace().re
}

/// tr(A B), exact complex value.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Traces out the left (most significant) tensor factor of an operator on a
/// `dim_left * dim_right` space, returning a `dim_right` square matrix.
pub fn partial_trace_left(a: &CMatrix, dim_left: usize, dim_right: usize) -> Result<CMatrix> {
    if a.nrows() != dim_left * dim_right || a.ncols() != dim_left * dim_right {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of {}x{} with factors {}x{}",
            a.nrows(),
            a.ncols(),
            dim_left,
            dim_right
        )));
    }
    let mut out = CMatrix::zeros(dim_right, dim_right);
    for l in 0..dim_left {
        for r in 0..dim_right {
            for c in 0..dim_right {
                out[(r, c)] += a[(l * dim_right + r, l * dim_right + c)];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn partial_trace_of_kron_scales_right_factor() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 1.0), c(2.0, -1.0), c(3.0, 0.0)]);
        let b = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(-0.5, 0.0)]);
        let traced = partial_trace_left(&kron(&a, &b), 2, 2).unwrap();
        // tr_left(A (x) B) = tr(A) B
        let expect = &b * c(4.0, 0.0);
        assert!((traced - expect).norm() < 1e-14);
    }

    #[test]
    fn hermiticity_defect_detects_asymmetry() {
        let mut a = identity(2);
        assert!(hermiticity_defect(&a) == 0.0);
        a[(0, 1)] = c(0.0, 1e-3);
        assert!(hermiticity_defect(&a) > 5e-4);
        assert!(ensure_hermitian(&a, 1e-10).is_err());
    }

    #[test]
    fn trace_product_matches_mul_trace() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.5), c(2.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let b = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(1.0, 1.0), c(2.0, -1.0), c(-0.5, 2.0)]);
        let direct = (&a * &b).trace();
        assert!((trace_product(&a, &b) - direct).norm() < 1e-14);
    }
}
