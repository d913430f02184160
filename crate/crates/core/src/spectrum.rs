//! Hermitian eigendecomposition with a deterministic ordering contract.

use num_complex::Complex64;

use crate::error::Result;
use crate::matrix::{ensure_hermitian, hermitize, CMatrix, CVector, HERMITICITY_TOL};

/// Eigendecomposition of a Hermitian matrix.
///
/// `values` is sorted descending; column k of `vectors` is the unit
/// eigenvector for `values[k]`, with its phase fixed so that the first
/// component of magnitude above 1e-10 is real and positive. Ties in the
/// eigenvalues keep the backend's completion of the degenerate subspace but
/// the (value, phase) ordering itself is deterministic for identical input.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_min(&self) -> f64 {
        *self.values.last().expect("empty spectrum")
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn vector(&self, k: usize) -> CVector {
        CVector::from_column_slice(self.vectors.column(k).as_slice())
    }

    /// Columns whose eigenvalue is within `tol` of the smallest one.
    pub fn ground_columns(&self, tol: f64) -> Vec<usize> {
        let lo = self.lambda_min();
        (0..self.dim()).filter(|&k| self.values[k] - lo <= tol).collect()
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// The input must be Hermitian within 1e-10 (entrywise); it is symmetrized
/// before factorization so round-off in the input does not leak into the
/// output. Residuals satisfy ||A v - lambda v|| <= ~1e-12 * ||A||_F for the
/// dimensions used here (<= 64).
pub fn hermitian_eig(a: &CMatrix) -> Result<Spectrum> {
    ensure_hermitian(a, HERMITICITY_TOL)?;
    let se = hermitize(a).symmetric_eigen();
    let d = a.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    // descending by value; stable on exact ties
    order.sort_by(|&i, &j| se.eigenvalues[j].partial_cmp(&se.eigenvalues[i]).unwrap());
    let mut values = Vec::with_capacity(d);
    let mut vectors = CMatrix::zeros(d, d);
    for (k, &src) in order.iter().enumerate() {
        values.push(se.eigenvalues[src]);
        let col = se.eigenvectors.column(src);
        let phase = col
            .iter()
            .find(|e| e.norm() > 1e-10)
            .map(|e| e / e.norm())
            .unwrap_or_else(|| Complex64::new(1.0, 0.0));
        for r in 0..d {
            vectors[(r, k)] = col[r] * phase.conj();
        }
    }
    Ok(Spectrum { values, vectors })
}

/// Smallest eigenvalue only; same Hermiticity contract as [`hermitian_eig`].
pub fn lambda_min(a: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(a)?.lambda_min())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{frobenius_norm, identity};
    use crate::observable::random_observable;

    #[test]
    fn diagonal_matrix_sorted_descending() {
        let mut a = identity(3);
        a[(0, 0)] = Complex64::new(-1.0, 0.0);
        a[(1, 1)] = Complex64::new(2.0, 0.0);
        a[(2, 2)] = Complex64::new(0.5, 0.0);
        let s = hermitian_eig(&a).unwrap();
        assert_eq!(s.values.len(), 3);
        assert!((s.values[0] - 2.0).abs() < 1e-12);
        assert!((s.values[1] - 0.5).abs() < 1e-12);
        assert!((s.values[2] + 1.0).abs() < 1e-12);
        assert!((s.lambda_min() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        for seed in 0..20u64 {
            let o = random_observable(2, seed).unwrap();
            let a = o.matrix().clone();
            let s = hermitian_eig(&a).unwrap();
            let d = 4;
            let mut recon = CMatrix::zeros(d, d);
            for k in 0..d {
                let v = s.vector(k);
                recon += &v * v.adjoint() * Complex64::new(s.values[k], 0.0);
            }
            assert!(frobenius_norm(&(recon - &a)) <= 1e-9 * frobenius_norm(&a).max(1.0));
            let g = s.vectors.adjoint() * &s.vectors;
            assert!(frobenius_norm(&(g - identity(d))) < 1e-10);
        }
    }

    #[test]
    fn phase_canonicalization_is_deterministic() {
        let o = random_observable(2, 7).unwrap();
        let s1 = hermitian_eig(o.matrix()).unwrap();
        let s2 = hermitian_eig(o.matrix()).unwrap();
        assert_eq!(s1.values, s2.values);
        assert_eq!(s1.vectors, s2.vectors);
        for k in 0..4 {
            let v = s1.vector(k);
            let first = v.iter().find(|e| e.norm() > 1e-10).unwrap();
            assert!(first.im.abs() < 1e-12 && first.re > 0.0);
        }
    }
}
