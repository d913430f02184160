//! Observables, density matrices, and the random ensembles used throughout.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{
    ensure_hermitian, hermitize, trace_product, CMatrix, CVector, HERMITICITY_TOL,
};
use crate::pauli::PauliString;
use crate::rng::rng_from_seed;
use crate::spectrum::hermitian_eig;

/// Hermitian observable on n qubits, dimension 2^n.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
    n: usize,
}

impl Observable {
    /// Validates Hermiticity (within 1e-10), tracelessness (within 1e-10),
    /// spectral norm <= 1 + 1e-9, and a power-of-two dimension.
    pub fn new(matrix: CMatrix) -> Result<Observable> {
        ensure_hermitian(&matrix, HERMITICITY_TOL)?;
        let d = matrix.nrows();
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::InvalidObservable(format!(
                "dimension {d} is not a power of two >= 2"
            )));
        }
        let obs = Observable {
            matrix: hermitize(&matrix),
            n: d.trailing_zeros() as usize,
        };
        let tr = obs.matrix.trace().re;
        if tr.abs() > 1e-10 {
            return Err(Error::InvalidObservable(format!(
                "not traceless: tr = {tr:.3e}"
            )));
        }
        let norm = obs.spectral_norm();
        if norm > 1.0 + 1e-9 {
            return Err(Error::InvalidObservable(format!(
                "spectral norm {norm:.12} exceeds 1"
            )));
        }
        Ok(obs)
    }

    /// Real combination of Pauli strings; all strings must share one length.
    pub fn from_pauli_sum(terms: &[(f64, PauliString)]) -> Result<Observable> {
        let n = terms
            .first()
            .ok_or_else(|| Error::InvalidObservable("empty Pauli sum".into()))?
            .1
            .n_qubits();
        let d = 1usize << n;
        let mut m = CMatrix::zeros(d, d);
        for (coeff, string) in terms {
            if string.n_qubits() != n {
                return Err(Error::DimensionMismatch(format!(
                    "Pauli sum mixes {n} and {} qubits",
                    string.n_qubits()
                )));
            }
            m += string.matrix() * Complex64::new(*coeff, 0.0);
        }
        Observable::new(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectral_norm(&self) -> f64 {
        let s = hermitian_eig(&self.matrix).expect("validated Hermitian");
        s.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// tr(O^2), the squared Frobenius norm of a Hermitian matrix.
    pub fn trace_square(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }

    /// Coefficients o_k with O = sum_k o_k M_k over the 4^n Pauli strings,
    /// o_k = tr(O M_k) / 2^n; real because O is Hermitian.
    pub fn pauli_coefficients(&self) -> Vec<f64> {
        let d = self.dim();
        PauliString::all(self.n)
            .map(|p| {
                let a = p.action();
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..d {
                    acc += a.phase[r] * self.matrix[(a.col[r], r)];
                }
                acc.re / d as f64
            })
            .collect()
    }
}

/// Density matrix: Hermitian, unit trace, PSD within tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    n: usize,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<DensityMatrix> {
        ensure_hermitian(&matrix, HERMITICITY_TOL)
            .map_err(|e| Error::InvalidState(e.to_string()))?;
        let d = matrix.nrows();
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "dimension {d} is not a power of two >= 2"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let m = hermitize(&matrix);
        let lo = hermitian_eig(&m)
            .map_err(|e| Error::InvalidState(e.to_string()))?
            .lambda_min();
        if lo < -1e-9 {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:.3e}")));
        }
        Ok(DensityMatrix {
            matrix: m,
            n: d.trailing_zeros() as usize,
        })
    }

    pub fn pure(psi: &CVector) -> Result<DensityMatrix> {
        let norm = psi.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let unit = psi / Complex64::new(norm, 0.0);
        DensityMatrix::new(&unit * unit.adjoint())
    }

    pub fn maximally_mixed(n: usize) -> DensityMatrix {
        let d = 1usize << n;
        let m = CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0);
        DensityMatrix { matrix: m, n }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// tr(rho O); real up to round-off for valid inputs.
pub fn expectation(rho: &DensityMatrix, obs: &Observable) -> Result<f64> {
    if rho.dim() != obs.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs observable dim {}",
            rho.dim(),
            obs.dim()
        )));
    }
    Ok(trace_product(rho.matrix(), obs.matrix()).re)
}

/// GUE-style random observable: Hermitized complex Gaussian, projected
/// traceless, then normalized to unit spectral norm.
pub fn random_observable(n: usize, seed: u64) -> Result<Observable> {
    let d = 1usize << n;
    let mut rng = rng_from_seed(seed);
    let mut g = CMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[(r, c)] = Complex64::new(re, im);
        }
    }
    let mut h = hermitize(&g);
    let shift = h.trace().re / d as f64;
    for k in 0..d {
        h[(k, k)] -= Complex64::new(shift, 0.0);
    }
    let norm = hermitian_eig(&h)?
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if norm < 1e-12 {
        return Err(Error::InvalidObservable(
            "random draw collapsed to zero".into(),
        ));
    }
    Observable::new(h / Complex64::new(norm, 0.0))
}

/// Haar-random pure state: normalized vector of iid complex Gaussians.
pub fn haar_state(n: usize, seed: u64) -> DensityMatrix {
    let d = 1usize << n;
    let mut rng = rng_from_seed(seed);
    let mut psi = CVector::zeros(d);
    for k in 0..d {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        psi[k] = Complex64::new(re, im);
    }
    DensityMatrix::pure(&psi).expect("Gaussian vector is nonzero almost surely")
}
