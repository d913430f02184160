//! Choi matrix of the adjoint channel and the zero-search in alpha.
//!
//! The adjoint of a unital channel that reads observable `O_i` off the
//! Pauli-Z of qubit i is pinned down by its Choi matrix
//!
//! ```text
//! J = I (x) I  +  alpha * sum_i O_i (x) Z_i  +  sum_(k,j) beta_kj M_k (x) M_j
//! ```
//!
//! with the output (adjoint) factor on the left. The channel is completely
//! positive exactly when J >= 0, which turns the largest usable commensuration
//! factor into an eigenvalue feasibility problem in `alpha` and the free
//! coefficients `beta`. Keys (k, j) with k = identity, j = identity, or
//! j = Z_i are fixed by unitality and the readout condition and may not be
//! assigned.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{identity, kron, partial_trace_left, trace_product, CMatrix};
use crate::observable::{DensityMatrix, Observable};
use crate::pauli::PauliString;
use crate::spectrum::{hermitian_eig, lambda_min};

/// Free Choi coefficients keyed by (output string, input string).
pub type BetaMap = BTreeMap<(PauliString, PauliString), f64>;

/// Built Choi matrix together with the coefficient record that produced it.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    n: usize,
    alpha: f64,
    observables: Vec<Observable>,
    beta: BetaMap,
    dense: CMatrix,
}

/// True when (k, j) is pinned by the construction and not a free beta slot.
pub fn is_reserved_key(n: usize, n_obs: usize, k: &PauliString, j: &PauliString) -> bool {
    k.is_identity()
        || j.is_identity()
        || (0..n_obs).any(|i| *j == PauliString::z_on(n, i))
}

pub(crate) fn validate_observables(observables: &[Observable]) -> Result<usize> {
    let first = observables
        .first()
        .ok_or_else(|| Error::InvalidObservable("no observables given".into()))?;
    let n = first.n_qubits();
    if observables.len() > n {
        return Err(Error::DimensionMismatch(format!(
            "{} observables need at least {} qubits, got n={n}",
            observables.len(),
            observables.len()
        )));
    }
    for (i, o) in observables.iter().enumerate() {
        if o.n_qubits() != n {
            return Err(Error::DimensionMismatch(format!(
                "observable {i} acts on {} qubits, expected {n}",
                o.n_qubits()
            )));
        }
        // A unital channel output has tr(Z_i) = 0, so only traceless
        // observables can be commensurated; trace components are unreachable.
        if o.trace().abs() > 1e-9 {
            return Err(Error::InvalidObservable(format!(
                "observable {i} has trace {:.3e}, expected traceless",
                o.trace()
            )));
        }
        let norm = o.spectral_norm();
        if norm > 1.0 + 1e-9 {
            return Err(Error::InvalidObservable(format!(
                "observable {i} has spectral norm {norm:.6} > 1"
            )));
        }
    }
    Ok(n)
}

fn validate_beta(n: usize, n_obs: usize, beta: &BetaMap) -> Result<()> {
    for ((k, j), value) in beta {
        if k.n_qubits() != n || j.n_qubits() != n {
            return Err(Error::DimensionMismatch(format!(
                "beta key ({k}, {j}) does not act on {n} qubits"
            )));
        }
        if is_reserved_key(n, n_obs, k, j) {
            return Err(Error::ReservedBetaKey(k.to_string(), j.to_string()));
        }
        if !value.is_finite() {
            return Err(Error::InvalidObservable(format!(
                "beta[({k}, {j})] = {value} is not finite"
            )));
        }
    }
    Ok(())
}

/// The alpha-independent and alpha-linear parts of J at fixed beta:
/// `J(alpha) = base + alpha * slope`.
#[derive(Clone, Debug)]
pub struct ChoiPencil {
    pub base: CMatrix,
    pub slope: CMatrix,
}

impl ChoiPencil {
    pub fn new(observables: &[Observable], beta: &BetaMap) -> Result<ChoiPencil> {
        let n = validate_observables(observables)?;
        validate_beta(n, observables.len(), beta)?;
        let dim = 1usize << (2 * n);
        let mut base = identity(dim);
        for ((k, j), value) in beta {
            base += kron(&k.matrix(), &j.matrix()) * Complex64::new(*value, 0.0);
        }
        let mut slope = CMatrix::zeros(dim, dim);
        for (i, o) in observables.iter().enumerate() {
            slope += kron(o.matrix(), &PauliString::z_on(n, i).matrix());
        }
        Ok(ChoiPencil { base, slope })
    }

    pub fn at(&self, alpha: f64) -> CMatrix {
        &self.base + &self.slope * Complex64::new(alpha, 0.0)
    }

    pub fn lambda_min(&self, alpha: f64) -> f64 {
        lambda_min(&self.at(alpha)).expect("pencil matrices are Hermitian")
    }
}

/// Assembles J for explicit coefficients. See the module docs for the layout;
/// the adjoint-output factor is the left (most significant) one.
pub fn build_choi(observables: &[Observable], alpha: f64, beta: &BetaMap) -> Result<ChoiMatrix> {
    if !alpha.is_finite() {
        return Err(Error::InvalidObservable(format!("alpha = {alpha}")));
    }
    let pencil = ChoiPencil::new(observables, beta)?;
    let n = observables[0].n_qubits();
    Ok(ChoiMatrix {
        n,
        alpha,
        observables: observables.to_vec(),
        beta: beta.clone(),
        dense: pencil.at(alpha),
    })
}

impl ChoiMatrix {
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dense.nrows()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> &BetaMap {
        &self.beta
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn dense(&self) -> &CMatrix {
        &self.dense
    }

    pub fn lambda_min(&self) -> f64 {
        lambda_min(&self.dense).expect("Choi matrix is Hermitian by construction")
    }

    /// Full coefficient c_kj of M_k (x) M_j in J, combining the identity
    /// block, the alpha-scaled observable columns, and free beta entries.
    pub fn coefficient(&self, k: &PauliString, j: &PauliString) -> f64 {
        let mut c = 0.0;
        if k.is_identity() && j.is_identity() {
            c += 1.0;
        }
        for (i, o) in self.observables.iter().enumerate() {
            if *j == PauliString::z_on(self.n, i) {
                c += self.alpha * o.pauli_coefficients()[k.index()];
            }
        }
        if let Some(b) = self.beta.get(&(k.clone(), j.clone())) {
            c += b;
        }
        c
    }

    /// Adjoint action on the j-th Pauli string: Phi^dag(M_j) = sum_k c_kj M_k.
    pub fn adjoint_of_pauli(&self, j: &PauliString) -> CMatrix {
        let d = 1usize << self.n;
        let mut out = CMatrix::zeros(d, d);
        for k in PauliString::all(self.n) {
            let c = self.coefficient(&k, j);
            if c != 0.0 {
                out += k.matrix() * Complex64::new(c, 0.0);
            }
        }
        out
    }

    /// Adjoint action on an arbitrary operator, by Pauli expansion.
    pub fn adjoint(&self, a: &CMatrix) -> Result<CMatrix> {
        let d = 1usize << self.n;
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, channel acts on dim {d}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut out = CMatrix::zeros(d, d);
        for j in PauliString::all(self.n) {
            let aj = trace_product(a, &j.matrix()) / Complex64::new(d as f64, 0.0);
            if aj.norm() > 0.0 {
                out += self.adjoint_of_pauli(&j) * aj;
            }
        }
        Ok(out)
    }

    /// Forward channel on a state via the transpose coefficient action:
    /// tr(Phi(rho) M_j) = tr(rho Phi^dag(M_j)).
    ///
    /// Eigenvalues of the output above -1e-7 are clamped to the simplex to
    /// absorb the certified -1e-8 CP slack; anything more negative errors.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let d = 1usize << self.n;
        if rho.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} vs channel dim {d}",
                rho.dim()
            )));
        }
        let r: Vec<f64> = PauliString::all(self.n)
            .map(|k| trace_product(rho.matrix(), &k.matrix()).re)
            .collect();
        let mut sigma = CMatrix::zeros(d, d);
        for j in PauliString::all(self.n) {
            let mut s = 0.0;
            for k in PauliString::all(self.n) {
                let c = self.coefficient(&k, &j);
                if c != 0.0 {
                    s += c * r[k.index()];
                }
            }
            if s != 0.0 {
                sigma += j.matrix() * Complex64::new(s / d as f64, 0.0);
            }
        }
        match DensityMatrix::new(sigma.clone()) {
            Ok(out) => Ok(out),
            Err(_) => {
                // clamp round-off negativity from a -1e-8-feasible certificate
                let s = hermitian_eig(&sigma)?;
                if s.lambda_min() < -1e-7 {
                    return Err(Error::InvalidState(format!(
                        "channel output has eigenvalue {:.3e}",
                        s.lambda_min()
                    )));
                }
                let mut rebuilt = CMatrix::zeros(d, d);
                let mut total = 0.0;
                for k in 0..d {
                    let v = s.values[k].max(0.0);
                    total += v;
                    let col = s.vector(k);
                    rebuilt += &col * col.adjoint() * Complex64::new(v, 0.0);
                }
                DensityMatrix::new(rebuilt / Complex64::new(total, 0.0))
            }
        }
    }
}

/// J >= 0 within tolerance: smallest eigenvalue above -tol.
pub fn check_cp(choi: &ChoiMatrix, tol: f64) -> bool {
    choi.lambda_min() >= -tol
}

/// Unitality of the forward channel and trace preservation:
/// tr_out(J) = 2^n I and unit coefficient on the identity block.
pub fn check_unital_tp(choi: &ChoiMatrix, tol: f64) -> bool {
    let d = 1usize << choi.n;
    let reduced = partial_trace_left(&choi.dense, d, d).expect("square by construction");
    let target = identity(d) * Complex64::new(d as f64, 0.0);
    if (reduced - target).norm() > tol {
        return false;
    }
    let c00 = choi.dense.trace().re / choi.dim() as f64;
    (c00 - 1.0).abs() <= tol
}

/// Largest alpha in (0, 1] with `lambda_min(J(alpha, beta)) >= 0`, by
/// bisection to an absolute tolerance of 1e-10. Returns exactly 1 when the
/// cap itself is feasible, and `InfeasibleBeta` when even alpha -> 0 is not.
pub fn solve_alpha_zero_beta(observables: &[Observable], beta: &BetaMap) -> Result<f64> {
    let pencil = ChoiPencil::new(observables, beta)?;
    solve_alpha_on_pencil(&pencil)
}

pub(crate) fn solve_alpha_on_pencil(pencil: &ChoiPencil) -> Result<f64> {
    if pencil.lambda_min(1e-9) < 0.0 {
        return Err(Error::InfeasibleBeta);
    }
    solve_alpha_from(pencil, 1e-9)
}

/// Largest feasible alpha in [anchor, 1] given that `anchor` itself is
/// feasible. Because lambda_min is concave in alpha, the feasible alphas form
/// an interval; climbing up from a known-feasible point stays valid even for
/// beta whose interval no longer reaches alpha -> 0.
///
/// Concavity makes both ends of the search rigorous: the chord to an
/// infeasible point lands feasible (regula falsi with an Illinois unstick),
/// and the tangent root from a feasible point, with the slope taken as the
/// ground-vector expectation of the pencil slope, bounds the boundary from
/// above, giving the 1e-10 exit test.
pub fn solve_alpha_from(pencil: &ChoiPencil, anchor: f64) -> Result<f64> {
    let eval = |alpha: f64| -> Result<(f64, f64)> {
        let s = hermitian_eig(&pencil.at(alpha))?;
        let g = s.vector(s.dim() - 1);
        let df = (g.adjoint() * &pencil.slope * &g)[(0, 0)].re;
        Ok((s.lambda_min(), df))
    };
    let (mut fx, mut dfx) = eval(anchor)?;
    if fx < 0.0 {
        return Err(Error::InfeasibleBeta);
    }
    let mut x = anchor;
    if dfx < 0.0 && -fx / dfx <= 1e-10 {
        return Ok(x);
    }
    let (f_one, _) = eval(1.0)?;
    if f_one >= 0.0 {
        return Ok(1.0);
    }
    let (mut h, mut fh) = (1.0, f_one);
    let mut feasible_streak = 0usize;
    for _ in 0..120 {
        let tangent = if dfx < 0.0 { x - fx / dfx } else { h };
        if tangent.min(h) - x <= 1e-10 {
            break;
        }
        let mut x_new = x - fx * (h - x) / (fh - fx);
        if !(x_new > x + 0.25e-10 && x_new < h - 0.25e-10) {
            x_new = 0.5 * (x + h);
        }
        let (f_new, df_new) = eval(x_new)?;
        if f_new >= 0.0 {
            x = x_new;
            fx = f_new;
            dfx = df_new;
            feasible_streak += 1;
            if feasible_streak >= 2 {
                // chord keeps landing short of the boundary; deflate the
                // stale end so the next chord reaches past it
                fh *= 0.5;
            }
        } else {
            h = x_new;
            fh = f_new;
            feasible_streak = 0;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::random_observable;

    fn obs(terms: &[(f64, &str)]) -> Observable {
        let parsed: Vec<(f64, PauliString)> = terms
            .iter()
            .map(|(c, s)| (*c, s.parse().unwrap()))
            .collect();
        Observable::from_pauli_sum(&parsed).unwrap()
    }

    fn pair_z1_z2() -> Vec<Observable> {
        vec![obs(&[(1.0, "ZI")]), obs(&[(1.0, "IZ")])]
    }

    #[test]
    fn z_pair_alpha_half_at_zero_beta() {
        let alpha = solve_alpha_zero_beta(&pair_z1_z2(), &BetaMap::new()).unwrap();
        assert!((alpha - 0.5).abs() < 1e-9, "alpha = {alpha}");
    }

    #[test]
    fn weyl_floor_on_random_pairs() {
        // lambda_min(J) >= 1 - 2 alpha for any two normalized observables
        for seed in 0..10u64 {
            let pair = vec![
                random_observable(2, seed).unwrap(),
                random_observable(2, seed + 1000).unwrap(),
            ];
            let pencil = ChoiPencil::new(&pair, &BetaMap::new()).unwrap();
            for &alpha in &[0.1, 0.3, 0.5] {
                let lo = pencil.lambda_min(alpha);
                assert!(
                    lo >= 1.0 - 2.0 * alpha - 1e-9,
                    "seed {seed} alpha {alpha}: {lo} < {}",
                    1.0 - 2.0 * alpha
                );
            }
        }
    }

    #[test]
    fn unital_tp_and_cp_on_small_alpha() {
        let mut beta = BetaMap::new();
        beta.insert(("XI".parse().unwrap(), "ZZ".parse().unwrap()), 0.05);
        let choi = build_choi(&pair_z1_z2(), 0.3, &beta).unwrap();
        assert!(check_unital_tp(&choi, 1e-9));
        assert!(check_cp(&choi, 1e-9));
        assert_eq!(choi.dim(), 16);
        assert!((choi.dense().trace().re - 16.0).abs() < 1e-12);
    }

    #[test]
    fn reserved_keys_are_rejected() {
        let mut beta = BetaMap::new();
        beta.insert(("XI".parse().unwrap(), "ZI".parse().unwrap()), 0.1);
        let err = build_choi(&pair_z1_z2(), 0.3, &beta).unwrap_err();
        assert!(matches!(err, Error::ReservedBetaKey(_, _)));
        let mut beta = BetaMap::new();
        beta.insert(("II".parse().unwrap(), "ZZ".parse().unwrap()), 0.1);
        assert!(build_choi(&pair_z1_z2(), 0.3, &beta).is_err());
    }

    #[test]
    fn infeasible_beta_is_reported() {
        let mut beta = BetaMap::new();
        beta.insert(("ZZ".parse().unwrap(), "ZZ".parse().unwrap()), -2.0);
        assert!(matches!(
            solve_alpha_zero_beta(&pair_z1_z2(), &beta),
            Err(Error::InfeasibleBeta)
        ));
    }

    #[test]
    fn traceful_observable_rejected() {
        let parsed: Vec<(f64, PauliString)> =
            vec![(0.5, "ZI".parse().unwrap()), (0.5, "II".parse().unwrap())];
        assert!(matches!(
            Observable::from_pauli_sum(&parsed),
            Err(Error::InvalidObservable(_))
        ));
    }

    #[test]
    fn adjoint_returns_scaled_observables() {
        let pair = pair_z1_z2();
        let choi = build_choi(&pair, 0.37, &BetaMap::new()).unwrap();
        for (i, o) in pair.iter().enumerate() {
            let adj = choi.adjoint_of_pauli(&PauliString::z_on(2, i));
            let expect = o.matrix() * Complex64::new(0.37, 0.0);
            assert!((adj - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn transposed_identity_certificate_reaches_alpha_one() {
        // The PSD cone of J holds Phi^dag composed with input transposition,
        // so the certificate that carries (Z1, Z2) at alpha = 1 has diagonal
        // beta_kk = transpose_sign(k); the all-plus diagonal is d * SWAP and
        // is not PSD. The reconstructed map sends rho to rho^T, whose
        // diagonal Z statistics match the physical (identity) channel.
        let pair = pair_z1_z2();
        let mut beta = BetaMap::new();
        for k in PauliString::all(2) {
            if !is_reserved_key(2, 2, &k, &k) {
                beta.insert((k.clone(), k.clone()), k.transpose_sign());
            }
        }
        let choi = build_choi(&pair, 1.0, &beta).unwrap();
        assert!(check_cp(&choi, 1e-9));
        assert!(check_unital_tp(&choi, 1e-9));
        let rho = crate::observable::haar_state(2, 5);
        let out = choi.apply(&rho).unwrap();
        assert!((out.matrix() - rho.matrix().transpose()).norm() < 1e-9);
        // this beta is feasible only near alpha = 1, so the from-zero solve
        // errors by contract while the anchored solve climbs to the cap
        assert!(matches!(
            solve_alpha_zero_beta(&pair, &beta),
            Err(Error::InfeasibleBeta)
        ));
        // feasibility here is the single point alpha = 1: the anchored solve
        // confirms the cap while any anchor below it sits outside the interval
        let pencil = ChoiPencil::new(&pair, &beta).unwrap();
        assert!((solve_alpha_from(&pencil, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(solve_alpha_from(&pencil, 1.0 - 1e-6).is_err());

        let mut plus = BetaMap::new();
        for k in PauliString::all(2) {
            if !is_reserved_key(2, 2, &k, &k) {
                plus.insert((k.clone(), k.clone()), 1.0);
            }
        }
        let swapish = build_choi(&pair, 1.0, &plus).unwrap();
        assert!(!check_cp(&swapish, 1e-9));
    }
}
