//! Equality-form SDP export of the cap problem.
//!
//! The solved problem is: maximize C . X subject to A_k . X = b_k and
//! X >= 0, where A . X = sum_ij A_ij X_ij entrywise with no conjugation.
//! Matrices are therefore stored transposed, so that A . X = tr(M X) for the
//! physical constraint matrix M. The objective satisfies C . J = alpha for
//! every valid Choi matrix, and the constraint families pin down exactly the
//! admissible expansions: the trace normalization, both vanishing marginals,
//! the operator-basis completions orthogonal to each observable on its
//! readout column, and the ratio constraint tying the two readout
//! coefficients together.
//!
//! No solver is embedded; the export feeds external SDP tools. The text
//! format is line-oriented:
//!
//! ```text
//! sdp n=<qubits> dim=<4^n> constraints=<m>
//! C
//! <dim rows of dim complex entries, written "re im", space separated>
//! A <k> b=<b_k>
//! <dim rows as above>
//! ```
//!
//! Numbers use the shortest round-trip decimal form, so write/read is
//! bit-exact.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::choi::validate_observables;
use crate::error::{Error, Result};
use crate::matrix::{frobenius_norm, kron, trace_product, CMatrix};
use crate::observable::Observable;
use crate::pauli::PauliString;

#[derive(Clone, Debug)]
pub struct SdpConstraint {
    /// Stored transposed: `dot(matrix, X) = tr(M X)` for the physical M.
    pub matrix: CMatrix,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub n: usize,
    pub objective: CMatrix,
    pub constraints: Vec<SdpConstraint>,
}

/// Entrywise dot sum_ij A_ij X_ij, real part.
pub fn dot(a: &CMatrix, x: &CMatrix) -> f64 {
    a.iter().zip(x.iter()).map(|(p, q)| (p * q).re).sum()
}

impl SdpProblem {
    pub fn psd_dim(&self) -> usize {
        1 << (2 * self.n)
    }

    pub fn evaluate_objective(&self, x: &CMatrix) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest absolute constraint violation of `x`.
    pub fn residual(&self, x: &CMatrix) -> f64 {
        self.constraints
            .iter()
            .map(|c| (dot(&c.matrix, x) - c.rhs).abs())
            .fold(0.0, f64::max)
    }
}

/// Operators completing `seed` to a basis of the Hermitian operator space,
/// each Hilbert-Schmidt orthogonal to `seed`: Gram-Schmidt over the Pauli
/// basis seeded with `seed`, dropping the one direction it absorbs. Exactly
/// 4^n - 1 completions of unit Frobenius norm.
fn basis_completion(seed: &CMatrix, n: usize) -> Result<Vec<CMatrix>> {
    let norm = frobenius_norm(seed);
    if norm < 1e-12 {
        return Err(Error::DegenerateBasis(norm));
    }
    let mut ortho: Vec<CMatrix> = vec![seed / Complex64::new(norm, 0.0)];
    let mut completions = Vec::new();
    for p in PauliString::all(n) {
        let mut v = p.matrix();
        for u in &ortho {
            let overlap = trace_product(u, &v);
            v -= u * overlap;
        }
        let vnorm = frobenius_norm(&v);
        if vnorm > 1e-9 {
            let unit = v / Complex64::new(vnorm, 0.0);
            completions.push(unit.clone());
            ortho.push(unit);
        }
    }
    let want = (1 << (2 * n)) - 1;
    if completions.len() != want {
        return Err(Error::DegenerateBasis(norm));
    }
    Ok(completions)
}

pub fn export_sdp(observables: &[Observable]) -> Result<SdpProblem> {
    validate_observables(observables)?;
    let n = observables[0].n_qubits();
    let pauli_dim = 1 << (2 * n);

    let mut readout_sum = CMatrix::zeros(pauli_dim, pauli_dim);
    let mut readouts = Vec::new();
    for (i, o) in observables.iter().enumerate() {
        let z = PauliString::z_on(n, i).matrix();
        let term = kron(o.matrix(), &z);
        readout_sum += &term;
        readouts.push(term);
    }
    let scale = trace_product(&readout_sum, &readout_sum).re;
    if scale.abs() < 1e-12 {
        return Err(Error::DegenerateBasis(scale));
    }
    let objective = readout_sum.transpose() / Complex64::new(scale, 0.0);

    let mut constraints = Vec::new();
    let push = |constraints: &mut Vec<SdpConstraint>, m: CMatrix, rhs: f64| {
        constraints.push(SdpConstraint {
            matrix: m.transpose(),
            rhs,
        });
    };

    push(
        &mut constraints,
        CMatrix::identity(pauli_dim, pauli_dim),
        pauli_dim as f64,
    );
    let identity = CMatrix::identity(1 << n, 1 << n);
    for p in PauliString::all(n) {
        if !p.is_identity() {
            push(&mut constraints, kron(&identity, &p.matrix()), 0.0);
        }
    }
    for p in PauliString::all(n) {
        if !p.is_identity() {
            push(&mut constraints, kron(&p.matrix(), &identity), 0.0);
        }
    }
    for (i, o) in observables.iter().enumerate() {
        let z = PauliString::z_on(n, i).matrix();
        for c in basis_completion(o.matrix(), n)? {
            push(&mut constraints, kron(&c, &z), 0.0);
        }
    }
    for i in 0..observables.len() - 1 {
        let a = observables[i + 1].trace_square();
        let b = observables[i].trace_square();
        let m = &readouts[i] * Complex64::new(a, 0.0) - &readouts[i + 1] * Complex64::new(b, 0.0);
        push(&mut constraints, m, 0.0);
    }

    Ok(SdpProblem {
        n,
        objective,
        constraints,
    })
}

fn write_matrix(out: &mut String, m: &CMatrix) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(' ');
            }
            let v = m[(r, c)];
            let _ = write!(out, "{} {}", v.re, v.im);
        }
        out.push('\n');
    }
}

pub fn to_text(problem: &SdpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "sdp n={} dim={} constraints={}",
        problem.n,
        problem.psd_dim(),
        problem.constraints.len()
    );
    out.push_str("C\n");
    write_matrix(&mut out, &problem.objective);
    for (k, c) in problem.constraints.iter().enumerate() {
        let _ = writeln!(out, "A {k} b={}", c.rhs);
        write_matrix(&mut out, &c.matrix);
    }
    out
}

struct Lines<'a> {
    inner: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        self.lineno += 1;
        self.inner
            .next()
            .ok_or_else(|| Error::ParseError(format!("unexpected end of input at line {}", self.lineno)))
    }
}

fn parse_f64(token: &str, lineno: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| Error::ParseError(format!("bad number {token:?} on line {lineno}")))
}

fn read_matrix(lines: &mut Lines, dim: usize) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        let line = lines.next_line()?;
        let mut tokens = line.split_whitespace();
        for c in 0..dim {
            let re = parse_f64(
                tokens
                    .next()
                    .ok_or_else(|| Error::ParseError(format!("short row on line {}", lines.lineno)))?,
                lines.lineno,
            )?;
            let im = parse_f64(
                tokens
                    .next()
                    .ok_or_else(|| Error::ParseError(format!("short row on line {}", lines.lineno)))?,
                lines.lineno,
            )?;
            m[(r, c)] = Complex64::new(re, im);
        }
        if tokens.next().is_some() {
            return Err(Error::ParseError(format!(
                "trailing entries on line {}",
                lines.lineno
            )));
        }
    }
    Ok(m)
}

fn header_field<'a>(token: Option<&'a str>, key: &str, lineno: usize) -> Result<&'a str> {
    match token.and_then(|t| t.strip_prefix(key)).and_then(|t| t.strip_prefix('=')) {
        Some(v) => Ok(v),
        None => Err(Error::ParseError(format!(
            "expected {key}=<value> on line {lineno}"
        ))),
    }
}

pub fn from_text(text: &str) -> Result<SdpProblem> {
    let mut lines = Lines {
        inner: text.lines(),
        lineno: 0,
    };
    let header = lines.next_line()?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("sdp") {
        return Err(Error::ParseError("missing sdp header".into()));
    }
    let n: usize = header_field(tokens.next(), "n", 1)?
        .parse()
        .map_err(|_| Error::ParseError("bad n in header".into()))?;
    let dim: usize = header_field(tokens.next(), "dim", 1)?
        .parse()
        .map_err(|_| Error::ParseError("bad dim in header".into()))?;
    if n == 0 || n > 16 || dim != 1 << (2 * n) {
        return Err(Error::ParseError(format!("dim {dim} does not match n={n}")));
    }
    let m: usize = header_field(tokens.next(), "constraints", 1)?
        .parse()
        .map_err(|_| Error::ParseError("bad constraint count in header".into()))?;

    if lines.next_line()? != "C" {
        return Err(Error::ParseError("expected C block".into()));
    }
    let objective = read_matrix(&mut lines, dim)?;
    let mut constraints = Vec::with_capacity(m);
    for k in 0..m {
        let line = lines.next_line()?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some("A") {
            return Err(Error::ParseError(format!(
                "expected constraint header on line {}",
                lines.lineno
            )));
        }
        let idx: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::ParseError(format!("bad constraint index on line {}", lines.lineno)))?;
        if idx != k {
            return Err(Error::ParseError(format!(
                "constraint {idx} out of order on line {}",
                lines.lineno
            )));
        }
        let rhs = parse_f64(header_field(tokens.next(), "b", lines.lineno)?, lines.lineno)?;
        let matrix = read_matrix(&mut lines, dim)?;
        constraints.push(SdpConstraint { matrix, rhs });
    }
    Ok(SdpProblem {
        n,
        objective,
        constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::{build_choi, BetaMap};
    use crate::presets::{example1, example2};

    #[test]
    fn constraint_count_and_dim() {
        let (o1, o2) = example1();
        let p = export_sdp(&[o1, o2]).unwrap();
        assert_eq!(p.psd_dim(), 16);
        assert_eq!(p.constraints.len(), 62);
        assert_eq!(p.constraints[0].rhs, 16.0);
    }

    #[test]
    fn certificate_satisfies_constraints_and_objective_is_alpha() {
        let (o1, o2) = example1();
        let pair = [o1, o2];
        let p = export_sdp(&pair).unwrap();
        let alpha = std::f64::consts::FRAC_1_SQRT_2;
        let j = build_choi(&pair, alpha, &BetaMap::new()).unwrap();
        assert!(p.residual(j.dense()) < 1e-9);
        assert!((p.evaluate_objective(j.dense()) - alpha).abs() < 1e-9);

        let (o1, o2) = example2();
        let pair = [o1, o2];
        let p = export_sdp(&pair).unwrap();
        let mut beta = BetaMap::new();
        beta.insert(("XI".parse().unwrap(), "ZZ".parse().unwrap()), -0.2);
        beta.insert(("ZY".parse().unwrap(), "ZZ".parse().unwrap()), 0.2);
        let j = build_choi(&pair, 0.9, &beta).unwrap();
        assert!(p.residual(j.dense()) < 1e-9);
        assert!((p.evaluate_objective(j.dense()) - 0.9).abs() < 1e-9);
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let (o1, o2) = example2();
        let p = export_sdp(&[o1, o2]).unwrap();
        let text = to_text(&p);
        let q = from_text(&text).unwrap();
        assert_eq!(q.n, p.n);
        assert_eq!(q.constraints.len(), p.constraints.len());
        assert_eq!(q.objective, p.objective);
        for (a, b) in p.constraints.iter().zip(&q.constraints) {
            assert_eq!(a.matrix, b.matrix);
            assert_eq!(a.rhs.to_bits(), b.rhs.to_bits());
        }
        assert_eq!(to_text(&q), text);
    }

    #[test]
    fn zero_observable_is_degenerate() {
        let zero = Observable::new(CMatrix::zeros(4, 4)).unwrap();
        let (_, o2) = example1();
        match export_sdp(&[zero, o2]) {
            Err(Error::DegenerateBasis(_)) => {}
            other => panic!("expected DegenerateBasis, got {other:?}"),
        }
    }

    #[test]
    fn malformed_text_is_rejected() {
        assert!(from_text("").is_err());
        assert!(from_text("sdp n=2 dim=15 constraints=0").is_err());
        let (o1, o2) = example1();
        let p = export_sdp(&[o1, o2]).unwrap();
        let text = to_text(&p);
        let truncated = &text[..text.len() / 2];
        assert!(from_text(truncated).is_err());
    }
}
