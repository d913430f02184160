//! Pauli strings on n qubits and their matrix / permutation representations.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, CVector};

/// Single-qubit Pauli letter. The discriminant is the base-4 digit used by
/// [`PauliString::index`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub fn from_digit(d: usize) -> Pauli {
        match d & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// 2x2 matrix of the letter.
    pub fn matrix(self) -> CMatrix {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let entries = match self {
            Pauli::I => [one, zero, zero, one],
            Pauli::X => [zero, one, one, zero],
            Pauli::Y => [zero, -i, i, zero],
            Pauli::Z => [one, zero, zero, -one],
        };
        CMatrix::from_row_slice(2, 2, &entries)
    }

    /// Column index and phase of the single nonzero entry in each row.
    fn action(self) -> ([usize; 2], [Complex64; 2]) {
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => ([0, 1], [one, one]),
            Pauli::X => ([1, 0], [one, one]),
            Pauli::Y => ([1, 0], [-i, i]),
            Pauli::Z => ([0, 1], [one, -one]),
        }
    }
}

/// Tensor product of Pauli letters, qubit 0 leftmost and most significant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> PauliString {
        assert!(!letters.is_empty(), "Pauli string needs at least one qubit");
        PauliString { letters }
    }

    pub fn identity(n: usize) -> PauliString {
        PauliString::new(vec![Pauli::I; n])
    }

    /// Z on the given qubit (0-indexed), identity elsewhere.
    pub fn z_on(n: usize, qubit: usize) -> PauliString {
        assert!(qubit < n);
        let mut letters = vec![Pauli::I; n];
        letters[qubit] = Pauli::Z;
        PauliString::new(letters)
    }

    /// Base-4 index with qubit 0 as the most significant digit.
    pub fn index(&self) -> usize {
        self.letters
            .iter()
            .fold(0usize, |acc, &p| (acc << 2) | p as usize)
    }

    pub fn from_index(n: usize, index: usize) -> PauliString {
        assert!(index < 1 << (2 * n), "index {index} out of range for n={n}");
        let mut letters = vec![Pauli::I; n];
        for q in 0..n {
            letters[n - 1 - q] = Pauli::from_digit((index >> (2 * q)) & 3);
        }
        PauliString::new(letters)
    }

    /// All 4^n strings in index order.
    pub fn all(n: usize) -> impl Iterator<Item = PauliString> {
        (0..1usize << (2 * n)).map(move |idx| PauliString::from_index(n, idx))
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Sign of the transpose: M^T = s M with s = (-1)^(number of Y letters).
    pub fn transpose_sign(&self) -> f64 {
        if self.letters.iter().filter(|&&p| p == Pauli::Y).count() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.letters.len()
    }

    /// Dense 2^n x 2^n matrix.
    pub fn matrix(&self) -> CMatrix {
        let action = self.action();
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for r in 0..d {
            m[(r, action.col[r])] = action.phase[r];
        }
        m
    }

    /// Row-sparse form: one nonzero per row, phase in {1, -1, i, -i}.
    pub fn action(&self) -> PauliAction {
        let n = self.letters.len();
        let d = 1usize << n;
        let mut col = vec![0usize; d];
        let mut phase = vec![Complex64::new(1.0, 0.0); d];
        for r in 0..d {
            let mut c = 0usize;
            let mut ph = Complex64::new(1.0, 0.0);
            for (q, &p) in self.letters.iter().enumerate() {
                let bit = (r >> (n - 1 - q)) & 1;
                let (cols, phases) = p.action();
                c = (c << 1) | cols[bit];
                ph *= phases[bit];
            }
            col[r] = c;
            phase[r] = ph;
        }
        PauliAction { col, phase }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &p in &self.letters {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<PauliString> {
        let letters = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::ParseError(format!("bad Pauli letter {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::ParseError("empty Pauli string".into()));
        }
        Ok(PauliString::new(letters))
    }
}

/// Sparse action of a Pauli-string-like operator: row r holds its single
/// nonzero entry at column `col[r]` with value `phase[r]`.
#[derive(Clone, Debug)]
pub struct PauliAction {
    pub col: Vec<usize>,
    pub phase: Vec<Complex64>,
}

impl PauliAction {
    pub fn dim(&self) -> usize {
        self.col.len()
    }

    /// Action of `self (x) other` on the combined space, self on the left
    /// (most significant) factor.
    pub fn kron(&self, other: &PauliAction) -> PauliAction {
        let (dl, dr) = (self.dim(), other.dim());
        let mut col = vec![0usize; dl * dr];
        let mut phase = vec![Complex64::new(0.0, 0.0); dl * dr];
        for rl in 0..dl {
            for rr in 0..dr {
                let r = rl * dr + rr;
                col[r] = self.col[rl] * dr + other.col[rr];
                phase[r] = self.phase[rl] * other.phase[rr];
            }
        }
        PauliAction { col, phase }
    }

    /// `<v| A |v>`; real for Hermitian actions, so the real part is returned.
    pub fn expectation(&self, v: &CVector) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..self.dim() {
            acc += v[r].conj() * self.phase[r] * v[self.col[r]];
        }
        acc.re
    }
}
