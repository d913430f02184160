//! Named observable pairs used by the CLI, the tests, and the sweep.

use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::pauli::PauliString;

fn pauli_sum(terms: &[(f64, &str)]) -> Observable {
    let parsed: Vec<(f64, PauliString)> = terms
        .iter()
        .map(|(c, s)| (*c, s.parse().expect("preset Pauli strings are valid")))
        .collect();
    Observable::from_pauli_sum(&parsed).expect("preset observables are valid")
}

/// (X1 X2, (Z1 + Z2)/2): the fully anticommuting pair whose cap is sqrt(2)/2.
pub fn example1() -> (Observable, Observable) {
    (
        pauli_sum(&[(1.0, "XX")]),
        pauli_sum(&[(0.5, "ZI"), (0.5, "IZ")]),
    )
}

/// ((Z1 + Z2)/2, (X1 X2 - X1 Z2 + 1 Y2)/3): the pair whose cap improves from
/// ~0.811 to ~0.927 once the free Choi coefficients are used.
pub fn example2() -> (Observable, Observable) {
    (
        pauli_sum(&[(0.5, "ZI"), (0.5, "IZ")]),
        pauli_sum(&[(1.0 / 3.0, "XX"), (-1.0 / 3.0, "XZ"), (1.0 / 3.0, "IY")]),
    )
}

/// Interpolating family O1(p) = (1-p) Z1 Z2 + (p/2)(Z1 + Z2) against X1 X2.
/// At p = 0 the pair commutes and is carried at alpha = 1; at p = 1 it is the
/// example-1 pair up to ordering.
pub fn fig3_pair(p: f64) -> (Observable, Observable) {
    (
        pauli_sum(&[(1.0 - p, "ZZ"), (0.5 * p, "ZI"), (0.5 * p, "IZ")]),
        pauli_sum(&[(1.0, "XX")]),
    )
}

/// (Z1, Z2) on two qubits; carried exactly by the identity channel.
pub fn z_pair() -> (Observable, Observable) {
    (pauli_sum(&[(1.0, "ZI")]), pauli_sum(&[(1.0, "IZ")]))
}

/// Parses `example1`, `example2`, `zpair`, or `fig3:p=<x>`.
pub fn parse_preset(name: &str) -> Result<(Observable, Observable)> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        "zpair" => Ok(z_pair()),
        other => {
            if let Some(rest) = other.strip_prefix("fig3:p=") {
                let p: f64 = rest
                    .parse()
                    .map_err(|_| Error::ParseError(format!("bad p value {rest:?}")))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::ParseError(format!("p = {p} outside [0, 1]")));
                }
                Ok(fig3_pair(p))
            } else {
                Err(Error::ParseError(format!("unknown preset {other:?}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_normalized() {
        for (a, b) in [example1(), example2(), z_pair(), fig3_pair(0.35)] {
            for o in [a, b] {
                assert!(o.trace().abs() < 1e-12);
                assert!(o.spectral_norm() <= 1.0 + 1e-12);
            }
        }
        // family endpoints keep unit norm, interior too
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert!((fig3_pair(p).0.spectral_norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn preset_parsing() {
        assert!(parse_preset("example1").is_ok());
        assert!(parse_preset("fig3:p=0.4").is_ok());
        assert!(parse_preset("fig3:p=1.5").is_err());
        assert!(parse_preset("nope").is_err());
    }
}
