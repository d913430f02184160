//! Plain-text operator files: header `obs n=<n>`, then 2^n rows of 2^n
//! complex entries written as `re+imi`. Floats use the shortest
//! representation that parses back to the same value, so write -> read is
//! entrywise exact.

use incompat::error::{Error, Result};
use incompat::matrix::CMatrix;
use incompat::observable::Observable;
use num_complex::Complex64;

#[cfg(test)]
fn fmt_entry(z: Complex64) -> String {
    // normalize -0.0 so rewritten files are stable
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if im < 0.0 {
        format!("{re}-{}i", -im)
    } else {
        format!("{re}+{im}i")
    }
}

fn parse_entry(token: &str, line_no: usize) -> Result<Complex64> {
    let bad = || Error::ParseError(format!("line {line_no}: bad entry {token:?}"));
    let body = token.strip_suffix('i').ok_or_else(bad)?;
    // split at the sign of the imaginary part: the last +/- that is not an
    // exponent sign and not the leading sign of the real part
    let mut split = None;
    let bytes = body.as_bytes();
    for idx in 1..bytes.len() {
        if (bytes[idx] == b'+' || bytes[idx] == b'-')
            && bytes[idx - 1] != b'e'
            && bytes[idx - 1] != b'E'
        {
            split = Some(idx);
        }
    }
    let idx = split.ok_or_else(bad)?;
    let re: f64 = body[..idx].parse().map_err(|_| bad())?;
    let im: f64 = body[idx..].parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

#[cfg(test)]
pub fn write_observable(obs: &Observable) -> String {
    let d = obs.dim();
    let mut out = format!("obs n={}\n", obs.n_qubits());
    for r in 0..d {
        let row: Vec<String> = (0..d).map(|c| fmt_entry(obs.matrix()[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_observable(text: &str) -> Result<Observable> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::ParseError("empty observable file".into()))?;
    let n: usize = header
        .strip_prefix("obs n=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::ParseError(format!("line 1: expected `obs n=<n>`, got {header:?}")))?;
    if n == 0 || n > 12 {
        return Err(Error::ParseError(format!("line 1: unsupported qubit count {n}")));
    }
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    for r in 0..d {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::ParseError(format!("expected {d} rows, found {r}")))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != d {
            return Err(Error::ParseError(format!(
                "line {}: expected {d} entries, got {}",
                no + 1,
                tokens.len()
            )));
        }
        for (c, token) in tokens.iter().enumerate() {
            m[(r, c)] = parse_entry(token, no + 1)?;
        }
    }
    Observable::new(m)
}

pub fn load_observable(path: &std::path::Path) -> Result<Observable> {
    parse_observable(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use incompat::observable::random_observable;
    use incompat::presets::z_pair;

    #[test]
    fn round_trip_is_entrywise_exact() {
        for seed in 0..5u64 {
            let o = random_observable(2, seed).unwrap();
            let text = write_observable(&o);
            let back = parse_observable(&text).unwrap();
            for r in 0..o.dim() {
                for c in 0..o.dim() {
                    assert_eq!(o.matrix()[(r, c)], back.matrix()[(r, c)], "seed {seed} ({r},{c})");
                }
            }
            // a rewrite of the parsed observable is byte-identical
            assert_eq!(text, write_observable(&back));
        }
    }

    #[test]
    fn z1_file_parses() {
        let (z1, _) = z_pair();
        let text = write_observable(&z1);
        assert!(text.starts_with("obs n=2\n"));
        let back = parse_observable(&text).unwrap();
        assert_eq!(back.matrix(), z1.matrix());
    }

    #[test]
    fn traceful_file_rejected() {
        let text = "obs n=1\n0.1+0i 0+0i\n0+0i 0+0i\n";
        assert!(matches!(
            parse_observable(text),
            Err(Error::InvalidObservable(_))
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "obs n=1\n1+0i nonsense\n0+0i -1+0i\n";
        match parse_observable(text) {
            Err(Error::ParseError(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "obs n=1\n0+0i 1+0i\n";
        assert!(matches!(parse_observable(text), Err(Error::ParseError(_))));
    }

    #[test]
    fn exponent_notation_round_trips() {
        let tiny = 1.25e-13;
        let text = format!("obs n=1\n0+0i {tiny}+0i\n{tiny}-0i 0+0i\n");
        let back = parse_observable(&text).unwrap();
        assert_eq!(back.matrix()[(0, 1)].re, tiny);
    }
}
