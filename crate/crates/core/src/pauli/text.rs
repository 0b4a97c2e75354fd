//! Line-oriented operator serialization.
//!
//! ```text
//! # n_sites 3
//! 0.5 0 0:X 1:X
//! -1 0.25 2:Z
//! 2 0
//! ```
//!
//! Each data line is `coeff_re coeff_im site:letter ...`; a line without
//! letters is an identity term. Blank lines and `#` comments are ignored,
//! except that `# n_sites N` fixes the site count.

use num_complex::Complex64;

use super::{Letter, PauliOperator, PauliString};
use crate::error::{Error, Result};

impl PauliOperator {
    pub fn to_text(&self) -> String {
        let mut out = format!("# n_sites {}\n", self.n_sites());
        for s in self.terms() {
            let c = s.coeff();
            out.push_str(&format!("{} {}", c.re, c.im));
            for (site, letter) in s.letters() {
                out.push_str(&format!(" {site}:{letter}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output. `n_sites` is required when
    /// the text has no `# n_sites` header; when both are given they must agree.
    pub fn from_text(text: &str, n_sites: Option<usize>) -> Result<PauliOperator> {
        let mut declared = None;
        let mut rows = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut words = comment.split_whitespace();
                if words.next() == Some("n_sites") {
                    let n = words
                        .next()
                        .and_then(|w| w.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse(format!("line {}: bad n_sites header", lineno + 1)))?;
                    declared = Some(n);
                }
                continue;
            }
            rows.push((lineno + 1, line));
        }
        let n = match (declared, n_sites) {
            (Some(a), Some(b)) if a != b => return Err(Error::DimensionMismatch { expected: b, found: a }),
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::Parse("site count not given".into())),
        };
        let mut strings = Vec::with_capacity(rows.len());
        for (lineno, line) in rows {
            let mut words = line.split_whitespace();
            let mut num = |what: &str| -> Result<f64> {
                words
                    .next()
                    .and_then(|w| w.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse(format!("line {lineno}: missing {what}")))
            };
            let re = num("real part")?;
            let im = num("imaginary part")?;
            let mut letters = Vec::new();
            for w in words {
                let (site, letter) = w
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("line {lineno}: expected site:letter, got {w:?}")))?;
                let site = site
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {lineno}: bad site {site:?}")))?;
                let mut chars = letter.chars();
                let l = match (chars.next().and_then(Letter::from_char), chars.next()) {
                    (Some(l), None) => l,
                    _ => return Err(Error::Parse(format!("line {lineno}: bad letter {letter:?}"))),
                };
                letters.push((site, l));
            }
            strings.push(PauliString::new(n, &letters, Complex64::new(re, im))?);
        }
        PauliOperator::from_strings(n, strings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_spin_chain, BoundaryCondition};

    #[test]
    fn round_trip() {
        let h = build_spin_chain(5, 0.3, -1.7, 0.9, BoundaryCondition::Periodic).unwrap();
        let h = &h + &PauliOperator::identity(5, Complex64::new(0.1, -0.2));
        let back = PauliOperator::from_text(&h.to_text(), None).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn parse_errors() {
        assert!(PauliOperator::from_text("1 0 0:X\n", None).is_err());
        assert!(PauliOperator::from_text("1 0 0:Q\n", Some(2)).is_err());
        assert!(PauliOperator::from_text("1 0 5:X\n", Some(2)).is_err());
        assert!(PauliOperator::from_text("1\n", Some(2)).is_err());
        assert!(PauliOperator::from_text("# n_sites 3\n", Some(2)).is_err());
        let op = PauliOperator::from_text("# note\n\n2 0\n", Some(1)).unwrap();
        assert_eq!(op.normalized_trace(), Complex64::new(2.0, 0.0));
    }
}
