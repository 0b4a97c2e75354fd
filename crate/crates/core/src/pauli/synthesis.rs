//! Two-body harmonic drives whose first-order Floquet commutator produces a
//! chosen nearest-neighbour three-body interaction on a periodic chain.
//!
//! Every construction uses bond families `Σᵢ cᵢ σ^a_i σ^b_{i+1}`. For two
//! anticommuting Hermitian strings `a`, `b` with coefficients `z`, `w`, the
//! pair contributes `4i·phase(ab)·Im(z w*)·(ab/phase)` to `[H_l, H_l†]`,
//! which is where all the closed-form coefficients below come from.

use std::fmt;

use num_complex::Complex64;

use super::{Letter, PauliKey, PauliOperator};
use crate::error::{Error, Result};

/// The interaction to synthesize, `J/2 Σᵢ σ^κ_i σ^μ_{i+1} σ^λ_{i+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreeBodyPattern {
    /// κκκ
    Uniform(Letter),
    /// κμκ with μ ≠ κ
    Sandwich { outer: Letter, middle: Letter },
    /// κμλ, all distinct
    Distinct(Letter, Letter, Letter),
    /// (κκλ) + (μμλ) with equal couplings, κ, μ, λ distinct
    PairedEnds { first: Letter, second: Letter, end: Letter },
}

impl ThreeBodyPattern {
    pub fn parse(s: &str) -> Result<Self> {
        let letters = |t: &str| -> Result<[Letter; 3]> {
            let v: Vec<Letter> = t
                .trim()
                .chars()
                .map(|c| Letter::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter {c:?} in {s:?}"))))
                .collect::<Result<_>>()?;
            <[Letter; 3]>::try_from(v).map_err(|_| Error::Parse(format!("pattern {t:?} must have three letters")))
        };
        let parts: Vec<&str> = s.split('+').collect();
        match parts.as_slice() {
            [one] => {
                let [a, b, c] = letters(one)?;
                if a == b && b == c {
                    Ok(ThreeBodyPattern::Uniform(a))
                } else if a == c {
                    Ok(ThreeBodyPattern::Sandwich { outer: a, middle: b })
                } else if a != b && b != c {
                    Ok(ThreeBodyPattern::Distinct(a, b, c))
                } else {
                    Err(Error::UnsupportedPattern(format!(
                        "{}: no first-order two-body scheme for this pattern alone; \
                         pair it as (kkl)+(mml) with equal couplings",
                        s.trim()
                    )))
                }
            }
            [p, q] => {
                let [a1, b1, c1] = letters(p)?;
                let [a2, b2, c2] = letters(q)?;
                let ok = a1 == b1 && a2 == b2 && c1 == c2 && a1 != c1 && a2 != c2 && a1 != a2;
                if ok {
                    Ok(ThreeBodyPattern::PairedEnds {
                        first: a1,
                        second: a2,
                        end: c1,
                    })
                } else {
                    Err(Error::UnsupportedPattern(format!(
                        "{}: only (kkl)+(mml) combinations with distinct k, m, l are supported",
                        s.trim()
                    )))
                }
            }
            _ => Err(Error::UnsupportedPattern(s.trim().to_string())),
        }
    }

    /// The three-letter strings making up the pattern.
    pub fn words(&self) -> Vec<[Letter; 3]> {
        match *self {
            ThreeBodyPattern::Uniform(k) => vec![[k, k, k]],
            ThreeBodyPattern::Sandwich { outer, middle } => vec![[outer, middle, outer]],
            ThreeBodyPattern::Distinct(a, b, c) => vec![[a, b, c]],
            ThreeBodyPattern::PairedEnds { first, second, end } => {
                vec![[first, first, end], [second, second, end]]
            }
        }
    }

    /// `Σᵢ` of the pattern words on a periodic ring, unit coefficient.
    pub fn operator(&self, n_sites: usize) -> PauliOperator {
        let mut op = PauliOperator::zero(n_sites);
        for w in self.words() {
            for i in 0..n_sites {
                op.add_term(ring_key(n_sites, i, &w), Complex64::new(1.0, 0.0));
            }
        }
        op
    }

    /// Which of the constructions this pattern belongs to (1 to 4).
    pub fn case_number(&self) -> usize {
        match self {
            ThreeBodyPattern::Uniform(_) => 1,
            ThreeBodyPattern::Sandwich { .. } => 2,
            ThreeBodyPattern::Distinct(..) => 3,
            ThreeBodyPattern::PairedEnds { .. } => 4,
        }
    }
}

impl fmt::Display for ThreeBodyPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words: Vec<String> = self
            .words()
            .iter()
            .map(|w| w.iter().map(|l| l.as_char()).collect())
            .collect();
        write!(f, "{}", words.join("+"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeBodyTarget {
    pub pattern: ThreeBodyPattern,
    /// `J` in `J/2 Σ ...`.
    pub coupling: f64,
}

/// How the bond coefficients of `H_{c,l}` are laid out along the ring.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientScheme {
    /// The same coefficient on every bond of each family.
    Homogeneous { first: Complex64, second: Complex64 },
    /// Explicit per-bond coefficients (length n each; `second` empty for the
    /// single-family all-distinct case).
    PerSite {
        first: Vec<Complex64>,
        second: Vec<Complex64>,
    },
    /// All-distinct case only: `cᵢ = (αᵢ + i)·vᵢ` with a ratio that steps by
    /// `dalpha` along the chain and a last bond that closes the ring.
    Staircase { v: f64, alpha1: f64, dalpha: f64 },
}

/// Drive pair, its commutator split by body count, and the closed-form
/// prediction for the three-body part.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeBodySynthesis {
    pub target: ThreeBodyTarget,
    pub harmonic: usize,
    pub n_sites: usize,
    /// `H_{c,l}`
    pub plus: PauliOperator,
    /// `H_{c,−l} = H_{c,l}†`
    pub minus: PauliOperator,
    /// `[H_{c,l}, H_{c,−l}]`
    pub commutator: PauliOperator,
    pub three_body: PauliOperator,
    /// At most two-body part of the commutator, to be cancelled by the
    /// static control.
    pub residue: PauliOperator,
    /// Closed-form three-body coefficients.
    pub predicted: PauliOperator,
    /// Closed-form residue (empty when the construction has none).
    pub predicted_residue: PauliOperator,
}

impl ThreeBodySynthesis {
    /// Uniform coefficient of the synthesized three-body term on the target
    /// pattern, or `None` when the output is not a multiple of it.
    pub fn uniform_coefficient(&self) -> Option<f64> {
        let unit = self.target.pattern.operator(self.n_sites);
        let k = unit.hs_inner(&self.three_body).re / unit.len() as f64;
        let diff = self.three_body.max_coefficient_diff(&unit.scale_real(k));
        let scale = self.three_body.coefficient_norm().max(1.0);
        (diff <= 1e-10 * scale).then_some(k)
    }

    /// Drive frequency at which this harmonic alone cancels the target:
    /// `(1/(l·ω))·k = −J/2`.
    pub fn matching_frequency(&self) -> Result<f64> {
        let k = self
            .uniform_coefficient()
            .ok_or_else(|| Error::NoMatching("three-body output is not uniform over the target pattern".into()))?;
        let j = self.target.coupling;
        if j == 0.0 {
            return Err(Error::NoMatching("target coupling is zero".into()));
        }
        let omega = -2.0 * k / (self.harmonic as f64 * j);
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::NoMatching(format!(
                "coefficients give omega = {omega}; flip the sign of one family"
            )));
        }
        Ok(omega)
    }
}

fn ring_key(n: usize, start: usize, word: &[Letter]) -> PauliKey {
    let letters: Vec<(usize, Letter)> = word.iter().enumerate().map(|(k, l)| ((start + k) % n, *l)).collect();
    PauliKey::from_letters(&letters)
}

fn bond_family(n: usize, a: Letter, b: Letter, coeffs: &[Complex64]) -> PauliOperator {
    let mut op = PauliOperator::zero(n);
    for (i, c) in coeffs.iter().enumerate() {
        op.add_term(ring_key(n, i, &[a, b]), *c);
    }
    op
}

/// `Im(zᵢ z*_{i+1})` around the ring, wrap included.
pub fn im_cross(z: &[Complex64]) -> Vec<f64> {
    let n = z.len();
    (0..n).map(|i| (z[i] * z[(i + 1) % n].conj()).im).collect()
}

/// Whether every `Im(zᵢ z*_{i+1})` vanishes, i.e. the coefficients share a
/// common real-to-imaginary ratio.
pub fn lemma2_satisfied(z: &[Complex64], tol: f64) -> bool {
    let scale = z.iter().fold(0.0f64, |a, c| a.max(c.norm_sqr())).max(f64::MIN_POSITIVE);
    im_cross(z).iter().all(|v| v.abs() <= tol * scale)
}

const LEMMA_TOL: f64 = 1e-12;

/// Builds `(H_{c,l}, H_{c,−l})` for the requested three-body pattern on a
/// periodic ring of `n_sites`, and evaluates their commutator.
pub fn three_body_drive(
    target: ThreeBodyTarget,
    n_sites: usize,
    harmonic: usize,
    scheme: &CoefficientScheme,
) -> Result<ThreeBodySynthesis> {
    if !(3..=super::MAX_SITES).contains(&n_sites) {
        return Err(Error::InvalidConfiguration(format!(
            "three-body synthesis needs a ring of at least 3 sites, got {n_sites}"
        )));
    }
    if harmonic == 0 {
        return Err(Error::InvalidConfiguration("harmonic index must be >= 1".into()));
    }
    if !target.coupling.is_finite() {
        return Err(Error::InvalidConfiguration("non-finite target coupling".into()));
    }
    let n = n_sites;
    let pattern = target.pattern;
    let single_family = matches!(pattern, ThreeBodyPattern::Distinct(..));
    let (z, w) = expand_scheme(scheme, n, single_family)?;

    for c in z.iter().chain(&w) {
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::Constraint("non-finite drive coefficient".into()));
        }
    }
    if single_family {
        if lemma2_satisfied(&z, LEMMA_TOL) {
            return Err(Error::Constraint(
                "all-distinct pattern needs a coefficient ratio that varies along the chain; \
                 a common ratio gives zero three-body output"
                    .into(),
            ));
        }
    } else {
        for (name, fam) in [("first", &z), ("second", &w)] {
            if !lemma2_satisfied(fam, LEMMA_TOL) {
                return Err(Error::Constraint(format!(
                    "{name} coefficient family does not share a common Re/Im ratio; \
                     unwanted three-body cross terms would appear"
                )));
            }
        }
    }

    let eps = Letter::epsilon;
    let mut predicted = PauliOperator::zero(n);
    let mut predicted_residue = PauliOperator::zero(n);
    let plus = match pattern {
        ThreeBodyPattern::Uniform(k) => {
            // Families κλ and μκ with (λ, μ, κ) cyclic.
            let l = k.next();
            let m = l.next();
            for i in 0..n {
                let c = -4.0 * eps(l, m, k) * (z[i] * w[(i + 1) % n].conj()).im;
                predicted.add_term(ring_key(n, i, &[k, k, k]), Complex64::new(c, 0.0));
            }
            &bond_family(n, k, l, &z) + &bond_family(n, m, k, &w)
        }
        ThreeBodyPattern::Sandwich { outer: k, middle: m } => {
            let l = k.third(m);
            for i in 0..n {
                let c = -4.0 * eps(l, k, m) * (z[i] * w[(i + 1) % n].conj()).im;
                predicted.add_term(ring_key(n, i, &[k, m, k]), Complex64::new(c, 0.0));
                let r = -4.0 * eps(l, k, m) * (z[i] * w[i].conj()).im;
                predicted_residue.add_term(ring_key(n, (i + 1) % n, &[m]), Complex64::new(r, 0.0));
            }
            &bond_family(n, k, l, &z) + &bond_family(n, k, k, &w)
        }
        ThreeBodyPattern::Distinct(k, m, l) => {
            for i in 0..n {
                let c = 4.0 * eps(k, l, m) * (z[i] * z[(i + 1) % n].conj()).im;
                predicted.add_term(ring_key(n, i, &[k, m, l]), Complex64::new(c, 0.0));
            }
            bond_family(n, k, l, &z)
        }
        ThreeBodyPattern::PairedEnds {
            first: k,
            second: m,
            end: l,
        } => {
            for i in 0..n {
                let j = (i + 1) % n;
                let a = -4.0 * eps(l, m, k) * (z[i] * w[j].conj()).im;
                let b = -4.0 * eps(l, m, k) * (z[j] * w[i].conj()).im;
                predicted.add_term(ring_key(n, i, &[k, k, l]), Complex64::new(a, 0.0));
                predicted.add_term(ring_key(n, i, &[m, m, l]), Complex64::new(b, 0.0));
                let r = -4.0 * eps(k, m, l) * (z[i] * w[i].conj()).im;
                predicted_residue.add_term(ring_key(n, i, &[l]), Complex64::new(r, 0.0));
            }
            &bond_family(n, k, l, &z) + &bond_family(n, m, l, &w)
        }
    };
    let minus = plus.adjoint();
    let commutator = plus.commutator(&minus)?;
    let three_body = commutator.body(3);
    let residue = commutator.filter(|s| s.weight() <= 2);
    Ok(ThreeBodySynthesis {
        target,
        harmonic,
        n_sites: n,
        plus,
        minus,
        commutator,
        three_body,
        residue,
        predicted,
        predicted_residue,
    })
}

fn expand_scheme(
    scheme: &CoefficientScheme,
    n: usize,
    single_family: bool,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    match scheme {
        CoefficientScheme::Homogeneous { first, second } => {
            if single_family && second.norm() != 0.0 {
                return Err(Error::Constraint(
                    "all-distinct pattern uses a single coefficient family".into(),
                ));
            }
            let w = if single_family { Vec::new() } else { vec![*second; n] };
            Ok((vec![*first; n], w))
        }
        CoefficientScheme::PerSite { first, second } => {
            if first.len() != n {
                return Err(Error::Constraint(format!(
                    "first family has {} coefficients, expected {n}",
                    first.len()
                )));
            }
            let want = if single_family { 0 } else { n };
            if second.len() != want {
                return Err(Error::Constraint(format!(
                    "second family has {} coefficients, expected {want}",
                    second.len()
                )));
            }
            Ok((first.clone(), second.clone()))
        }
        CoefficientScheme::Staircase { v, alpha1, dalpha } => {
            if !single_family {
                return Err(Error::Constraint(
                    "staircase profile applies only to the all-distinct pattern".into(),
                ));
            }
            if *v == 0.0 || *dalpha == 0.0 {
                return Err(Error::Constraint(
                    "staircase needs nonzero amplitude and ratio step".into(),
                ));
            }
            Ok((staircase(n, *v, *alpha1, *dalpha), Vec::new()))
        }
    }
}

/// `cᵢ = (αᵢ + i)·vᵢ` with `αᵢ = α₁ + (i−1)Δα`, `vᵢ = v` on the first n−1
/// bonds, and the last bond chosen so every `Im(cᵢ c*_{i+1})`, wrap
/// included, equals `Δα·v²`.
pub fn staircase(n: usize, v: f64, alpha1: f64, dalpha: f64) -> Vec<Complex64> {
    let nf = n as f64;
    let mut out: Vec<Complex64> = (0..n - 1)
        .map(|i| Complex64::new(alpha1 + i as f64 * dalpha, 1.0) * v)
        .collect();
    let v_last = 2.0 * v / (2.0 - nf);
    let alpha_last = alpha1 + (nf / 2.0 - 1.0) * dalpha;
    out.push(Complex64::new(alpha_last, 1.0) * v_last);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator as dense_comm, max_abs_diff};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn target(p: &str) -> ThreeBodyTarget {
        ThreeBodyTarget {
            pattern: ThreeBodyPattern::parse(p).unwrap(),
            coupling: 1.0,
        }
    }

    #[test]
    fn xxx_example() {
        let s = three_body_drive(
            target("XXX"),
            6,
            1,
            &CoefficientScheme::Homogeneous {
                first: c(10.0, 0.0),
                second: c(0.0, -10.0),
            },
        )
        .unwrap();
        let want = ThreeBodyPattern::parse("XXX").unwrap().operator(6).scale_real(-400.0);
        assert!(s.commutator.max_coefficient_diff(&want) < 1e-10);
        assert!(s.residue.is_zero());
        assert_eq!(s.uniform_coefficient(), Some(-400.0));
        assert_eq!(s.minus, s.plus.adjoint());
        assert!(s.plus.max_weight() <= 2);
    }

    #[test]
    fn real_families_give_nothing() {
        let s = three_body_drive(
            target("XXX"),
            5,
            1,
            &CoefficientScheme::Homogeneous {
                first: c(10.0, 0.0),
                second: c(3.0, 0.0),
            },
        )
        .unwrap();
        assert!(s.three_body.is_zero());
    }

    #[test]
    fn staircase_closes_ring() {
        for n in 3..9 {
            let z = staircase(n, 1.3, 0.2, 0.7);
            for v in im_cross(&z) {
                assert!((v - 0.7 * 1.3 * 1.3).abs() < 1e-12, "n={n}: {v}");
            }
        }
    }

    #[test]
    fn distinct_case_against_dense() {
        let s = three_body_drive(
            target("XZY"),
            5,
            2,
            &CoefficientScheme::Staircase {
                v: 1.0,
                alpha1: 0.0,
                dalpha: 0.5,
            },
        )
        .unwrap();
        let dense = dense_comm(&s.plus.to_dense().unwrap(), &s.minus.to_dense().unwrap());
        assert!(max_abs_diff(&dense, &s.commutator.to_dense().unwrap()) < 1e-10);
        assert!(s.three_body.max_coefficient_diff(&s.predicted) < 1e-12);
        assert!(s.uniform_coefficient().is_some());
        assert!(!s.three_body.is_zero());
    }

    #[test]
    fn unsupported_and_constraint_errors() {
        assert!(matches!(
            ThreeBodyPattern::parse("XXZ"),
            Err(Error::UnsupportedPattern(_))
        ));
        assert!(matches!(
            ThreeBodyPattern::parse("ZXX"),
            Err(Error::UnsupportedPattern(_))
        ));
        assert!(matches!(
            ThreeBodyPattern::parse("XXZ+YYX"),
            Err(Error::UnsupportedPattern(_))
        ));
        assert!(ThreeBodyPattern::parse("XQZ").is_err());

        let bad = CoefficientScheme::PerSite {
            first: vec![c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(1.0, 0.0)],
            second: vec![c(1.0, 0.0); 4],
        };
        assert!(matches!(
            three_body_drive(target("XXX"), 4, 1, &bad),
            Err(Error::Constraint(_))
        ));
        let flat = CoefficientScheme::Homogeneous {
            first: c(1.0, 2.0),
            second: c(0.0, 0.0),
        };
        assert!(matches!(
            three_body_drive(target("XZY"), 4, 1, &flat),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn pattern_round_trip() {
        for p in ["XXX", "ZYZ", "XZY", "XXZ+YYZ"] {
            assert_eq!(ThreeBodyPattern::parse(p).unwrap().to_string(), p);
        }
    }

    #[test]
    fn matching_frequency_sign() {
        let s = three_body_drive(
            target("XXX"),
            4,
            1,
            &CoefficientScheme::Homogeneous {
                first: c(10.0, 0.0),
                second: c(0.0, -10.0),
            },
        )
        .unwrap();
        // −400/ω = −1/2  →  ω = 800.
        assert!((s.matching_frequency().unwrap() - 800.0).abs() < 1e-9);
    }
}
