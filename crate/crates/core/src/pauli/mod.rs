//! Exact algebra over tensor products of Pauli matrices.
//!
//! A [`PauliString`] is a coefficient times a product of single-site Pauli
//! letters; a [`PauliOperator`] is a normalized sparse sum of them. Strings
//! are stored as a pair of site bitmasks, which makes the letter map
//! canonical (site-ascending) by construction and keeps products and
//! commutation checks to a handful of bit operations.
//!
//! Dense expansions use site 0 as the most significant tensor factor:
//! `to_dense(P0 P1 ... P{n-1}) = P0 ⊗ P1 ⊗ ... ⊗ P{n-1}`.

mod chain;
mod synthesis;
mod text;

pub use chain::{bonds, build_spin_chain, triples, BoundaryCondition, SpinChain};
pub use synthesis::{
    im_cross, lemma2_satisfied, three_body_drive, CoefficientScheme, ThreeBodyPattern, ThreeBodySynthesis,
    ThreeBodyTarget,
};

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Coefficients below this magnitude are dropped during normalization.
pub const ZERO_THRESHOLD: f64 = 1e-14;

/// Largest site count [`PauliOperator::to_dense`] accepts by default.
pub const DEFAULT_DENSE_LIMIT: usize = 12;

/// Largest site count representable by the bitmask encoding.
pub const MAX_SITES: usize = 64;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Option<Letter> {
        match (x, z) {
            (true, false) => Some(Letter::X),
            (true, true) => Some(Letter::Y),
            (false, true) => Some(Letter::Z),
            (false, false) => None,
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c.to_ascii_uppercase() {
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    /// The letter following `self` in the cyclic order X → Y → Z → X.
    pub fn next(self) -> Letter {
        match self {
            Letter::X => Letter::Y,
            Letter::Y => Letter::Z,
            Letter::Z => Letter::X,
        }
    }

    /// The letter distinct from both `self` and `other` (which must differ).
    pub fn third(self, other: Letter) -> Letter {
        debug_assert_ne!(self, other);
        Letter::ALL
            .into_iter()
            .find(|l| *l != self && *l != other)
            .expect("two distinct letters leave a third")
    }

    /// Levi-Civita symbol ε_{abc} over (X, Y, Z).
    pub fn epsilon(a: Letter, b: Letter, c: Letter) -> f64 {
        if a == b || b == c || a == c {
            0.0
        } else if a.next() == b && b.next() == c {
            1.0
        } else {
            -1.0
        }
    }

    /// `self · other` as (phase, letter); `None` letter means identity.
    pub fn product(self, other: Letter) -> (Complex64, Option<Letter>) {
        if self == other {
            (Complex64::new(1.0, 0.0), None)
        } else {
            let c = self.third(other);
            let phase = if self.next() == other { I } else { -I };
            (phase, Some(c))
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Coefficient-free Pauli string as X and Z bitmasks over sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliKey {
    x: u64,
    z: u64,
}

impl PauliKey {
    pub const IDENTITY: PauliKey = PauliKey { x: 0, z: 0 };

    pub fn from_letters(letters: &[(usize, Letter)]) -> PauliKey {
        let mut key = PauliKey::IDENTITY;
        for &(site, letter) in letters {
            let (bx, bz) = letter.bits();
            if bx {
                key.x |= 1 << site;
            }
            if bz {
                key.z |= 1 << site;
            }
        }
        key
    }

    pub fn x_mask(self) -> u64 {
        self.x
    }

    pub fn z_mask(self) -> u64 {
        self.z
    }

    pub fn support(self) -> u64 {
        self.x | self.z
    }

    pub fn weight(self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn letter(self, site: usize) -> Option<Letter> {
        Letter::from_bits(self.x >> site & 1 == 1, self.z >> site & 1 == 1)
    }

    /// Site-ascending letter map.
    pub fn letters(self) -> impl Iterator<Item = (usize, Letter)> {
        let mut rest = self.support();
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let site = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some((site, self.letter(site).expect("site in support")))
        })
    }

    /// Number of Y letters.
    pub fn y_count(self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Count of shared sites carrying different letters (the `p - q` of the
    /// parity commutator rule). Strings commute iff this is even.
    pub fn differing_overlap(self, other: PauliKey) -> u32 {
        let shared = self.support() & other.support();
        let same = !(self.x ^ other.x) & !(self.z ^ other.z) & shared;
        (shared & !same).count_ones()
    }

    pub fn commutes_with(self, other: PauliKey) -> bool {
        self.differing_overlap(other).is_multiple_of(2)
    }

    /// Matrix product `self · other` as (phase, key).
    pub fn product(self, other: PauliKey) -> (Complex64, PauliKey) {
        let mut pow = 0u32;
        let mut shared = self.support() & other.support();
        while shared != 0 {
            let site = shared.trailing_zeros() as usize;
            shared &= shared - 1;
            let a = self.letter(site).expect("shared");
            let b = other.letter(site).expect("shared");
            if a != b {
                pow += if a.next() == b { 1 } else { 3 };
            }
        }
        let phase = match pow % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => I,
            2 => Complex64::new(-1.0, 0.0),
            _ => -I,
        };
        (
            phase,
            PauliKey {
                x: self.x ^ other.x,
                z: self.z ^ other.z,
            },
        )
    }

    fn max_site(self) -> Option<usize> {
        let s = self.support();
        (s != 0).then(|| 63 - s.leading_zeros() as usize)
    }
}

/// A coefficient times a product of Pauli letters on `n_sites` sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliString {
    n_sites: usize,
    key: PauliKey,
    coeff: Complex64,
}

impl PauliString {
    pub fn new(n_sites: usize, letters: &[(usize, Letter)], coeff: Complex64) -> Result<Self> {
        check_sites(n_sites)?;
        let mut seen = 0u64;
        for &(site, _) in letters {
            if site >= n_sites {
                return Err(Error::InvalidConfiguration(format!(
                    "site {site} out of range for {n_sites} sites"
                )));
            }
            if seen >> site & 1 == 1 {
                return Err(Error::InvalidConfiguration(format!("site {site} listed twice")));
            }
            seen |= 1 << site;
        }
        Ok(PauliString {
            n_sites,
            key: PauliKey::from_letters(letters),
            coeff,
        })
    }

    /// Parses a compact label such as `"X0 Y1"` or `"X0Y1Z2"`; an empty
    /// label is the identity.
    pub fn parse_label(n_sites: usize, label: &str, coeff: Complex64) -> Result<Self> {
        let mut letters = Vec::new();
        let mut chars = label.chars().filter(|c| !c.is_whitespace()).peekable();
        while let Some(c) = chars.next() {
            let letter =
                Letter::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter {c:?} in {label:?}")))?;
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let site = digits
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("missing site index after {c} in {label:?}")))?;
            letters.push((site, letter));
        }
        PauliString::new(n_sites, &letters, coeff)
    }

    pub fn identity(n_sites: usize, coeff: Complex64) -> Self {
        PauliString {
            n_sites,
            key: PauliKey::IDENTITY,
            coeff,
        }
    }

    pub(crate) fn from_key(n_sites: usize, key: PauliKey, coeff: Complex64) -> Self {
        PauliString { n_sites, key, coeff }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn key(&self) -> PauliKey {
        self.key
    }

    pub fn coeff(&self) -> Complex64 {
        self.coeff
    }

    pub fn letters(&self) -> impl Iterator<Item = (usize, Letter)> {
        self.key.letters()
    }

    pub fn weight(&self) -> usize {
        self.key.weight()
    }

    pub fn is_identity(&self) -> bool {
        self.key == PauliKey::IDENTITY
    }

    /// Matrix product of two strings.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        same_sites(self.n_sites, other.n_sites)?;
        let (phase, key) = self.key.product(other.key);
        Ok(PauliString {
            n_sites: self.n_sites,
            key,
            coeff: normalize_coeff(phase * self.coeff * other.coeff),
        })
    }

    /// `[self, other]` as a single string (zero coefficient when they commute).
    pub fn commutator(&self, other: &PauliString) -> Result<PauliString> {
        same_sites(self.n_sites, other.n_sites)?;
        let (phase, key) = self.key.product(other.key);
        let coeff = if self.key.commutes_with(other.key) {
            Complex64::new(0.0, 0.0)
        } else {
            normalize_coeff(2.0 * phase * self.coeff * other.coeff)
        };
        Ok(PauliString {
            n_sites: self.n_sites,
            key,
            coeff,
        })
    }

    pub fn to_operator(&self) -> PauliOperator {
        let mut op = PauliOperator::zero(self.n_sites);
        op.add_term(self.key, self.coeff);
        op
    }

    /// Label like `X0 Y1`; `I` for the identity.
    pub fn label(&self) -> String {
        if self.is_identity() {
            return "I".to_string();
        }
        self.letters()
            .map(|(s, l)| format!("{l}{s}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn normalize_coeff(c: Complex64) -> Complex64 {
    if c.norm() < ZERO_THRESHOLD {
        Complex64::new(0.0, 0.0)
    } else {
        c
    }
}

fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites == 0 || n_sites > MAX_SITES {
        return Err(Error::InvalidConfiguration(format!(
            "site count must be in 1..={MAX_SITES}, got {n_sites}"
        )));
    }
    Ok(())
}

fn same_sites(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

/// Normalized sparse sum of Pauli strings: no repeated letter maps and no
/// coefficient below [`ZERO_THRESHOLD`].
#[derive(Debug, Clone, PartialEq)]
pub struct PauliOperator {
    n_sites: usize,
    terms: BTreeMap<PauliKey, Complex64>,
}

impl PauliOperator {
    pub fn zero(n_sites: usize) -> Self {
        assert!(
            (1..=MAX_SITES).contains(&n_sites),
            "site count must be in 1..={MAX_SITES}"
        );
        PauliOperator {
            n_sites,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_sites: usize, coeff: Complex64) -> Self {
        let mut op = Self::zero(n_sites);
        op.add_term(PauliKey::IDENTITY, coeff);
        op
    }

    pub fn from_strings<I>(n_sites: usize, strings: I) -> Result<Self>
    where
        I: IntoIterator<Item = PauliString>,
    {
        check_sites(n_sites)?;
        let mut op = Self::zero(n_sites);
        for s in strings {
            same_sites(n_sites, s.n_sites)?;
            op.add_term(s.key, s.coeff);
        }
        Ok(op)
    }

    /// Convenience constructor from `(label, coefficient)` pairs, e.g.
    /// `[("X0 Y1", c)]`.
    pub fn from_labels(n_sites: usize, terms: &[(&str, Complex64)]) -> Result<Self> {
        let strings = terms
            .iter()
            .map(|(l, c)| PauliString::parse_label(n_sites, l, *c))
            .collect::<Result<Vec<_>>>()?;
        Self::from_strings(n_sites, strings)
    }

    /// Real-coefficient single-label shorthand.
    pub fn term(n_sites: usize, label: &str, coeff: f64) -> Result<Self> {
        Self::from_labels(n_sites, &[(label, Complex64::new(coeff, 0.0))])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = PauliString> + '_ {
        self.terms
            .iter()
            .map(move |(k, c)| PauliString::from_key(self.n_sites, *k, *c))
    }

    pub(crate) fn raw_terms(&self) -> impl Iterator<Item = (PauliKey, Complex64)> + '_ {
        self.terms.iter().map(|(k, c)| (*k, *c))
    }

    /// Coefficient of the string with the given letter map (zero if absent).
    pub fn coefficient(&self, key: PauliKey) -> Complex64 {
        self.terms.get(&key).copied().unwrap_or_default()
    }

    pub fn coefficient_of(&self, label: &str) -> Result<Complex64> {
        let s = PauliString::parse_label(self.n_sites, label, Complex64::new(1.0, 0.0))?;
        Ok(self.coefficient(s.key))
    }

    pub(crate) fn add_term(&mut self, key: PauliKey, coeff: Complex64) {
        debug_assert!(key.max_site().is_none_or(|s| s < self.n_sites));
        let entry = self.terms.entry(key).or_default();
        *entry += coeff;
        if entry.norm() < ZERO_THRESHOLD {
            self.terms.remove(&key);
        }
    }

    pub fn add_string(&mut self, s: &PauliString) -> Result<()> {
        same_sites(self.n_sites, s.n_sites)?;
        self.add_term(s.key, s.coeff);
        Ok(())
    }

    pub fn checked_add(&self, other: &PauliOperator) -> Result<PauliOperator> {
        same_sites(self.n_sites, other.n_sites)?;
        let mut out = self.clone();
        for (k, c) in other.raw_terms() {
            out.add_term(k, c);
        }
        Ok(out)
    }

    pub fn scale(&self, factor: Complex64) -> PauliOperator {
        let mut out = PauliOperator::zero(self.n_sites);
        for (k, c) in self.raw_terms() {
            out.add_term(k, c * factor);
        }
        out
    }

    pub fn scale_real(&self, factor: f64) -> PauliOperator {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn adjoint(&self) -> PauliOperator {
        PauliOperator {
            n_sites: self.n_sites,
            terms: self.terms.iter().map(|(k, c)| (*k, c.conj())).collect(),
        }
    }

    /// Hermitian iff every merged coefficient is real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Operator product.
    pub fn multiply(&self, other: &PauliOperator) -> Result<PauliOperator> {
        same_sites(self.n_sites, other.n_sites)?;
        let mut out = PauliOperator::zero(self.n_sites);
        for (ka, ca) in self.raw_terms() {
            for (kb, cb) in other.raw_terms() {
                let (phase, k) = ka.product(kb);
                out.add_term(k, phase * ca * cb);
            }
        }
        Ok(out)
    }

    /// `[self, other] = self·other − other·self`, using the parity rule to
    /// skip commuting string pairs.
    pub fn commutator(&self, other: &PauliOperator) -> Result<PauliOperator> {
        same_sites(self.n_sites, other.n_sites)?;
        let mut out = PauliOperator::zero(self.n_sites);
        for (ka, ca) in self.raw_terms() {
            for (kb, cb) in other.raw_terms() {
                if ka.commutes_with(kb) {
                    continue;
                }
                let (phase, k) = ka.product(kb);
                out.add_term(k, 2.0 * phase * ca * cb);
            }
        }
        Ok(out)
    }

    /// Whether `[self, other]` vanishes symbolically.
    pub fn commutes_with(&self, other: &PauliOperator) -> Result<bool> {
        Ok(self.commutator(other)?.is_zero())
    }

    /// Keeps the terms satisfying `pred`.
    pub fn filter<F: Fn(&PauliString) -> bool>(&self, pred: F) -> PauliOperator {
        let mut out = PauliOperator::zero(self.n_sites);
        for s in self.terms() {
            if pred(&s) {
                out.add_term(s.key, s.coeff);
            }
        }
        out
    }

    /// Terms of weight exactly `k`.
    pub fn body(&self, k: usize) -> PauliOperator {
        self.filter(|s| s.weight() == k)
    }

    pub fn max_weight(&self) -> usize {
        self.terms.keys().map(|k| k.weight()).max().unwrap_or(0)
    }

    /// Sum of coefficient magnitudes; an upper bound on the spectral norm.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Largest coefficient magnitude difference between two operators.
    pub fn max_coefficient_diff(&self, other: &PauliOperator) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, c) in self.raw_terms() {
            worst = worst.max((c - other.coefficient(k)).norm());
        }
        for (k, c) in other.raw_terms() {
            if !self.terms.contains_key(&k) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    /// Hilbert–Schmidt inner product normalized so that ⟨P, P⟩ = 1 for a
    /// unit-coefficient string: Tr(A† B) / 2^n.
    pub fn hs_inner(&self, other: &PauliOperator) -> Complex64 {
        self.raw_terms().map(|(k, c)| c.conj() * other.coefficient(k)).sum()
    }

    /// Normalized trace Tr(A) / 2^n.
    pub fn normalized_trace(&self) -> Complex64 {
        self.coefficient(PauliKey::IDENTITY)
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        self.to_dense_with_limit(DEFAULT_DENSE_LIMIT)
    }

    /// Exact Kronecker expansion into a `2^n × 2^n` matrix.
    pub fn to_dense_with_limit(&self, limit: usize) -> Result<CMatrix> {
        if self.n_sites > limit {
            return Err(Error::Capacity {
                n_sites: self.n_sites,
                limit,
            });
        }
        let dim = 1usize << self.n_sites;
        let mut m = CMatrix::zeros(dim, dim);
        for (key, coeff) in self.raw_terms() {
            let (xm, zm) = index_masks(self.n_sites, key);
            let base = coeff * i_pow(key.y_count());
            for col in 0..dim {
                let sign = if (col & zm).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m[(col ^ xm, col)] += base * sign;
            }
        }
        Ok(m)
    }

    /// Expands a dense matrix into Pauli strings by projection. Intended for
    /// small systems: the cost grows as 4^n · 2^n.
    pub fn from_dense(n_sites: usize, m: &CMatrix) -> Result<PauliOperator> {
        check_sites(n_sites)?;
        if n_sites > DEFAULT_DENSE_LIMIT / 2 + 2 {
            return Err(Error::Capacity {
                n_sites,
                limit: DEFAULT_DENSE_LIMIT / 2 + 2,
            });
        }
        let dim = 1usize << n_sites;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::GridMismatch(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut op = PauliOperator::zero(n_sites);
        let full = if n_sites == 64 { u64::MAX } else { (1u64 << n_sites) - 1 };
        for x in 0..=full {
            for z in 0..=full {
                let key = PauliKey { x, z };
                let (xm, zm) = index_masks(n_sites, key);
                // Tr(P† M) with P|c⟩ = phase(c)|c ^ xm⟩.
                let base = i_pow(key.y_count()).conj();
                let mut acc = Complex64::new(0.0, 0.0);
                for col in 0..dim {
                    let sign = if (col & zm).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    acc += base * sign * m[(col ^ xm, col)];
                }
                op.add_term(key, acc / dim as f64);
            }
        }
        Ok(op)
    }
}

/// Site masks translated to basis-index masks (site 0 is the most
/// significant bit).
pub(crate) fn index_masks(n_sites: usize, key: PauliKey) -> (usize, usize) {
    let mut xm = 0usize;
    let mut zm = 0usize;
    for site in 0..n_sites {
        let bit = 1usize << (n_sites - 1 - site);
        if key.x >> site & 1 == 1 {
            xm |= bit;
        }
        if key.z >> site & 1 == 1 {
            zm |= bit;
        }
    }
    (xm, zm)
}

pub(crate) fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms()
            .map(|s| {
                let c = s.coeff();
                let coeff = if c.im == 0.0 {
                    format!("{}", c.re)
                } else {
                    format!("({}{:+}i)", c.re, c.im)
                };
                format!("{coeff}·{}", s.label())
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &PauliOperator {
    type Output = PauliOperator;
    fn add(self, rhs: &PauliOperator) -> PauliOperator {
        self.checked_add(rhs).expect("operators on different site counts")
    }
}

impl Add for PauliOperator {
    type Output = PauliOperator;
    fn add(self, rhs: PauliOperator) -> PauliOperator {
        &self + &rhs
    }
}

impl Sub for &PauliOperator {
    type Output = PauliOperator;
    fn sub(self, rhs: &PauliOperator) -> PauliOperator {
        self + &rhs.scale_real(-1.0)
    }
}

impl Sub for PauliOperator {
    type Output = PauliOperator;
    fn sub(self, rhs: PauliOperator) -> PauliOperator {
        &self - &rhs
    }
}

impl Neg for &PauliOperator {
    type Output = PauliOperator;
    fn neg(self) -> PauliOperator {
        self.scale_real(-1.0)
    }
}

impl Mul<f64> for &PauliOperator {
    type Output = PauliOperator;
    fn mul(self, rhs: f64) -> PauliOperator {
        self.scale_real(rhs)
    }
}

impl Mul<Complex64> for &PauliOperator {
    type Output = PauliOperator;
    fn mul(self, rhs: Complex64) -> PauliOperator {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs_diff, pauli_matrix};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn s(n: usize, label: &str) -> PauliString {
        PauliString::parse_label(n, label, c(1.0, 0.0)).unwrap()
    }

    #[test]
    fn single_site_products() {
        let xy = s(1, "X0").multiply(&s(1, "Y0")).unwrap();
        assert_eq!(xy.label(), "Z0");
        assert_eq!(xy.coeff(), c(0.0, 1.0));

        let xx = s(1, "X0").multiply(&s(1, "X0")).unwrap();
        assert!(xx.is_identity());
        assert_eq!(xx.coeff(), c(1.0, 0.0));

        let yx = s(1, "Y0").multiply(&s(1, "X0")).unwrap();
        assert_eq!(yx.coeff(), c(0.0, -1.0));
    }

    #[test]
    fn three_site_product_matches_dense() {
        let a = s(3, "X0 Y1");
        let b = s(3, "Z1 X2");
        let p = a.multiply(&b).unwrap();
        assert_eq!(p.label(), "X0 X1 X2");
        assert_eq!(p.coeff(), c(0.0, 1.0));

        // Kronecker oracle built from 2x2 matrices.
        let id = pauli_matrix(None);
        let x = pauli_matrix(Some(Letter::X));
        let y = pauli_matrix(Some(Letter::Y));
        let z = pauli_matrix(Some(Letter::Z));
        let da = kron(&kron(&x, &y), &id);
        let db = kron(&kron(&id, &z), &x);
        let dense = &da * &db;
        let ours = p.to_operator().to_dense().unwrap();
        assert!(max_abs_diff(&dense, &ours) < 1e-14);
    }

    #[test]
    fn mismatched_sites_error() {
        let err = s(2, "X0").multiply(&s(3, "X0")).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
        let a = PauliOperator::term(2, "X0", 1.0).unwrap();
        let b = PauliOperator::term(3, "X0", 1.0).unwrap();
        assert!(a.commutator(&b).is_err());
    }

    #[test]
    fn commutator_examples() {
        let x = PauliOperator::term(1, "X0", 1.0).unwrap();
        let y = PauliOperator::term(1, "Y0", 1.0).unwrap();
        let comm = x.commutator(&y).unwrap();
        assert_eq!(comm.len(), 1);
        assert_eq!(comm.coefficient_of("Z0").unwrap(), c(0.0, 2.0));

        let a = PauliOperator::term(3, "X0 Y1", 1.0).unwrap();
        let b = PauliOperator::term(3, "Z2", 1.0).unwrap();
        assert!(a.commutator(&b).unwrap().is_zero());

        let a = PauliOperator::term(2, "X0 Y1", 1.0).unwrap();
        let b = PauliOperator::term(2, "Z0 X1", 1.0).unwrap();
        assert!(a.commutator(&b).unwrap().is_zero());
    }

    #[test]
    fn parse_labels() {
        let p = s(4, "X0Y1Z3");
        assert_eq!(
            p.letters().collect::<Vec<_>>(),
            vec![(0, Letter::X), (1, Letter::Y), (3, Letter::Z)]
        );
        assert!(PauliString::parse_label(2, "X2", c(1.0, 0.0)).is_err());
        assert!(PauliString::parse_label(2, "X0X0", c(1.0, 0.0)).is_err());
        assert!(PauliString::parse_label(2, "Q0", c(1.0, 0.0)).is_err());
        assert!(s(2, "").is_identity());
    }

    #[test]
    fn normalization_merges_and_drops() {
        let op =
            PauliOperator::from_labels(2, &[("X0", c(1.0, 0.0)), ("X0", c(0.5, 0.0)), ("Z1", c(1e-15, 0.0))]).unwrap();
        assert_eq!(op.len(), 1);
        assert_eq!(op.coefficient_of("X0").unwrap(), c(1.5, 0.0));
        let zero = &op - &op;
        assert!(zero.is_zero());
    }

    #[test]
    fn dense_examples() {
        let z = PauliOperator::term(1, "Z0", 1.0).unwrap().to_dense().unwrap();
        assert_eq!(z[(0, 0)], c(1.0, 0.0));
        assert_eq!(z[(1, 1)], c(-1.0, 0.0));
        assert_eq!(z[(0, 1)], c(0.0, 0.0));

        let id = PauliOperator::identity(2, c(2.5, 0.0)).to_dense().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 2.5 } else { 0.0 };
                assert_eq!(id[(i, j)], c(want, 0.0));
            }
        }

        let xxx = PauliOperator::term(3, "X0 X1 X2", 1.0).unwrap().to_dense().unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i + j == 7 { 1.0 } else { 0.0 };
                assert_eq!(xxx[(i, j)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn dense_capacity_error() {
        let op = PauliOperator::term(13, "Z0", 1.0).unwrap();
        assert_eq!(op.to_dense().unwrap_err(), Error::Capacity { n_sites: 13, limit: 12 });
        assert!(op.to_dense_with_limit(2).is_err());
    }

    #[test]
    fn hermiticity_by_coefficients() {
        let h = PauliOperator::from_labels(2, &[("X0", c(1.0, 0.0)), ("Z0 Z1", c(-0.5, 0.0))]).unwrap();
        assert!(h.is_hermitian(0.0));
        let nh = PauliOperator::from_labels(1, &[("Y0", c(0.0, 1.0))]).unwrap();
        assert!(!nh.is_hermitian(1e-12));
        let comm = h.commutator(&PauliOperator::term(2, "Y1", 1.0).unwrap()).unwrap();
        assert!(comm.scale(c(0.0, 1.0)).is_hermitian(1e-14));
    }

    #[test]
    fn dense_round_trip_small() {
        let op =
            PauliOperator::from_labels(2, &[("X0 Y1", c(0.3, -0.2)), ("Z1", c(1.0, 0.0)), ("", c(0.25, 0.0))]).unwrap();
        let back = PauliOperator::from_dense(2, &op.to_dense().unwrap()).unwrap();
        assert!(back.max_coefficient_diff(&op) < 1e-14);
    }

    #[test]
    fn epsilon_symbol() {
        use Letter::*;
        assert_eq!(Letter::epsilon(X, Y, Z), 1.0);
        assert_eq!(Letter::epsilon(Y, Z, X), 1.0);
        assert_eq!(Letter::epsilon(X, Z, Y), -1.0);
        assert_eq!(Letter::epsilon(X, X, Y), 0.0);
    }
}
