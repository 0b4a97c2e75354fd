use num_complex::Complex64;

use super::{Letter, PauliKey, PauliOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoundaryCondition {
    #[default]
    Periodic,
    Open,
}

impl BoundaryCondition {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" | "pbc" => Ok(BoundaryCondition::Periodic),
            "open" | "obc" => Ok(BoundaryCondition::Open),
            other => Err(Error::Parse(format!("unknown boundary condition {other:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Periodic => "periodic",
            BoundaryCondition::Open => "open",
        }
    }
}

/// Nearest-neighbour pairs `(i, i+1)`, wrapping only for periodic chains.
pub fn bonds(n: usize, bc: BoundaryCondition) -> Vec<(usize, usize)> {
    match bc {
        BoundaryCondition::Periodic if n >= 2 => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        _ => (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
    }
}

/// Consecutive triples `(i, i+1, i+2)`, wrapping only for periodic chains.
pub fn triples(n: usize, bc: BoundaryCondition) -> Vec<(usize, usize, usize)> {
    match bc {
        BoundaryCondition::Periodic if n >= 3 => (0..n).map(|i| (i, (i + 1) % n, (i + 2) % n)).collect(),
        _ => (0..n.saturating_sub(2)).map(|i| (i, i + 1, i + 2)).collect(),
    }
}

/// Transverse-field chain with nearest-neighbour XX and three-body XXX
/// couplings:
/// `H = J/2 Σ XᵢXᵢ₊₁ + Δ/2 Σ XᵢXᵢ₊₁Xᵢ₊₂ + λ/2 Σ Zᵢ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinChain {
    pub n_sites: usize,
    pub j: f64,
    pub delta: f64,
    pub bc: BoundaryCondition,
}

impl SpinChain {
    pub fn new(n_sites: usize, j: f64, delta: f64, bc: BoundaryCondition) -> Result<Self> {
        if n_sites == 0 || n_sites > super::MAX_SITES {
            return Err(Error::InvalidConfiguration(format!(
                "chain needs 1..={} sites, got {n_sites}",
                super::MAX_SITES
            )));
        }
        if !j.is_finite() || !delta.is_finite() {
            return Err(Error::InvalidConfiguration("non-finite chain coupling".into()));
        }
        if bc == BoundaryCondition::Periodic && delta != 0.0 && n_sites < 3 {
            return Err(Error::InvalidConfiguration(format!(
                "three-body term on a periodic chain needs n >= 3, got {n_sites}"
            )));
        }
        if bc == BoundaryCondition::Periodic && j != 0.0 && n_sites < 2 {
            return Err(Error::InvalidConfiguration(
                "two-body term on a periodic chain needs n >= 2".into(),
            ));
        }
        Ok(SpinChain { n_sites, j, delta, bc })
    }

    /// The λ-independent part: two- and three-body X couplings.
    pub fn background(&self) -> PauliOperator {
        let n = self.n_sites;
        let mut op = PauliOperator::zero(n);
        if self.j != 0.0 {
            for (a, b) in bonds(n, self.bc) {
                let key = PauliKey::from_letters(&[(a, Letter::X), (b, Letter::X)]);
                op.add_term(key, Complex64::new(self.j / 2.0, 0.0));
            }
        }
        if self.delta != 0.0 {
            for (a, b, c) in triples(n, self.bc) {
                let key = PauliKey::from_letters(&[(a, Letter::X), (b, Letter::X), (c, Letter::X)]);
                op.add_term(key, Complex64::new(self.delta / 2.0, 0.0));
            }
        }
        op
    }

    /// `∂λH = ½ Σ Zᵢ`.
    pub fn sensing(&self) -> PauliOperator {
        collective_z(self.n_sites)
    }

    pub fn hamiltonian(&self, lambda: f64) -> PauliOperator {
        &self.background() + &self.sensing().scale_real(lambda)
    }
}

/// `½ Σᵢ Zᵢ`
pub(crate) fn collective_z(n: usize) -> PauliOperator {
    let mut op = PauliOperator::zero(n);
    for i in 0..n {
        op.add_term(PauliKey::from_letters(&[(i, Letter::Z)]), Complex64::new(0.5, 0.0));
    }
    op
}

pub fn build_spin_chain(n: usize, j: f64, delta: f64, lambda: f64, bc: BoundaryCondition) -> Result<PauliOperator> {
    if !lambda.is_finite() {
        return Err(Error::InvalidConfiguration("non-finite field".into()));
    }
    Ok(SpinChain::new(n, j, delta, bc)?.hamiltonian(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs_diff, pauli_matrix, CMatrix};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn field_only_chain() {
        let h = build_spin_chain(3, 0.0, 0.0, 1.0, BoundaryCondition::Periodic).unwrap();
        let want = PauliOperator::from_labels(3, &[("Z0", c(0.5)), ("Z1", c(0.5)), ("Z2", c(0.5))]).unwrap();
        assert_eq!(h, want);
    }

    #[test]
    fn full_chain_term_count() {
        let h = build_spin_chain(4, 1.0, 1.0, 1.0, BoundaryCondition::Periodic).unwrap();
        assert_eq!(h.len(), 12);
        assert!(h.is_hermitian(0.0));
        let open = build_spin_chain(4, 1.0, 1.0, 1.0, BoundaryCondition::Open).unwrap();
        assert_eq!(open.len(), 4 + 3 + 2);
    }

    #[test]
    fn three_body_ring_matches_kronecker() {
        let h = build_spin_chain(4, 0.0, 1.0, 0.0, BoundaryCondition::Periodic).unwrap();
        let x = pauli_matrix(Some(Letter::X));
        let id = pauli_matrix(None);
        let site_op = |sites: [usize; 3]| -> CMatrix {
            let mut m = CMatrix::identity(1, 1);
            for s in 0..4 {
                m = kron(&m, if sites.contains(&s) { &x } else { &id });
            }
            m
        };
        let mut want = CMatrix::zeros(16, 16);
        for t in [[0, 1, 2], [1, 2, 3], [2, 3, 0], [3, 0, 1]] {
            want += site_op(t) * c(0.5);
        }
        assert!(max_abs_diff(&h.to_dense().unwrap(), &want) < 1e-14);
    }

    #[test]
    fn short_periodic_three_body_rejected() {
        let err = build_spin_chain(2, 0.0, 1.0, 1.0, BoundaryCondition::Periodic).unwrap_err();
        assert!(matches!(err, Error::InvalidConfiguration(_)));
        assert!(build_spin_chain(2, 0.0, 1.0, 1.0, BoundaryCondition::Open).is_ok());
    }

    #[test]
    fn bond_lists() {
        assert_eq!(bonds(3, BoundaryCondition::Periodic), vec![(0, 1), (1, 2), (2, 0)]);
        assert_eq!(bonds(3, BoundaryCondition::Open), vec![(0, 1), (1, 2)]);
        assert_eq!(triples(4, BoundaryCondition::Open), vec![(0, 1, 2), (1, 2, 3)]);
    }
}
