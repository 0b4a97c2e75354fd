use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pauli::{bonds, BoundaryCondition, Letter, PauliOperator, PauliString};

/// Condition numbers above this count as rank deficient.
const MAX_CONDITION: f64 = 1e10;

/// Ordered set of Hermitian, traceless, linearly independent control
/// operators `{X_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBasis {
    n_sites: usize,
    elements: Vec<PauliOperator>,
    labels: Vec<String>,
    condition_number: f64,
}

impl ControlBasis {
    /// Labels default to each element's display form.
    pub fn new(elements: Vec<PauliOperator>, labels: Option<Vec<String>>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidConfiguration("control basis is empty".into()));
        };
        let n_sites = first.n_sites();
        for (i, x) in elements.iter().enumerate() {
            if x.n_sites() != n_sites {
                return Err(Error::DimensionMismatch {
                    expected: n_sites,
                    found: x.n_sites(),
                });
            }
            if !x.is_hermitian(1e-12) {
                return Err(Error::InvalidConfiguration(format!(
                    "basis element {i} is not Hermitian"
                )));
            }
            if x.normalized_trace().norm() > 1e-12 {
                return Err(Error::InvalidConfiguration(format!(
                    "basis element {i} is not traceless"
                )));
            }
        }
        let labels = match labels {
            Some(l) if l.len() != elements.len() => {
                return Err(Error::InvalidConfiguration(format!(
                    "{} labels for {} basis elements",
                    l.len(),
                    elements.len()
                )))
            }
            Some(l) => l,
            None => elements.iter().map(|e| e.to_string()).collect(),
        };
        let gram = gram_matrix(&elements);
        let eig = gram.clone().symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition_number = if min > 0.0 { max / min } else { f64::INFINITY };
        if condition_number.is_nan() || condition_number > MAX_CONDITION {
            return Err(Error::Constraint(format!(
                "basis elements are linearly dependent (Gram condition number {condition_number:e})"
            )));
        }
        Ok(ControlBasis {
            n_sites,
            elements,
            labels,
            condition_number,
        })
    }

    /// One unit Pauli string per label, e.g. `["X0", "Y0 Z1"]`.
    pub fn from_labels(n_sites: usize, labels: &[&str]) -> Result<Self> {
        let mut elements = Vec::with_capacity(labels.len());
        for l in labels {
            elements.push(PauliOperator::term(n_sites, l, 1.0)?);
        }
        Self::new(elements, Some(labels.iter().map(|s| s.to_string()).collect()))
    }

    /// Every listed letter on every site.
    pub fn single_site(n_sites: usize, letters: &[Letter]) -> Result<Self> {
        let mut strings = Vec::new();
        for site in 0..n_sites {
            for &l in letters {
                strings.push(PauliString::new(n_sites, &[(site, l)], 1.0.into())?);
            }
        }
        Self::from_strings(n_sites, strings)
    }

    /// All one-body strings plus all nine letter pairs on each bond.
    pub fn local_two_body(n_sites: usize, bc: BoundaryCondition) -> Result<Self> {
        let mut strings = Vec::new();
        for site in 0..n_sites {
            for l in Letter::ALL {
                strings.push(PauliString::new(n_sites, &[(site, l)], 1.0.into())?);
            }
        }
        for (i, j) in bonds(n_sites, bc) {
            for a in Letter::ALL {
                for b in Letter::ALL {
                    strings.push(PauliString::new(n_sites, &[(i, a), (j, b)], 1.0.into())?);
                }
            }
        }
        Self::from_strings(n_sites, strings)
    }

    fn from_strings(n_sites: usize, strings: Vec<PauliString>) -> Result<Self> {
        let labels = strings.iter().map(|s| s.label()).collect();
        let elements = strings.into_iter().map(|s| s.to_operator()).collect();
        let basis = Self::new(elements, Some(labels))?;
        debug_assert_eq!(basis.n_sites, n_sites);
        Ok(basis)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[PauliOperator] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    /// `Re Tr(X_i X_j)/2^n`
    pub fn gram(&self) -> DMatrix<f64> {
        gram_matrix(&self.elements)
    }

    /// Least-squares coefficients of `op` in the basis, and the Frobenius
    /// norm per dimension of what the basis cannot represent.
    pub fn project(&self, op: &PauliOperator) -> Result<(Vec<f64>, f64)> {
        if op.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                found: op.n_sites(),
            });
        }
        let rhs = nalgebra::DVector::from_iterator(self.len(), self.elements.iter().map(|x| x.hs_inner(op).re));
        let coeffs = self
            .gram()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Constraint("singular Gram matrix".into()))?;
        let mut fitted = PauliOperator::zero(self.n_sites);
        for (x, c) in self.elements.iter().zip(coeffs.iter()) {
            fitted = &fitted + &x.scale_real(*c);
        }
        let rest = op - &fitted;
        let leftover = rest.hs_inner(&rest).re.max(0.0).sqrt();
        Ok((coeffs.iter().cloned().collect(), leftover))
    }

    /// `Σ c_i X_i`
    pub fn combine(&self, coeffs: &[f64]) -> PauliOperator {
        let mut out = PauliOperator::zero(self.n_sites);
        for (x, c) in self.elements.iter().zip(coeffs) {
            out = &out + &x.scale_real(*c);
        }
        out
    }
}

fn gram_matrix(elements: &[PauliOperator]) -> DMatrix<f64> {
    let d = elements.len();
    DMatrix::from_fn(d, d, |i, j| elements[i].hs_inner(&elements[j]).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn qubit_basis() {
        let b = ControlBasis::from_labels(1, &["X0", "Y0", "Z0"]).unwrap();
        assert_eq!(b.len(), 3);
        assert!((b.condition_number() - 1.0).abs() < 1e-12);
        assert_eq!(b.labels()[1], "Y0");
    }

    #[test]
    fn rejects_bad_elements() {
        let id = PauliOperator::identity(1, Complex64::new(1.0, 0.0));
        assert!(ControlBasis::new(vec![id], None).is_err());
        let anti = PauliOperator::from_labels(1, &[("X0", Complex64::new(0.0, 1.0))]).unwrap();
        assert!(ControlBasis::new(vec![anti], None).is_err());
        let x = PauliOperator::term(1, "X0", 1.0).unwrap();
        let err = ControlBasis::new(vec![x.clone(), x.scale_real(2.0)], None).unwrap_err();
        assert!(matches!(err, Error::Constraint(_)));
        assert!(ControlBasis::new(Vec::new(), None).is_err());
    }

    #[test]
    fn local_basis_size() {
        let b = ControlBasis::local_two_body(4, BoundaryCondition::Periodic).unwrap();
        assert_eq!(b.len(), 12 + 4 * 9);
        let b = ControlBasis::local_two_body(4, BoundaryCondition::Open).unwrap();
        assert_eq!(b.len(), 12 + 3 * 9);
    }

    #[test]
    fn projection_recovers_coefficients() {
        let b = ControlBasis::single_site(2, &Letter::ALL).unwrap();
        let op = b.combine(&[0.1, -0.2, 0.3, 0.0, 1.5, -0.7]);
        let (c, rest) = b.project(&op).unwrap();
        for (a, e) in c.iter().zip([0.1, -0.2, 0.3, 0.0, 1.5, -0.7]) {
            assert!((a - e).abs() < 1e-14);
        }
        assert!(rest < 1e-14);
        let zz = PauliOperator::term(2, "Z0 Z1", 2.0).unwrap();
        let (c, rest) = b.project(&zz).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-14));
        assert!((rest - 2.0).abs() < 1e-14);
    }
}
