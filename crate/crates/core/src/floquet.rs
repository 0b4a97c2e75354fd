//! First-order high-frequency Floquet engineering.
//!
//! A drive `Σ_{l≠0} H_l e^{ilωt}` is stored by its non-negative harmonics;
//! `H_{−l}` is always `H_l†`, so the time-domain drive is Hermitian by
//! construction.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::pauli::{bonds, BoundaryCondition, Letter, PauliKey, PauliOperator, PauliString};

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDrive {
    n_sites: usize,
    omega: f64,
    components: BTreeMap<usize, PauliOperator>,
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidFrequency(omega))
    }
}

impl HarmonicDrive {
    pub fn new(n_sites: usize, omega: f64) -> Result<Self> {
        check_omega(omega)?;
        Ok(HarmonicDrive {
            n_sites,
            omega,
            components: BTreeMap::new(),
        })
    }

    /// Builds a drive from signed harmonics. When both `l` and `−l` are
    /// given they must be mutually adjoint; a lone negative harmonic is
    /// stored through its adjoint.
    pub fn from_signed(n_sites: usize, omega: f64, parts: Vec<(i64, PauliOperator)>) -> Result<Self> {
        let mut drive = HarmonicDrive::new(n_sites, omega)?;
        let mut given: BTreeMap<i64, PauliOperator> = BTreeMap::new();
        for (l, op) in parts {
            if l == 0 {
                return Err(Error::InvalidConfiguration(
                    "harmonic 0 belongs to the static control, not the drive".into(),
                ));
            }
            if op.n_sites() != n_sites {
                return Err(Error::DimensionMismatch {
                    expected: n_sites,
                    found: op.n_sites(),
                });
            }
            let slot = given.entry(l).or_insert_with(|| PauliOperator::zero(n_sites));
            *slot = &*slot + &op;
        }
        for (&l, op) in &given {
            let m = l.unsigned_abs() as usize;
            if l > 0 {
                if let Some(neg) = given.get(&-l) {
                    let tol = 1e-12 * op.coefficient_norm().max(1.0);
                    if neg.max_coefficient_diff(&op.adjoint()) > tol {
                        return Err(Error::InvalidConfiguration(format!(
                            "harmonics {l} and {} are not mutually adjoint",
                            -l
                        )));
                    }
                }
                drive.components.insert(m, op.clone());
            } else if !given.contains_key(&-l) {
                drive.components.insert(m, op.adjoint());
            }
        }
        Ok(drive)
    }

    /// Adds `op` to `H_l` (and implicitly its adjoint to `H_{−l}`).
    pub fn add_component(&mut self, l: usize, op: PauliOperator) -> Result<()> {
        if l == 0 {
            return Err(Error::InvalidConfiguration("harmonic index must be >= 1".into()));
        }
        if op.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                found: op.n_sites(),
            });
        }
        let slot = self
            .components
            .entry(l)
            .or_insert_with(|| PauliOperator::zero(op.n_sites()));
        *slot = &*slot + &op;
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// Same harmonics at a different fundamental frequency.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        check_omega(omega)?;
        Ok(HarmonicDrive { omega, ..self.clone() })
    }

    pub fn is_zero(&self) -> bool {
        self.components.values().all(|c| c.is_zero())
    }

    pub fn max_harmonic(&self) -> usize {
        self.components
            .iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(l, _)| *l)
            .max()
            .unwrap_or(0)
    }

    /// `(l, H_l)` for `l ≥ 1`.
    pub fn harmonics(&self) -> impl Iterator<Item = (usize, &PauliOperator)> {
        self.components.iter().map(|(l, c)| (*l, c))
    }

    /// `H_l` for any signed `l`; zero for absent harmonics.
    pub fn component(&self, l: i64) -> PauliOperator {
        let m = l.unsigned_abs() as usize;
        match self.components.get(&m) {
            Some(op) if l > 0 => op.clone(),
            Some(op) if l < 0 => op.adjoint(),
            _ => PauliOperator::zero(self.n_sites),
        }
    }

    /// Hermitian cosine and sine parts: `H_l e^{ilωt} + h.c. =
    /// cos(lωt)·A_l + sin(lωt)·B_l` with `A_l = H_l + H_l†` and
    /// `B_l = i(H_l − H_l†)`.
    pub fn quadratures(&self) -> Vec<(usize, PauliOperator, PauliOperator)> {
        self.components
            .iter()
            .map(|(l, h)| {
                let adj = h.adjoint();
                let a = h + &adj;
                let b = (h - &adj).scale(Complex64::new(0.0, 1.0));
                (*l, a, b)
            })
            .collect()
    }

    /// `Σ_{l≠0} H_l e^{ilωt}`
    pub fn evaluate(&self, t: f64) -> PauliOperator {
        let mut out = PauliOperator::zero(self.n_sites);
        for (l, h) in &self.components {
            let phase = Complex64::from_polar(1.0, *l as f64 * self.omega * t);
            out = &out + &h.scale(phase);
            out = &out + &h.adjoint().scale(phase.conj());
        }
        out
    }

    /// Largest drive coefficient magnitude.
    pub fn amplitude_scale(&self) -> f64 {
        self.components
            .values()
            .flat_map(|c| c.terms().map(|s| s.coeff().norm()))
            .fold(0.0, f64::max)
    }

    /// `(1/ω) Σ_{l≥1} [H_l, H_{−l}]/l`
    pub fn first_order_term(&self) -> Result<PauliOperator> {
        let mut out = PauliOperator::zero(self.n_sites);
        for (l, h) in &self.components {
            let comm = h.commutator(&h.adjoint())?;
            out = &out + &comm.scale_real(1.0 / (*l as f64 * self.omega));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub h_f: PauliOperator,
    /// Heuristic scale of the dropped second-order terms.
    pub truncation_bound: f64,
}

/// First-order effective Hamiltonian `H_static + (1/ω)Σ_{l≥1}[H_l, H_{−l}]/l`.
pub fn effective_hamiltonian(h_static: &PauliOperator, drive: &HarmonicDrive) -> Result<EffectiveModel> {
    check_omega(drive.omega())?;
    if h_static.n_sites() != drive.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: drive.n_sites(),
            found: h_static.n_sites(),
        });
    }
    let h_f = h_static + &drive.first_order_term()?;
    let mut worst: f64 = 0.0;
    for (_, h) in drive.harmonics() {
        let inner = h.commutator(h_static)?;
        worst = worst.max(h.commutator(&inner)?.coefficient_norm());
    }
    Ok(EffectiveModel {
        h_f,
        truncation_bound: worst / (drive.omega() * drive.omega()),
    })
}

/// First-order kick operator
/// `K(t) = (1/(iω)) Σ_{l≠0} (1/l) H_l (e^{ilωt} − 1)`, with `K(0) = 0`.
pub fn kick_operator_pauli(drive: &HarmonicDrive, t: f64) -> PauliOperator {
    let mut out = PauliOperator::zero(drive.n_sites());
    let w = drive.omega();
    for (l, h) in drive.harmonics() {
        let lf = l as f64;
        let e = Complex64::from_polar(1.0, lf * w * t) - 1.0;
        let pre = Complex64::new(0.0, -1.0 / (w * lf));
        out = &out + &h.scale(pre * e);
        // The −l partner: (1/(−l)) H_l† (e^{−ilωt} − 1).
        out = &out + &h.adjoint().scale(-pre * e.conj());
    }
    out
}

pub fn kick_operator(drive: &HarmonicDrive, t: f64) -> Result<CMatrix> {
    kick_operator_pauli(drive, t).to_dense()
}

fn harmonic_sum<F: Fn(usize) -> f64>(len: usize, f: F) -> f64 {
    (0..len).map(|i| f(i) / (i + 1) as f64).sum()
}

fn matched(omega: f64, what: &str) -> Result<f64> {
    if omega.is_finite() && omega > 0.0 {
        Ok(omega)
    } else {
        Err(Error::NoMatching(format!(
            "{what} gives omega = {omega}; the coefficient products must have the sign of the coupling"
        )))
    }
}

/// Qubit matching frequency `ω = 8/Δ Σ_l Im(c^y_l c^{z*}_l)/l`, harmonics
/// indexed from 1.
pub fn afm_frequency_qubit(cy: &[Complex64], cz: &[Complex64], delta: f64) -> Result<f64> {
    if cy.len() != cz.len() {
        return Err(Error::InvalidConfiguration(format!(
            "{} y-coefficients but {} z-coefficients",
            cy.len(),
            cz.len()
        )));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::InvalidConfiguration(
            "coupling must be nonzero and finite".into(),
        ));
    }
    let s = harmonic_sum(cy.len(), |i| (cy[i] * cz[i].conj()).im);
    matched(8.0 / delta * s, "qubit drive")
}

/// Chain matching frequency `ω = 8/Δ Σ_l c^{xy}_l c̃^{zx}_l / l`.
pub fn afm_frequency_chain(cxy: &[f64], czx: &[f64], delta: f64) -> Result<f64> {
    if cxy.len() != czx.len() {
        return Err(Error::InvalidConfiguration(format!(
            "{} xy-coefficients but {} zx-coefficients",
            cxy.len(),
            czx.len()
        )));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::InvalidConfiguration(
            "coupling must be nonzero and finite".into(),
        ));
    }
    let s = harmonic_sum(cxy.len(), |i| cxy[i] * czx[i]);
    matched(8.0 / delta * s, "chain drive")
}

/// Qubit drive `2 Σ_l [c^y_l cos(lωt) σy + c̃^z_l sin(lωt) σz]`, i.e.
/// `H_l = c^y_l σy − i c̃^z_l σz`.
pub fn qubit_drive(cy: &[f64], cz_tilde: &[f64], omega: f64) -> Result<HarmonicDrive> {
    if cy.len() != cz_tilde.len() || cy.is_empty() {
        return Err(Error::InvalidConfiguration(
            "qubit drive needs equally many (>= 1) y and z coefficients".into(),
        ));
    }
    let mut drive = HarmonicDrive::new(1, omega)?;
    for (i, (y, z)) in cy.iter().zip(cz_tilde).enumerate() {
        let op = PauliOperator::from_labels(1, &[("Y0", Complex64::new(*y, 0.0)), ("Z0", Complex64::new(0.0, -*z))])?;
        drive.add_component(i + 1, op)?;
    }
    Ok(drive)
}

/// Chain drive `2 Σ_l Σ_i [c^{xy}_l cos(lωt) XᵢYᵢ₊₁ + c̃^{zx}_l sin(lωt) ZᵢXᵢ₊₁]`,
/// i.e. `H_l = Σᵢ (c^{xy}_l XᵢYᵢ₊₁ − i c̃^{zx}_l ZᵢXᵢ₊₁)`.
pub fn chain_drive(
    cxy: &[f64],
    czx_tilde: &[f64],
    omega: f64,
    n_sites: usize,
    bc: BoundaryCondition,
) -> Result<HarmonicDrive> {
    if bc != BoundaryCondition::Periodic {
        return Err(Error::InvalidConfiguration(
            "chain drive needs periodic boundaries: the wrap bonds carry part of the three-body term".into(),
        ));
    }
    if n_sites < 3 {
        return Err(Error::InvalidConfiguration(format!(
            "chain drive needs n >= 3, got {n_sites}"
        )));
    }
    if cxy.len() != czx_tilde.len() || cxy.is_empty() {
        return Err(Error::InvalidConfiguration(
            "chain drive needs equally many (>= 1) xy and zx coefficients".into(),
        ));
    }
    let mut drive = HarmonicDrive::new(n_sites, omega)?;
    for (i, (a, b)) in cxy.iter().zip(czx_tilde).enumerate() {
        let mut op = PauliOperator::zero(n_sites);
        for (s, t) in bonds(n_sites, bc) {
            op.add_term(
                PauliKey::from_letters(&[(s, Letter::X), (t, Letter::Y)]),
                Complex64::new(*a, 0.0),
            );
            op.add_term(
                PauliKey::from_letters(&[(s, Letter::Z), (t, Letter::X)]),
                Complex64::new(0.0, -*b),
            );
        }
        drive.add_component(i + 1, op)?;
    }
    Ok(drive)
}

/// Static control cancelling every term of `h_static` that fails to commute
/// with `sensing` and is accepted by `allowed`.
pub fn static_counter_control<F>(h_static: &PauliOperator, sensing: &PauliOperator, allowed: F) -> Result<PauliOperator>
where
    F: Fn(&PauliString) -> bool,
{
    let mut out = PauliOperator::zero(h_static.n_sites());
    for s in h_static.terms() {
        let single = s.to_operator();
        if !single.commutes_with(sensing)? && allowed(&s) {
            out = &out - &single;
        }
    }
    Ok(out)
}

/// Warning text when `ω` is not the dominant frequency scale.
pub fn validity_warning(omega: f64, lambda: f64, delta: f64, drive: &HarmonicDrive) -> Option<String> {
    let scale = lambda.abs().max(delta.abs()).max(drive.amplitude_scale());
    (omega < 10.0 * scale).then(|| {
        format!(
            "drive frequency {omega:.4} is below 10x the largest energy scale {scale:.4}; \
             the first-order expansion may be inaccurate"
        )
    })
}
