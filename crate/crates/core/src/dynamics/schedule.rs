use crate::error::{Error, Result};
use crate::floquet::HarmonicDrive;
use crate::linalg::SparseOperator;
use crate::pauli::{PauliOperator, SpinChain, DEFAULT_DENSE_LIMIT};

/// Scalar time profile multiplying a Hamiltonian term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    Constant,
    /// `cos(ω t + φ)`
    Cos {
        omega: f64,
        phase: f64,
    },
    /// `a + b t`
    Linear {
        offset: f64,
        slope: f64,
    },
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 1.0,
            Envelope::Cos { omega, phase } => (omega * t + phase).cos(),
            Envelope::Linear { offset, slope } => offset + slope * t,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Envelope::Constant)
    }
}

/// One term of `H_λ(τ)`: `f(τ)·O`, multiplied by λ when `parametric`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTerm {
    pub operator: PauliOperator,
    pub envelope: Envelope,
    pub parametric: bool,
}

/// Control coefficients `c_i(τ_k)` tabulated on the uniform propagation grid
/// `τ_k = k·t_f/K`, `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedControls {
    pub basis: Vec<PauliOperator>,
    pub t_f: f64,
    /// One row per basis element, `K + 1` samples each.
    pub table: Vec<Vec<f64>>,
}

impl TabulatedControls {
    pub fn zeros(basis: Vec<PauliOperator>, t_f: f64, steps: usize) -> Self {
        let table = vec![vec![0.0; steps + 1]; basis.len()];
        TabulatedControls { basis, t_f, table }
    }

    pub fn steps(&self) -> usize {
        self.table.first().map(|r| r.len().saturating_sub(1)).unwrap_or(0)
    }

    /// Value used on step `k`: average of the two bracketing samples.
    pub fn step_value(&self, i: usize, k: usize) -> f64 {
        0.5 * (self.table[i][k] + self.table[i][k + 1])
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if self.basis.len() != self.table.len() {
            return Err(Error::GridMismatch(format!(
                "{} basis elements but {} coefficient rows",
                self.basis.len(),
                self.table.len()
            )));
        }
        let len = self.table.first().map(|r| r.len()).unwrap_or(0);
        for (i, row) in self.table.iter().enumerate() {
            if row.len() != len {
                return Err(Error::GridMismatch(format!(
                    "coefficient row {i} has {} samples, expected {len}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfiguration(format!(
                    "coefficient row {i} has non-finite entries"
                )));
            }
        }
        for b in &self.basis {
            if b.n_sites() != n_sites {
                return Err(Error::DimensionMismatch {
                    expected: n_sites,
                    found: b.n_sites(),
                });
            }
        }
        Ok(())
    }
}

/// `H_tot(τ) = H_λ(τ) + H_{c,0} + drive(τ) + Σᵢ cᵢ(τ) Xᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSchedule {
    pub n_sites: usize,
    pub lambda: f64,
    pub terms: Vec<ScheduleTerm>,
    pub static_control: PauliOperator,
    pub drive: Option<HarmonicDrive>,
    pub controls: Option<TabulatedControls>,
}

impl HamiltonianSchedule {
    pub fn new(n_sites: usize, lambda: f64) -> Self {
        HamiltonianSchedule {
            n_sites,
            lambda,
            terms: Vec::new(),
            static_control: PauliOperator::zero(n_sites),
            drive: None,
            controls: None,
        }
    }

    /// `H_λ = background + λ·sensing`, both time-independent.
    pub fn from_static(background: PauliOperator, sensing: PauliOperator, lambda: f64) -> Self {
        let n = background.n_sites();
        HamiltonianSchedule::new(n, lambda)
            .with_term(background, Envelope::Constant, false)
            .with_term(sensing, Envelope::Constant, true)
    }

    /// `λσz/2 + Δσx/2`
    pub fn qubit(lambda: f64, delta: f64) -> Self {
        let bg = PauliOperator::term(1, "X0", delta / 2.0).expect("valid label");
        let sensing = PauliOperator::term(1, "Z0", 0.5).expect("valid label");
        Self::from_static(bg, sensing, lambda)
    }

    pub fn chain(chain: &SpinChain, lambda: f64) -> Self {
        Self::from_static(chain.background(), chain.sensing(), lambda)
    }

    pub fn with_term(mut self, operator: PauliOperator, envelope: Envelope, parametric: bool) -> Self {
        self.terms.push(ScheduleTerm {
            operator,
            envelope,
            parametric,
        });
        self
    }

    pub fn with_static_control(mut self, control: PauliOperator) -> Self {
        self.static_control = control;
        self
    }

    pub fn with_drive(mut self, drive: HarmonicDrive) -> Self {
        self.drive = Some(drive);
        self
    }

    pub fn with_controls(mut self, controls: TabulatedControls) -> Self {
        self.controls = Some(controls);
        self
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        HamiltonianSchedule { lambda, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 || self.n_sites > DEFAULT_DENSE_LIMIT {
            return Err(Error::Capacity {
                n_sites: self.n_sites,
                limit: DEFAULT_DENSE_LIMIT,
            });
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidConfiguration("non-finite lambda".into()));
        }
        let check = |op: &PauliOperator| -> Result<()> {
            if op.n_sites() != self.n_sites {
                return Err(Error::DimensionMismatch {
                    expected: self.n_sites,
                    found: op.n_sites(),
                });
            }
            if !op.is_hermitian(1e-12) {
                return Err(Error::InvalidConfiguration("schedule terms must be Hermitian".into()));
            }
            Ok(())
        };
        for t in &self.terms {
            check(&t.operator)?;
        }
        check(&self.static_control)?;
        if let Some(d) = &self.drive {
            if d.n_sites() != self.n_sites {
                return Err(Error::DimensionMismatch {
                    expected: self.n_sites,
                    found: d.n_sites(),
                });
            }
        }
        if let Some(c) = &self.controls {
            c.validate(self.n_sites)?;
            for b in &c.basis {
                check(b)?;
            }
        }
        Ok(())
    }

    /// `H_λ(τ)` alone, without any control.
    pub fn hamiltonian_lambda(&self, t: f64) -> PauliOperator {
        let mut out = PauliOperator::zero(self.n_sites);
        for term in &self.terms {
            let w = term.envelope.at(t) * if term.parametric { self.lambda } else { 1.0 };
            out = &out + &term.operator.scale_real(w);
        }
        out
    }

    /// `∂λH_λ(τ)`, exact.
    pub fn sensing_at(&self, t: f64) -> PauliOperator {
        let mut out = PauliOperator::zero(self.n_sites);
        for term in self.terms.iter().filter(|t| t.parametric) {
            out = &out + &term.operator.scale_real(term.envelope.at(t));
        }
        out
    }

    /// Total Hamiltonian at time `t`; tabulated controls are taken on step
    /// `step` of their grid when given, else interpolated linearly.
    pub fn evaluate(&self, t: f64, step: Option<usize>) -> PauliOperator {
        let mut out = &self.hamiltonian_lambda(t) + &self.static_control;
        if let Some(d) = &self.drive {
            out = &out + &d.evaluate(t);
        }
        if let Some(c) = &self.controls {
            let k_max = c.steps();
            for (i, b) in c.basis.iter().enumerate() {
                let v = match step {
                    Some(k) => c.step_value(i, k.min(k_max.saturating_sub(1))),
                    None => {
                        let x = (t / c.t_f * k_max as f64).clamp(0.0, k_max as f64);
                        let k = (x.floor() as usize).min(k_max.saturating_sub(1));
                        let f = x - k as f64;
                        c.table[i][k] * (1.0 - f) + c.table[i][k + 1] * f
                    }
                };
                out = &out + &b.scale_real(v);
            }
        }
        out
    }

    pub fn sensing_is_static(&self) -> bool {
        self.terms
            .iter()
            .filter(|t| t.parametric)
            .all(|t| t.envelope.is_constant())
    }

    /// True when the total Hamiltonian is periodic with the drive period
    /// (constant terms plus a drive, no tabulated controls).
    pub fn is_drive_periodic(&self) -> bool {
        self.controls.is_none()
            && self.drive.as_ref().is_some_and(|d| !d.is_zero())
            && self.terms.iter().all(|t| t.envelope.is_constant())
    }

    pub fn is_time_independent(&self) -> bool {
        self.controls.is_none()
            && self.drive.as_ref().is_none_or(|d| d.is_zero())
            && self.terms.iter().all(|t| t.envelope.is_constant())
    }

    /// Period `2π/(l_max·ω)` of the fastest drive harmonic.
    pub fn fastest_period(&self) -> Option<f64> {
        let d = self.drive.as_ref()?;
        let l = d.max_harmonic();
        (l > 0).then(|| 2.0 * std::f64::consts::PI / (l as f64 * d.omega()))
    }

    pub(crate) fn compile(&self) -> Result<CompiledSchedule> {
        self.validate()?;
        let dim = self.dim();
        let mut constant = PauliOperator::zero(self.n_sites);
        let mut timed = Vec::new();
        let mut sensing_const = PauliOperator::zero(self.n_sites);
        let mut sensing_timed = Vec::new();
        for t in &self.terms {
            let scale = if t.parametric { self.lambda } else { 1.0 };
            if t.envelope.is_constant() {
                constant = &constant + &t.operator.scale_real(scale);
            } else {
                timed.push((
                    Weight::Envelope(t.envelope, scale),
                    SparseOperator::from_pauli(&t.operator),
                ));
            }
            if t.parametric {
                if t.envelope.is_constant() {
                    sensing_const = &sensing_const + &t.operator;
                } else {
                    sensing_timed.push((
                        Weight::Envelope(t.envelope, 1.0),
                        SparseOperator::from_pauli(&t.operator),
                    ));
                }
            }
        }
        constant = &constant + &self.static_control;
        if let Some(d) = &self.drive {
            for (l, a, b) in d.quadratures() {
                let w = l as f64 * d.omega();
                timed.push((Weight::Cos(w), SparseOperator::from_pauli(&a)));
                timed.push((Weight::Sin(w), SparseOperator::from_pauli(&b)));
            }
        }
        let mut table_rows = Vec::new();
        if let Some(c) = &self.controls {
            for (i, b) in c.basis.iter().enumerate() {
                table_rows.push((i, SparseOperator::from_pauli(b)));
            }
        }
        Ok(CompiledSchedule {
            dim,
            constant: SparseOperator::from_pauli(&constant),
            timed,
            table_rows,
            controls: self.controls.clone(),
            sensing_const: SparseOperator::from_pauli(&sensing_const),
            sensing_const_pauli: sensing_const,
            sensing_timed,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Weight {
    Envelope(Envelope, f64),
    Cos(f64),
    Sin(f64),
}

impl Weight {
    fn at(&self, t: f64) -> f64 {
        match *self {
            Weight::Envelope(e, s) => s * e.at(t),
            Weight::Cos(w) => (w * t).cos(),
            Weight::Sin(w) => (w * t).sin(),
        }
    }
}

/// Schedule lowered to sparse operators for stepping.
pub(crate) struct CompiledSchedule {
    pub dim: usize,
    constant: SparseOperator,
    timed: Vec<(Weight, SparseOperator)>,
    table_rows: Vec<(usize, SparseOperator)>,
    controls: Option<TabulatedControls>,
    sensing_const: SparseOperator,
    pub sensing_const_pauli: PauliOperator,
    sensing_timed: Vec<(Weight, SparseOperator)>,
}

impl CompiledSchedule {
    /// Hamiltonian held on step `k`, sampled at the step midpoint `t_mid`.
    pub fn step_hamiltonian(&self, t_mid: f64, k: usize) -> SparseOperator {
        if self.is_static() {
            return self.constant.clone();
        }
        let mut weights: Vec<f64> = Vec::with_capacity(1 + self.timed.len() + self.table_rows.len());
        weights.push(1.0);
        let mut ops: Vec<&SparseOperator> = vec![&self.constant];
        for (w, op) in &self.timed {
            weights.push(w.at(t_mid));
            ops.push(op);
        }
        if let Some(c) = &self.controls {
            for (i, op) in &self.table_rows {
                weights.push(c.step_value(*i, k));
                ops.push(op);
            }
        }
        let parts: Vec<(f64, &SparseOperator)> = weights.into_iter().zip(ops).collect();
        SparseOperator::combine(&parts)
    }

    /// `∂λH` held on the step with midpoint `t_mid`.
    pub fn step_sensing(&self, t_mid: f64) -> SparseOperator {
        if self.sensing_timed.is_empty() {
            return self.sensing_const.clone();
        }
        let mut parts: Vec<(f64, &SparseOperator)> = vec![(1.0, &self.sensing_const)];
        for (w, op) in &self.sensing_timed {
            parts.push((w.at(t_mid), op));
        }
        SparseOperator::combine(&parts)
    }

    pub fn is_static(&self) -> bool {
        self.timed.is_empty() && self.table_rows.is_empty()
    }

    pub fn sensing_static(&self) -> bool {
        self.sensing_timed.is_empty()
    }
}

/// Spectral spread (max minus min eigenvalue) of a Hermitian Pauli operator;
/// exact for diagonal operators without forming a matrix.
pub fn spread(op: &PauliOperator) -> Result<f64> {
    if op.is_zero() {
        return Ok(0.0);
    }
    let diagonal = op.terms().all(|s| s.key().x_mask() == 0);
    if diagonal {
        let sparse = SparseOperator::from_pauli(op);
        let d = sparse.to_dense_diagonal();
        let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        return Ok(max - min);
    }
    let (vals, _) = crate::linalg::hermitian_eigen(&op.to_dense()?);
    Ok(vals[vals.len() - 1] - vals[0])
}

impl SparseOperator {
    /// Real diagonal of an operator known to be diagonal and Hermitian.
    pub(crate) fn to_dense_diagonal(&self) -> Vec<f64> {
        let d = self.to_dense();
        (0..self.dim()).map(|i| d[(i, i)].re).collect()
    }
}

#[cfg(test)]
pub(crate) fn c(re: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(re, 0.0)
}
