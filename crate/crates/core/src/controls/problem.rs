use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::basis::ControlBasis;
use crate::dynamics::{
    generator_with, propagate_with, qfi, GeneratorSpectrum, HamiltonianSchedule, PropagateOptions, PropagationResult,
    QfiConvention, Storage, TabulatedControls,
};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// How the probe state is chosen when scoring a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialStatePolicy {
    /// The best state for the current generator, `(φ₊ + φ₋)/√2`.
    GeneratorOptimal,
    Fixed(CVector),
}

/// Restricted control problem: `H_c(τ) = Σ c_i(τ) X_i` on a uniform grid
/// with `K + 1` nodes, added to a fixed schedule.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub schedule: HamiltonianSchedule,
    pub basis: ControlBasis,
    pub t_f: f64,
    pub steps: usize,
    /// `d_c` rows of `K + 1` node values.
    pub coefficients: Vec<Vec<f64>>,
    pub policy: InitialStatePolicy,
    pub convention: QfiConvention,
    pub options: PropagateOptions,
}

/// Everything one objective evaluation produces.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub result: PropagationResult,
    pub spectrum: GeneratorSpectrum,
    pub qfi: f64,
    pub state: CVector,
    /// `W` with `dQFI = Tr(W·dG)`.
    pub weight: CMatrix,
}

impl ControlProblem {
    pub fn new(schedule: HamiltonianSchedule, basis: ControlBasis, t_f: f64, steps: usize) -> Result<Self> {
        if schedule.controls.is_some() {
            return Err(Error::InvalidConfiguration(
                "schedule already carries tabulated controls".into(),
            ));
        }
        if basis.n_sites() != schedule.n_sites {
            return Err(Error::DimensionMismatch {
                expected: schedule.n_sites,
                found: basis.n_sites(),
            });
        }
        if !t_f.is_finite() || t_f < 0.0 {
            return Err(Error::InvalidConfiguration(format!(
                "t_f must be finite and >= 0, got {t_f}"
            )));
        }
        if t_f > 0.0 && steps == 0 {
            return Err(Error::InvalidConfiguration("need at least one step".into()));
        }
        let coefficients = vec![vec![0.0; steps + 1]; basis.len()];
        Ok(ControlProblem {
            schedule,
            basis,
            t_f,
            steps,
            coefficients,
            policy: InitialStatePolicy::GeneratorOptimal,
            convention: QfiConvention::default(),
            options: PropagateOptions::default(),
        })
    }

    pub fn with_coefficients(mut self, table: Vec<Vec<f64>>) -> Result<Self> {
        self.set_coefficients(table)?;
        Ok(self)
    }

    pub fn set_coefficients(&mut self, table: Vec<Vec<f64>>) -> Result<()> {
        if table.len() != self.basis.len() || table.iter().any(|r| r.len() != self.steps + 1) {
            return Err(Error::GridMismatch(format!(
                "coefficient table must be {} x {}",
                self.basis.len(),
                self.steps + 1
            )));
        }
        if table.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfiguration("non-finite control coefficient".into()));
        }
        self.coefficients = table;
        Ok(())
    }

    pub fn with_policy(mut self, policy: InitialStatePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_convention(mut self, convention: QfiConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_options(mut self, options: PropagateOptions) -> Self {
        self.options = options;
        self
    }

    /// Uniform random coefficients in `[−amplitude, amplitude]`.
    pub fn randomized(mut self, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for row in &mut self.coefficients {
            for v in row.iter_mut() {
                *v = rng.gen_range(-amplitude..=amplitude);
            }
        }
        self
    }

    pub fn dim_controls(&self) -> usize {
        self.basis.len()
    }

    pub fn step_size(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.t_f / self.steps as f64
        }
    }

    pub fn time_grid(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| {
                if self.steps == 0 {
                    0.0
                } else {
                    self.t_f * k as f64 / self.steps as f64
                }
            })
            .collect()
    }

    /// Quadrature weight of node `k` (`δ` inside, `δ/2` at the ends).
    pub fn node_weight(&self, k: usize) -> f64 {
        let d = self.step_size();
        if k == 0 || k == self.steps {
            0.5 * d
        } else {
            d
        }
    }

    pub fn controlled_schedule(&self) -> HamiltonianSchedule {
        let ctl = TabulatedControls {
            basis: self.basis.elements().to_vec(),
            t_f: self.t_f,
            table: self.coefficients.clone(),
        };
        self.schedule.clone().with_controls(ctl)
    }

    pub fn propagate(&self, storage: Storage) -> Result<PropagationResult> {
        let opts = PropagateOptions {
            storage,
            ..self.options.clone()
        };
        propagate_with(&self.controlled_schedule(), self.t_f, self.steps, &opts)
    }

    pub fn evaluate(&self) -> Result<Evaluation> {
        self.evaluate_with(Storage::Full)
    }

    /// Objective only, with endpoint storage.
    pub fn objective(&self) -> Result<f64> {
        Ok(self.evaluate_with(Storage::Endpoints)?.qfi)
    }

    pub fn evaluate_with(&self, storage: Storage) -> Result<Evaluation> {
        let result = self.propagate(storage)?;
        let spectrum = generator_with(&result, &self.controlled_schedule(), self.convention)?;
        let conv = self.convention.factor();
        let dim = spectrum.dim();
        let (qfi_value, state, weight) = match &self.policy {
            InitialStatePolicy::GeneratorOptimal => {
                let state = spectrum
                    .optimal_state
                    .clone()
                    .unwrap_or_else(|| spectrum.phi_plus.clone());
                let weight = if spectrum.is_degenerate() {
                    CMatrix::zeros(dim, dim)
                } else {
                    spectrum.delta_rho() * Complex64::new(0.5 * conv * spectrum.spread(), 0.0)
                };
                (spectrum.max_qfi(), state, weight)
            }
            InitialStatePolicy::Fixed(psi) => {
                let value = qfi(&spectrum, psi)?;
                let rho = psi * psi.adjoint();
                let mean = psi.dotc(&(&spectrum.g * psi)).re;
                let anti = &spectrum.g * &rho + &rho * &spectrum.g;
                let weight = (anti - rho * Complex64::new(2.0 * mean, 0.0)) * Complex64::new(conv, 0.0);
                (value, psi.clone(), weight)
            }
        };
        Ok(Evaluation {
            result,
            spectrum,
            qfi: qfi_value,
            state,
            weight,
        })
    }

    /// Rows `(τ_k, c_1(τ_k), ..., c_{d_c}(τ_k))`.
    pub fn coefficient_rows(&self) -> Vec<Vec<f64>> {
        self.time_grid()
            .into_iter()
            .enumerate()
            .map(|(k, t)| {
                let mut row = Vec::with_capacity(1 + self.basis.len());
                row.push(t);
                row.extend(self.coefficients.iter().map(|r| r[k]));
                row
            })
            .collect()
    }
}
