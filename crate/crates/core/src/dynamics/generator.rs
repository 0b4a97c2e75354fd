use num_complex::Complex64;

use super::propagate::{propagate_with, PropagateOptions, PropagationResult};
use super::schedule::HamiltonianSchedule;
use crate::error::{Error, Result};
use crate::linalg::{adjoint_mul, fix_gauge, hermitian_eigen, hermitian_part, hermiticity_error, CMatrix, CVector};

const HERMITIAN_TOL: f64 = 1e-10;
/// Relative gap below which μ₊ and μ₋ count as equal.
pub const DEGENERACY_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-8;

/// Which multiple of the generator variance is reported as the QFI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QfiConvention {
    #[default]
    Var,
    FourVar,
}

impl QfiConvention {
    pub fn factor(self) -> f64 {
        match self {
            QfiConvention::Var => 1.0,
            QfiConvention::FourVar => 4.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "var" => Ok(QfiConvention::Var),
            "four_var" | "4var" => Ok(QfiConvention::FourVar),
            other => Err(Error::Parse(format!("unknown QFI convention {other:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QfiConvention::Var => "var",
            QfiConvention::FourVar => "four_var",
        }
    }
}

/// Dense generator with its spectrum and extremal eigenpairs.
#[derive(Debug, Clone)]
pub struct GeneratorSpectrum {
    pub g: CMatrix,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns match `eigenvalues`.
    pub eigenvectors: CMatrix,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub phi_plus: CVector,
    pub phi_minus: CVector,
    /// `(φ₊ + φ₋)/√2`; `None` when μ₊ = μ₋.
    pub optimal_state: Option<CVector>,
    pub convention: QfiConvention,
}

impl GeneratorSpectrum {
    pub fn from_matrix(g: CMatrix, convention: QfiConvention) -> Result<Self> {
        if g.nrows() != g.ncols() || g.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: g.nrows(),
                found: g.ncols(),
            });
        }
        let scale = crate::linalg::max_abs(&g).max(1.0);
        let herr = hermiticity_error(&g);
        if herr > HERMITIAN_TOL * scale {
            return Err(Error::InvalidConfiguration(format!(
                "generator is not Hermitian (deviation {herr:e})"
            )));
        }
        let g = hermitian_part(&g);
        let (eigenvalues, eigenvectors) = hermitian_eigen(&g);
        let last = eigenvalues.len() - 1;
        let mu_plus = eigenvalues[last];
        let mu_minus = eigenvalues[0];
        let mut phi_plus = eigenvectors.column(last).into_owned();
        let mut phi_minus = eigenvectors.column(0).into_owned();
        fix_gauge(&mut phi_plus);
        fix_gauge(&mut phi_minus);
        let optimal_state = (!is_degenerate(mu_plus, mu_minus))
            .then(|| (&phi_plus + &phi_minus) * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        Ok(GeneratorSpectrum {
            g,
            eigenvalues,
            eigenvectors,
            mu_plus,
            mu_minus,
            phi_plus,
            phi_minus,
            optimal_state,
            convention,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `μ₊ − μ₋`
    pub fn spread(&self) -> f64 {
        self.mu_plus - self.mu_minus
    }

    /// `conv·(μ₊ − μ₋)²/4`, defined even when degenerate.
    pub fn max_qfi(&self) -> f64 {
        self.convention.factor() * self.spread().powi(2) / 4.0
    }

    pub fn is_degenerate(&self) -> bool {
        is_degenerate(self.mu_plus, self.mu_minus)
    }

    /// `|φ₊⟩⟨φ₊| − |φ₋⟩⟨φ₋|`
    pub fn delta_rho(&self) -> CMatrix {
        &self.phi_plus * self.phi_plus.adjoint() - &self.phi_minus * self.phi_minus.adjoint()
    }
}

fn is_degenerate(mu_plus: f64, mu_minus: f64) -> bool {
    let scale = mu_plus.abs().max(mu_minus.abs());
    scale == 0.0 || (mu_plus - mu_minus) <= DEGENERACY_TOL * scale
}

/// Spectrum of the accumulated `G_{t_f}` of a propagation.
pub fn generator(result: &PropagationResult, schedule: &HamiltonianSchedule) -> Result<GeneratorSpectrum> {
    generator_with(result, schedule, QfiConvention::default())
}

pub fn generator_with(
    result: &PropagationResult,
    schedule: &HamiltonianSchedule,
    convention: QfiConvention,
) -> Result<GeneratorSpectrum> {
    if result.n_sites != schedule.n_sites {
        return Err(Error::GridMismatch(format!(
            "result has {} sites, schedule has {}",
            result.n_sites, schedule.n_sites
        )));
    }
    if result.lambda != schedule.lambda {
        return Err(Error::GridMismatch(format!(
            "result was propagated at lambda = {}, schedule has {}",
            result.lambda, schedule.lambda
        )));
    }
    let g = result
        .generator
        .clone()
        .ok_or_else(|| Error::GridMismatch("propagation did not accumulate the generator".into()))?;
    GeneratorSpectrum::from_matrix(g, convention)
}

/// `conv·Var_ψ(G)`.
pub fn qfi(spec: &GeneratorSpectrum, state: &CVector) -> Result<f64> {
    if state.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: state.len(),
        });
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    let gpsi = &spec.g * state;
    let mean = state.dotc(&gpsi).re;
    let second = gpsi.norm_squared();
    Ok(spec.convention.factor() * (second - mean * mean).max(0.0))
}

/// Equal superposition of the extremal eigenvectors and its QFI.
pub fn optimal_initial_state(spec: &GeneratorSpectrum) -> Result<(CVector, f64)> {
    match &spec.optimal_state {
        Some(s) => Ok((s.clone(), spec.max_qfi())),
        None => Err(Error::DegenerateGenerator { spread: spec.spread() }),
    }
}

/// Largest QFI any control could reach: `conv·(∫ spread(∂λH) dτ)²/4`.
pub fn unrestricted_bound(result: &PropagationResult, convention: QfiConvention) -> f64 {
    convention.factor() * result.sensing_spread_integral.powi(2) / 4.0
}

/// `qfi / unrestricted_bound`, with `0/0 = 1`.
pub fn normalized_ratio(qfi: f64, bound: f64) -> f64 {
    if bound == 0.0 {
        if qfi == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        qfi / bound
    }
}

pub fn default_dlambda(lambda: f64) -> f64 {
    1e-5 * lambda.abs().max(1.0)
}

/// `i·U†(t_f)·[U(λ+dλ/2) − U(λ−dλ/2)]/dλ`, Hermitian part. Cross-check for
/// [`generator`].
pub fn generator_by_derivative(
    schedule: &HamiltonianSchedule,
    t_f: f64,
    steps: usize,
    dlambda: f64,
) -> Result<CMatrix> {
    generator_by_derivative_with(schedule, t_f, steps, dlambda, &PropagateOptions::default())
}

pub fn generator_by_derivative_with(
    schedule: &HamiltonianSchedule,
    t_f: f64,
    steps: usize,
    dlambda: f64,
    opts: &PropagateOptions,
) -> Result<CMatrix> {
    if !dlambda.is_finite() || dlambda <= 0.0 {
        return Err(Error::InvalidConfiguration(format!(
            "dlambda must be positive, got {dlambda}"
        )));
    }
    let opts = PropagateOptions {
        storage: super::propagate::Storage::Endpoints,
        generator: false,
        ..opts.clone()
    };
    let at = |l: f64| -> Result<CMatrix> {
        let r = propagate_with(&schedule.with_lambda(l), t_f, steps, &opts)?;
        Ok(r.final_unitary().clone())
    };
    let lambda = schedule.lambda;
    let u = at(lambda)?;
    let up = at(lambda + 0.5 * dlambda)?;
    let um = at(lambda - 0.5 * dlambda)?;
    let du = (up - um) * Complex64::new(0.0, 1.0 / dlambda);
    Ok(hermitian_part(&adjoint_mul(&u, &du)))
}
