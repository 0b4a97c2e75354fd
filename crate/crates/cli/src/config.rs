//! Scenario files: TOML with `[system]`, `[control]` and `[grid]` sections.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Qubit,
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Equal superposition of the extremal eigenvectors of the generator.
    #[default]
    Optimal,
    /// `(|0…0⟩ + |1…1⟩)/√2`
    Ghz,
    /// `|+⟩^⊗n`
    Plus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub kind: SystemKind,
    #[serde(default = "one_site")]
    pub n: usize,
    #[serde(default = "unit")]
    pub lambda: f64,
    #[serde(default = "unit")]
    pub delta: f64,
    #[serde(default)]
    pub j: f64,
    #[serde(default = "periodic")]
    pub bc: String,
    #[serde(default)]
    pub initial_state: InitialState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    #[default]
    None,
    PangJordan,
    Restricted,
    Floquet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    #[serde(default)]
    pub kind: ControlKind,
    /// Pauli labels such as `"Y0"` or `"X0 X1"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<String>>,
    /// `single_site` or `local_two_body`, used when `basis` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradcheck_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradcheck_perturbation: Option<f64>,
    /// Drive frequency; matched to the amplitudes when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Number of harmonics when amplitudes are derived from `omega`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonics: Option<usize>,
    /// `c^y_l` (qubit) or `c^{xy}_l` (chain).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first: Option<Vec<f64>>,
    /// `c̃^z_l` (qubit) or `c̃^{zx}_l` (chain).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second: Option<Vec<f64>>,
    /// Cancel non-commuting one- and two-body static terms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counter_control: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_f: Option<Vec<f64>>,
    /// Probe times in drive periods (Floquet scenarios).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
    /// Fixed step count for every point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_unit_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_period: Option<usize>,
    /// Chain sizes for `sweep-n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow_undersampled: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "var")]
    pub qfi_convention: String,
    /// Marks runs that take minutes rather than seconds.
    #[serde(default)]
    pub long_running: bool,
    pub system: SystemSpec,
    #[serde(default)]
    pub control: ControlSpec,
    #[serde(default)]
    pub grid: GridSpec,
}

fn one_site() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn periodic() -> String {
    "periodic".into()
}

fn var() -> String {
    "var".into()
}

pub const DEFAULT_STEPS_PER_PERIOD: usize = 200;
pub const DEFAULT_STEPS_PER_UNIT_TIME: f64 = 50.0;

impl Scenario {
    pub fn from_toml(text: &str) -> CliResult<Scenario> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`, applies `key=value` overrides and validates.
    pub fn load(path: &Path, overrides: &[String]) -> CliResult<(Scenario, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text_with(&text, overrides)
    }

    /// Returns the scenario and the canonical text it hashes to.
    pub fn from_text_with(text: &str, overrides: &[String]) -> CliResult<(Scenario, String)> {
        let mut value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let s: Scenario = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        s.validate()?;
        let canonical = s.to_toml()?;
        Ok((s, canonical))
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let sys = &self.system;
        for (name, v) in [("lambda", sys.lambda), ("delta", sys.delta), ("j", sys.j)] {
            if !v.is_finite() {
                return bad(format!("system.{name} must be finite"));
            }
        }
        if sys.kind == SystemKind::Qubit && sys.n != 1 {
            return bad(format!("a qubit has n = 1, got {}", sys.n));
        }
        if !matches!(sys.bc.as_str(), "periodic" | "open") {
            return bad(format!("system.bc must be periodic or open, got {:?}", sys.bc));
        }
        if !matches!(self.qfi_convention.as_str(), "var" | "four_var") {
            return bad(format!(
                "qfi_convention must be var or four_var, got {:?}",
                self.qfi_convention
            ));
        }
        let g = &self.grid;
        if g.t_f.is_some() && g.periods.is_some() {
            return bad("grid takes t_f or periods, not both".into());
        }
        for (name, list) in [("t_f", &g.t_f), ("periods", &g.periods)] {
            if let Some(v) = list {
                check_ascending(name, v)?;
            }
        }
        if let Some(n) = &g.n {
            let f: Vec<f64> = n.iter().map(|&x| x as f64).collect();
            check_ascending("n", &f)?;
        }
        if g.periods.is_some() && self.control.kind != ControlKind::Floquet {
            return bad("grid.periods needs a floquet control".into());
        }
        if let Some(spu) = g.steps_per_unit_time {
            if !(spu.is_finite() && spu > 0.0) {
                return bad("grid.steps_per_unit_time must be positive".into());
            }
        }
        let c = &self.control;
        for (name, v) in [
            ("omega", c.omega),
            ("init_amplitude", c.init_amplitude),
            ("initial_step", c.initial_step),
            ("convergence_tolerance", c.convergence_tolerance),
            ("gradcheck_perturbation", c.gradcheck_perturbation),
        ] {
            if v.is_some_and(|x| !x.is_finite()) {
                return bad(format!("control.{name} must be finite"));
            }
        }
        for (name, v) in [("first", &c.first), ("second", &c.second)] {
            if v.as_ref().is_some_and(|x| x.iter().any(|a| !a.is_finite())) {
                return bad(format!("control.{name} must be finite"));
            }
        }
        Ok(())
    }

    /// Probe times, or an error naming the missing key.
    pub fn times(&self) -> CliResult<Vec<f64>> {
        match (&self.grid.t_f, &self.grid.periods) {
            (Some(t), None) => Ok(t.clone()),
            (None, Some(p)) => Ok(p.clone()),
            _ => Err(CliError::Config("grid needs t_f or periods".into())),
        }
    }
}

fn check_ascending(name: &str, v: &[f64]) -> CliResult<()> {
    if v.is_empty() {
        return Err(CliError::Config(format!("grid.{name} is empty")));
    }
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(CliError::Config(format!("grid.{name} must be finite and non-negative")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!("grid.{name} must be strictly ascending")));
    }
    Ok(())
}

/// `a.b.c=value`; the value is read as TOML, falling back to a bare string.
fn apply_override(root: &mut toml::Table, spec: &str) -> CliResult<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {spec:?} is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad override key {path:?}")));
    }
    let value = parse_value(raw.trim());
    let mut table = root;
    for k in &keys[..keys.len() - 1] {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override key {k:?} is not a section")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}
