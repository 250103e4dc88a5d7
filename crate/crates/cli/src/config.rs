//! Scenario files (JSON).

use std::path::{Path, PathBuf};

use qsplit_core::ledger::LedgerMode;
use qsplit_core::Tolerances;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: LedgerMode,
    pub model: ModelSpec,
    pub initial_state: InitialState,
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `H_S = (omega_s/2) sz`, `H_E = (omega_e/2) sz`,
    /// `H_I = g (s+ ⊗ s- + s- ⊗ s+)`.
    TwoQubitExchange {
        g: f64,
        #[serde(default = "one")]
        omega_s: f64,
        #[serde(default = "one")]
        omega_e: f64,
    },
    /// Two-level atom and a cavity truncated at `n_max` photons.
    #[serde(alias = "jaynes-cummings")]
    JaynesCummingsTruncated {
        g: f64,
        n_max: usize,
        #[serde(default = "one")]
        omega_atom: f64,
        #[serde(default = "one")]
        omega_cavity: f64,
    },
    RandomHermitian {
        seed: u64,
        d_s: usize,
        d_e: usize,
        /// Interaction scale relative to the free parts.
        strength: f64,
    },
    /// Paths are relative to the scenario file.
    ExplicitMatrices {
        h_s: PathBuf,
        h_e: PathBuf,
        h_i: PathBuf,
    },
    /// Closed mode only: `H(t) = (omega/2) sz + amplitude cos(frequency t) sx`.
    DrivenQubit {
        #[serde(default = "one")]
        omega: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// Closed mode only: `H(t) = h0 + cos(frequency t + phase) h1`.
    DrivenExplicit {
        h0: PathBuf,
        h1: PathBuf,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl ModelSpec {
    pub fn is_driven(&self) -> bool {
        matches!(self, ModelSpec::DrivenQubit { .. } | ModelSpec::DrivenExplicit { .. })
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// Computational basis product state: one digit per factor (`"01"`) or
    /// comma-separated indices (`"0,3"`). A single index addresses the whole
    /// space in closed mode.
    #[serde(alias = "computational-basis")]
    Basis { label: String },
    /// `(|01> + |10>)/sqrt 2` on two qubits.
    Bell,
    ProductOfThermal { beta_s: f64, beta_e: f64 },
    /// Gibbs state of the full Hamiltonian at the initial time.
    Thermal { beta: f64 },
    /// Random full-rank marginals with a correlation of relative size
    /// `correlation` in `[0, 1)`.
    Random {
        seed: u64,
        #[serde(default)]
        correlation: f64,
    },
    Explicit { file: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_dt() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// A parsed scenario together with the directory its relative paths refer to.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub path: PathBuf,
    pub base_dir: PathBuf,
    pub config: ScenarioConfig,
}

impl LoadedScenario {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Internally tagged enums are buffered before they are deserialized, so an
/// error inside one only carries the enum's own path. Find the offending key
/// by dropping one key at a time.
fn culprit<T: DeserializeOwned>(object: &Value) -> Option<String> {
    let map = object.as_object()?;
    map.keys().filter(|k| *k != "type").find_map(|k| {
        let mut trimmed = map.clone();
        trimmed.remove(k);
        match T::deserialize(Value::Object(trimmed)) {
            Ok(_) => Some(k.clone()),
            Err(e) if e.to_string().contains(&format!("missing field `{k}`")) => Some(k.clone()),
            Err(_) => None,
        }
    })
}

fn refine_field(text: &str, field: String) -> String {
    let Ok(doc) = serde_json::from_str::<Value>(text) else {
        return field;
    };
    let key = match field.as_str() {
        "model" => culprit::<ModelSpec>(&doc["model"]),
        "initial_state" => culprit::<InitialState>(&doc["initial_state"]),
        _ => None,
    };
    match key {
        Some(k) => format!("{field}.{k}"),
        None => field,
    }
}

pub fn parse(text: &str, path: &Path) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = refine_field(text, e.path().to_string());
        let inner = e.into_inner();
        CliError::config(path, field, inner.to_string())
    })?;
    validate(&config, path)?;
    Ok(config)
}

pub fn load(path: &Path) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config = parse(&text, path)?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedScenario {
        path: path.to_path_buf(),
        base_dir,
        config,
    })
}

fn positive(path: &Path, field: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, field, format!("must be > 0, got {value}")))
    }
}

fn finite(path: &Path, field: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, field, format!("must be finite, got {value}")))
    }
}

/// Semantic checks that the schema cannot express.
pub fn validate(c: &ScenarioConfig, path: &Path) -> Result<()> {
    if c.name.trim().is_empty() {
        return Err(CliError::config(path, "name", "must not be empty"));
    }
    positive(path, "grid.dt", c.grid.dt)?;
    finite(path, "grid.t0", c.grid.t0)?;
    finite(path, "grid.t1", c.grid.t1)?;
    if c.grid.t1 <= c.grid.t0 {
        return Err(CliError::config(
            path,
            "grid.t1",
            format!("must exceed grid.t0 = {}, got {}", c.grid.t0, c.grid.t1),
        ));
    }
    positive(path, "tolerances.degeneracy", c.tolerances.degeneracy)?;
    positive(path, "tolerances.rank", c.tolerances.rank)?;
    positive(path, "tolerances.hermiticity", c.tolerances.hermiticity)?;
    match &c.model {
        ModelSpec::TwoQubitExchange { g, omega_s, omega_e } => {
            finite(path, "model.g", *g)?;
            finite(path, "model.omega_s", *omega_s)?;
            finite(path, "model.omega_e", *omega_e)?;
        }
        ModelSpec::JaynesCummingsTruncated {
            g,
            n_max,
            omega_atom,
            omega_cavity,
        } => {
            finite(path, "model.g", *g)?;
            finite(path, "model.omega_atom", *omega_atom)?;
            finite(path, "model.omega_cavity", *omega_cavity)?;
            if *n_max == 0 || *n_max > 127 {
                return Err(CliError::config(path, "model.n_max", "must be in 1..=127"));
            }
        }
        ModelSpec::RandomHermitian { d_s, d_e, strength, .. } => {
            for (field, d) in [("model.d_s", d_s), ("model.d_e", d_e)] {
                if *d == 0 || *d > 16 {
                    return Err(CliError::config(path, field, "must be in 1..=16"));
                }
            }
            finite(path, "model.strength", *strength)?;
        }
        ModelSpec::DrivenQubit {
            omega,
            amplitude,
            frequency,
        } => {
            finite(path, "model.omega", *omega)?;
            finite(path, "model.amplitude", *amplitude)?;
            finite(path, "model.frequency", *frequency)?;
        }
        ModelSpec::DrivenExplicit { frequency, phase, .. } => {
            finite(path, "model.frequency", *frequency)?;
            finite(path, "model.phase", *phase)?;
        }
        ModelSpec::ExplicitMatrices { .. } => {}
    }
    if c.mode == LedgerMode::OpenSubsystem && c.model.is_driven() {
        return Err(CliError::config(
            path,
            "model.type",
            "driven models are closed systems; use mode \"closed-driven\"",
        ));
    }
    match &c.initial_state {
        InitialState::ProductOfThermal { beta_s, beta_e } => {
            finite(path, "initial_state.beta_s", *beta_s)?;
            finite(path, "initial_state.beta_e", *beta_e)?;
            if c.model.is_driven() {
                return Err(CliError::config(
                    path,
                    "initial_state.type",
                    "product-of-thermal needs a bipartite model",
                ));
            }
        }
        InitialState::Thermal { beta } => finite(path, "initial_state.beta", *beta)?,
        InitialState::Random { correlation, .. } => {
            if !(0.0..1.0).contains(correlation) {
                return Err(CliError::config(
                    path,
                    "initial_state.correlation",
                    format!("must be in [0, 1), got {correlation}"),
                ));
            }
        }
        InitialState::Basis { label } if label.trim().is_empty() => {
            return Err(CliError::config(path, "initial_state.label", "must not be empty"));
        }
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXCHANGE: &str = r#"{
        "name": "exchange",
        "mode": "open-subsystem",
        "model": { "type": "two-qubit-exchange", "g": 1.0 },
        "initial_state": { "type": "basis", "label": "01" },
        "grid": { "t0": 0.0, "t1": 10.0, "dt": 0.001 }
    }"#;

    #[test]
    fn parses_minimal_scenario() {
        let c = parse(EXCHANGE, Path::new("s.json")).unwrap();
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(
            c.model,
            ModelSpec::TwoQubitExchange {
                g: 1.0,
                omega_s: 1.0,
                omega_e: 1.0
            }
        );
    }

    #[test]
    fn bad_dt_names_the_field() {
        let text = EXCHANGE.replace("\"dt\": 0.001", "\"dt\": -0.1");
        let e = parse(&text, Path::new("s.json")).unwrap_err();
        assert!(e.to_string().contains("grid.dt"), "{e}");
        let text = EXCHANGE.replace("\"dt\": 0.001", "\"dt\": \"small\"");
        let e = parse(&text, Path::new("s.json")).unwrap_err();
        assert!(e.to_string().contains("grid.dt"), "{e}");
        assert!(e.to_string().contains("line"), "{e}");
        let text = EXCHANGE.replace("\"g\": 1.0", "\"g\": \"strong\"");
        let e = parse(&text, Path::new("s.json")).unwrap_err();
        assert!(e.to_string().contains("model.g"), "{e}");
        let text = EXCHANGE.replace("\"label\": \"01\"", "\"label\": 1");
        let e = parse(&text, Path::new("s.json")).unwrap_err();
        assert!(e.to_string().contains("initial_state.label"), "{e}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = EXCHANGE.replace("\"g\": 1.0", "\"g\": 1.0, \"gamma\": 2");
        let e = parse(&text, Path::new("s.json")).unwrap_err();
        assert!(e.to_string().contains("model"), "{e}");
    }

    #[test]
    fn driven_model_needs_closed_mode() {
        let text = EXCHANGE.replace(
            r#"{ "type": "two-qubit-exchange", "g": 1.0 }"#,
            r#"{ "type": "driven-qubit", "amplitude": 0.5, "frequency": 0.7 }"#,
        );
        let e = parse(&text, Path::new("s.json")).unwrap_err();
        assert!(e.to_string().contains("model.type"), "{e}");
    }
}
