//! Run configuration: one TOML file per run. Site and qubit labels are
//! 1-based, as in the figures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Chain,
    Fmo,
    Custom,
    EprFixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureName {
    Weight,
    Robustness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub units: String,
}

impl GridSpec {
    /// `start + i·step` for `i = 0, 1, …` up to `stop` (inclusive, with a
    /// small allowance for rounding in `(stop − start)/step`).
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub j12: f64,
    pub j23: f64,
    /// One series group per value.
    pub gamma: Vec<f64>,
    /// Initial basis state, one digit per qubit.
    pub initial: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FmoSection {
    /// Informational; the rates below are what enter the model.
    pub temperature_k: f64,
    pub gamma_dp_cm: f64,
    pub gamma_sink_cm: f64,
    pub reaction_center: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EprState {
    /// `|Φ⁺⟩`; the visibility is ignored.
    Bell,
    /// `v·|Φ⁺⟩⟨Φ⁺| + (1 − v)·I/4`
    Werner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EprSection {
    pub state: EprState,
    pub visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub a: usize,
    pub b: usize,
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dephasing {
    pub site: usize,
    pub rate: f64,
}

/// XY exchange network of qubits with σz dephasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSection {
    pub sites: usize,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
    #[serde(default)]
    pub dephasing: Vec<Dephasing>,
    pub initial: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub scenario: ScenarioKind,
    pub measured: usize,
    pub targets: Vec<usize>,
    pub measures: Vec<MeasureName>,
    /// Evolve in the populated excitation sectors when possible.
    #[serde(default = "default_reduced")]
    pub reduced: bool,
    pub grid: GridSpec,
    /// Output directory; `--out` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Worker threads; `--workers` overrides it. Defaults to the number of
    /// available cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmo: Option<FmoSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epr: Option<EprSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSection>,
}

fn default_reduced() -> bool {
    true
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(invalid("name must be non-empty [A-Za-z0-9_-]"));
        }
        let g = &self.grid;
        if g.start != 0.0 {
            return Err(invalid("grid.start must be 0"));
        }
        if !(g.step > 0.0 && g.step.is_finite()) {
            return Err(invalid("grid.step must be positive"));
        }
        if !(g.stop >= g.start && g.stop.is_finite()) {
            return Err(invalid("grid.stop must be finite and >= grid.start"));
        }
        if self.targets.is_empty() {
            return Err(invalid("targets must not be empty"));
        }
        if self.measures.is_empty() {
            return Err(invalid("measures must not be empty"));
        }
        if self.measured == 0 || self.targets.contains(&0) {
            return Err(invalid("site labels are 1-based"));
        }
        let mut seen = self.targets.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.targets.len() {
            return Err(invalid("duplicate target"));
        }
        let present = [
            (ScenarioKind::Chain, self.chain.is_some()),
            (ScenarioKind::Fmo, self.fmo.is_some()),
            (ScenarioKind::EprFixture, self.epr.is_some()),
            (ScenarioKind::Custom, self.custom.is_some()),
        ];
        for (kind, has) in present {
            if (kind == self.scenario) != has {
                return Err(invalid(format!(
                    "scenario {:?} needs exactly its own parameter section",
                    self.scenario
                )));
            }
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        if let Some(epr) = &self.epr {
            if !(0.0..=1.0).contains(&epr.visibility) {
                return Err(invalid("epr.visibility must lie in [0, 1]"));
            }
        }
        if let Some(chain) = &self.chain {
            if chain.gamma.is_empty() {
                return Err(invalid("chain.gamma must list at least one rate"));
            }
        }
        Ok(())
    }
}
