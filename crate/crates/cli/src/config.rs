//! Fully resolved run configurations. Every subcommand is turned into a
//! [`RunConfig`] before anything is computed; the same value is written to
//! `run.json` and can be fed back with `kuramoto run --config run.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use kuramoto_core::dynamics::SimulationConfig;
use kuramoto_core::ensemble::{SampleTemplate, SamplingStrategy};
use kuramoto_core::sweep::SweepPlan;
use kuramoto_core::topology::{RingIndex, TopologySpec};

pub const RUN_FILE: &str = "run.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSettings {
    #[serde(default)]
    pub fingerprints: bool,
    #[serde(default = "default_freq_tol")]
    pub freq_tol: f64,
    #[serde(default = "default_attractor_tol")]
    pub attractor_tol: f64,
}

fn default_freq_tol() -> f64 {
    kuramoto_core::observables::DEFAULT_FREQ_TOL
}

fn default_attractor_tol() -> f64 {
    kuramoto_core::observables::DEFAULT_ATTRACTOR_TOL
}

fn default_phase_stride() -> usize {
    10
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        EnsembleSettings {
            fingerprints: false,
            freq_tol: default_freq_tol(),
            attractor_tol: default_attractor_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanMode {
    /// Each unit in turn switched to this frequency.
    OmegaNew(f64),
    /// Each unit shifted by each of these amounts; must include 0.
    DeltaOmega(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunConfig {
    Simulate {
        topology: TopologySpec,
        freq_seed: u64,
        ic_seed: u64,
        sim: SimulationConfig,
        #[serde(default = "default_phase_stride")]
        phase_stride: usize,
    },
    Ensemble {
        template: SampleTemplate,
        strategy: SamplingStrategy,
        sim: SimulationConfig,
        #[serde(default)]
        settings: EnsembleSettings,
    },
    Sweep {
        plan: SweepPlan,
    },
    Scan {
        template: SampleTemplate,
        sim: SimulationConfig,
        mode: ScanMode,
        /// 1-based units; all units when absent.
        #[serde(default)]
        units: Option<Vec<usize>>,
    },
    Cross {
        template: SampleTemplate,
        shuffles: usize,
        networks: usize,
        base_seed: u64,
        sim: SimulationConfig,
    },
}

/// What gets written to `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn new(config: RunConfig) -> Self {
        RunManifest {
            tool: "kuramoto".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<kuramoto_core::Error> for ConfigError {
    fn from(e: kuramoto_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

/// Reads a config file holding either a bare [`RunConfig`] or a
/// [`RunManifest`]. Errors carry the line and column serde reports.
pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let parsed = if value.get("config").is_some() {
        serde_json::from_str::<RunManifest>(&text).map(|m| m.config)
    } else {
        serde_json::from_str::<RunConfig>(&text)
    };
    parsed.map_err(|e| ConfigError(format!("{}: {}", path.display(), locate(&text, &e))))
}

/// Tagged enums are buffered by serde, which drops the position; recover it
/// for unknown keys by finding the key in the source.
fn locate(text: &str, err: &serde_json::Error) -> String {
    let msg = err.to_string();
    if err.line() != 0 {
        return msg;
    }
    let key = msg
        .strip_prefix("unknown field `")
        .and_then(|rest| rest.split('`').next());
    let Some(offset) = key.and_then(|k| text.find(&format!("\"{k}\""))) else {
        return msg;
    };
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    format!("{msg} at line {line} column {column}")
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            RunConfig::Simulate {
                topology,
                sim,
                phase_stride,
                ..
            } => {
                topology.build()?;
                sim.validate()?;
                if *phase_stride == 0 {
                    return Err(ConfigError("phase_stride must be at least 1".into()));
                }
            }
            RunConfig::Ensemble {
                template,
                strategy,
                sim,
                settings,
            } => {
                template.topology.build()?;
                strategy.validate(template)?;
                sim.validate()?;
                if !(settings.freq_tol > 0.0) || !(settings.attractor_tol > 0.0) {
                    return Err(ConfigError("tolerances must be positive".into()));
                }
            }
            RunConfig::Sweep { plan } => plan.validate()?,
            RunConfig::Scan {
                template,
                sim,
                mode,
                units,
            } => {
                template.topology.build()?;
                sim.validate()?;
                if let ScanMode::DeltaOmega(d) = mode {
                    if !d.contains(&0.0) {
                        return Err(ConfigError("delta_omega list must contain 0".into()));
                    }
                }
                if let Some(units) = units {
                    for &u in units {
                        RingIndex::new(u, template.n())?;
                    }
                }
            }
            RunConfig::Cross {
                template,
                shuffles,
                networks,
                sim,
                ..
            } => {
                if !matches!(template.topology, TopologySpec::Ws { .. }) {
                    return Err(ConfigError("cross needs a Watts-Strogatz topology".into()));
                }
                if *shuffles == 0 || *networks == 0 {
                    return Err(ConfigError("cross needs at least one shuffle and one network".into()));
                }
                template.topology.build()?;
                sim.validate()?;
            }
        }
        Ok(())
    }
}
