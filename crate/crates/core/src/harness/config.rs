//! Experiment and sweep configuration: a declarative JSON document, named
//! presets, and field-by-field overrides via deep merge.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::benchmarks::TaskKind;
use crate::error::{Error, Result};
use crate::hamiltonians::{DrivenTfimSpec, TfimSpec};
use crate::ipc::IpcBudget;
use crate::protocols::{ClockConfig, ProtocolConfig, ProtocolKind};
use crate::readout::NoiseSpec;

/// Reservoir substrate selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum HamiltonianProfile {
    /// Transverse-field Ising reservoir for the state-reset protocols.
    Tfim(TfimSpec),
    /// Hopping reservoir with an input-driven term, for the dissipative
    /// protocol.
    Driven(DrivenTfimSpec),
}

impl HamiltonianProfile {
    pub fn n_sites(&self) -> usize {
        match self {
            Self::Tfim(s) => s.n_sites,
            Self::Driven(s) => s.n_sites,
        }
    }
}

/// One experiment: a protocol on an ensemble of sampled reservoirs, scored
/// by capacity and optional benchmark tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub protocol: ProtocolConfig,
    pub hamiltonian: HamiltonianProfile,
    pub noise: NoiseSpec,
    pub ipc: IpcBudget,
    /// Benchmark tasks to score alongside the capacity run.
    #[serde(default)]
    pub tasks: Vec<TaskKind>,
    /// Training samples (rows retained after washout for the capacity run,
    /// and training rows for tasks).
    pub n_train: usize,
    /// Held-out task samples.
    pub n_test: usize,
    /// Diagnostic Tikhonov penalty for all readout fits; 0 (the default)
    /// keeps the plain pseudoinverse with shot noise as the only
    /// regularizer.
    #[serde(default)]
    pub ridge: f64,
    pub master_seed: u64,
    pub n_hamiltonians: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.protocol.clock.validate()?;
        self.ipc.validate()?;
        if self.n_hamiltonians == 0 {
            return Err(Error::InvalidConfig("n_hamiltonians must be >= 1".into()));
        }
        if self.n_train == 0 {
            return Err(Error::InvalidConfig("n_train must be >= 1".into()));
        }
        if !self.tasks.is_empty() && self.n_test == 0 {
            return Err(Error::InvalidConfig(
                "tasks requested but n_test is 0".into(),
            ));
        }
        if !self.ridge.is_finite() || self.ridge < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "ridge must be finite and nonnegative, got {}",
                self.ridge
            )));
        }
        match (&self.protocol.kind, &self.hamiltonian) {
            (ProtocolKind::Dsp { .. }, HamiltonianProfile::Driven(_)) => {}
            (ProtocolKind::Dsp { .. }, _) => {
                return Err(Error::InvalidConfig(
                    "the dissipative protocol needs the driven Hamiltonian profile".into(),
                ));
            }
            (_, HamiltonianProfile::Driven(_)) => {
                return Err(Error::InvalidConfig(
                    "state-reset protocols need the tfim Hamiltonian profile".into(),
                ));
            }
            _ => {}
        }
        match self.protocol.kind {
            ProtocolKind::Mrp { reset_length } if reset_length == 0 => {
                return Err(Error::InvalidConfig("reset_length must be >= 1".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// 16-hex-character digest of the serialized config; stable across
    /// platforms because serialization order is the declaration order.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialization cannot fail");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Named starting points covering the protocol families. Desk-scale presets
/// keep ensemble sizes and sample counts small enough for a workstation;
/// `-full` variants use publication-scale numbers.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let reset_clock = ClockConfig {
        cycle_time: 50.0,
        n_virtual: 30,
    };
    let base = ExperimentConfig {
        protocol: ProtocolConfig {
            kind: ProtocolKind::Frp,
            clock: reset_clock,
            washout: 1000,
            validate_substates: false,
        },
        hamiltonian: HamiltonianProfile::Tfim(TfimSpec::default()),
        noise: NoiseSpec::default(),
        ipc: IpcBudget::default(),
        tasks: vec![],
        n_train: 20_000,
        n_test: 2_000,
        ridge: 0.0,
        master_seed: 0,
        n_hamiltonians: 5,
    };
    let (root, full) = match name.strip_suffix("-full") {
        Some(root) => (root, true),
        None => (name, false),
    };
    let mut config = match root {
        "frp-default" => base,
        // MRP self-initializes every step, so no washout is needed.
        "mrp" => ExperimentConfig {
            protocol: ProtocolConfig {
                kind: ProtocolKind::Mrp { reset_length: 7 },
                washout: 0,
                ..base.protocol
            },
            tasks: vec![TaskKind::Lxz],
            ..base
        },
        "wmp" => ExperimentConfig {
            protocol: ProtocolConfig {
                kind: ProtocolKind::Wmp {
                    angle: 0.109,
                    backaction_per_subreadout: false,
                },
                ..base.protocol
            },
            ..base
        },
        "chaos" => ExperimentConfig {
            hamiltonian: HamiltonianProfile::Tfim(TfimSpec {
                j_low: -1.0,
                j_high: 1.0,
                normalize: false,
                ..TfimSpec::default()
            }),
            tasks: vec![TaskKind::Lxx, TaskKind::Lxz, TaskKind::Mg],
            n_hamiltonians: 10,
            ..base
        },
        "dsp" => ExperimentConfig {
            protocol: ProtocolConfig {
                kind: ProtocolKind::Dsp {
                    gamma: 0.54,
                    steps_per_cycle: 200,
                },
                clock: ClockConfig {
                    cycle_time: 1.0,
                    n_virtual: 10,
                },
                washout: 1000,
                validate_substates: false,
            },
            hamiltonian: HamiltonianProfile::Driven(DrivenTfimSpec::default()),
            n_train: 10_000,
            n_test: 1_000,
            ..base
        },
        _ => return Err(Error::UnknownPreset(name.into())),
    };
    if full {
        config.n_train = 50_000;
        config.n_test = 5_000;
        config.n_hamiltonians = 100;
    }
    Ok(config)
}

pub const PRESET_NAMES: [&str; 5] = ["frp-default", "mrp", "wmp", "chaos", "dsp"];

/// Recursive JSON merge: objects merge key-by-key, everything else is
/// replaced by the override.
pub fn deep_merge(base: Value, over: Value) -> Value {
    match (base, over) {
        (Value::Object(mut b), Value::Object(o)) => {
            for (k, v) in o {
                let merged = match b.remove(&k) {
                    Some(existing) => deep_merge(existing, v),
                    None => v,
                };
                b.insert(k, merged);
            }
            Value::Object(b)
        }
        (_, over) => over,
    }
}

/// Builds a config from an optional preset name plus a partial JSON
/// override document. The document may itself name a preset under a
/// `"preset"` key; an explicit `preset_name` argument wins. Without any
/// preset the document must be complete.
pub fn resolve_config(preset_name: Option<&str>, document: Option<&Value>) -> Result<ExperimentConfig> {
    let mut doc = document.cloned().unwrap_or(Value::Object(Default::default()));
    let doc_preset = match &mut doc {
        Value::Object(map) => map.remove("preset"),
        _ => {
            return Err(Error::InvalidConfig(
                "config document must be a JSON object".into(),
            ));
        }
    };
    let doc_preset = match doc_preset {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "\"preset\" must be a string, got {other}"
            )));
        }
    };
    let chosen = preset_name.or(doc_preset.as_deref());
    let merged = match chosen {
        Some(name) => {
            let base = serde_json::to_value(preset(name)?).expect("preset serializes");
            deep_merge(base, doc)
        }
        None => doc,
    };
    let config: ExperimentConfig = serde_json::from_value(merged)
        .map_err(|e| Error::InvalidConfig(format!("config does not parse: {e}")))?;
    config.validate()?;
    Ok(config)
}

/// Which knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// MRP replay window r.
    ResetLength,
    /// WMP measurement angle.
    MeasurementStrength,
    /// TFIM transverse field h (swept with FRP).
    FieldStrength,
    /// DSP decay rate.
    DecayRate,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ResetLength => "reset_length",
            Self::MeasurementStrength => "measurement_strength",
            Self::FieldStrength => "field_strength",
            Self::DecayRate => "decay_rate",
        }
    }
}

/// A parameter grid over a base experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    pub base: ExperimentConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.grid.is_empty() {
            return Err(Error::Empty { what: "sweep grid" });
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("sweep grid has non-finite values".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "sweep grid must be strictly increasing".into(),
            ));
        }
        let kind_ok = matches!(
            (self.parameter, &self.base.protocol.kind),
            (SweepParameter::ResetLength, ProtocolKind::Mrp { .. })
                | (SweepParameter::MeasurementStrength, ProtocolKind::Wmp { .. })
                | (SweepParameter::FieldStrength, ProtocolKind::Frp)
                | (SweepParameter::DecayRate, ProtocolKind::Dsp { .. })
        );
        if !kind_ok {
            return Err(Error::InvalidConfig(format!(
                "parameter {} does not match the base protocol",
                self.parameter.name()
            )));
        }
        if self.parameter == SweepParameter::FieldStrength
            && !matches!(self.base.hamiltonian, HamiltonianProfile::Tfim(_))
        {
            return Err(Error::InvalidConfig(
                "field_strength sweeps need a tfim Hamiltonian".into(),
            ));
        }
        if self.parameter == SweepParameter::ResetLength {
            for &v in &self.grid {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "reset_length grid values must be positive integers, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The base config with the swept parameter set to `value`.
    pub fn config_at(&self, value: f64) -> Result<ExperimentConfig> {
        let mut config = self.base.clone();
        apply_parameter(&mut config, self.parameter, value)?;
        config.validate()?;
        Ok(config)
    }
}

/// Sets one swept parameter on a config.
pub fn apply_parameter(
    config: &mut ExperimentConfig,
    parameter: SweepParameter,
    value: f64,
) -> Result<()> {
    match (parameter, &mut config.protocol.kind) {
        (SweepParameter::ResetLength, ProtocolKind::Mrp { reset_length }) => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "reset_length must be a positive integer, got {value}"
                )));
            }
            *reset_length = value as usize;
        }
        (SweepParameter::MeasurementStrength, ProtocolKind::Wmp { angle, .. }) => {
            *angle = value;
        }
        (SweepParameter::DecayRate, ProtocolKind::Dsp { gamma, .. }) => {
            *gamma = value;
        }
        (SweepParameter::FieldStrength, ProtocolKind::Frp) => match &mut config.hamiltonian {
            HamiltonianProfile::Tfim(spec) => spec.h = value,
            _ => {
                return Err(Error::InvalidConfig(
                    "field_strength sweeps need a tfim Hamiltonian".into(),
                ));
            }
        },
        _ => {
            return Err(Error::InvalidConfig(format!(
                "parameter {} does not match the protocol",
                parameter.name()
            )));
        }
    }
    Ok(())
}
