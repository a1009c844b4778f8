//! Experiment configuration files.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::dfs::LogicalRegister;
use crate::gates::GateParams;
use crate::noise::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Four Bell states from the logical basis states.
    Bell,
    /// Process tomography of the compiled CNOT.
    CnotTomo,
    /// Logical versus single-ion coherence under collective dephasing.
    Coherence,
    /// Timing-error scan of the MS gate with explicit motion.
    MsScan,
    /// Timing-error scan of the conditional phase gate with explicit motion.
    CpScan,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Bell => "bell",
            ExperimentKind::CnotTomo => "cnot-tomo",
            ExperimentKind::Coherence => "coherence",
            ExperimentKind::MsScan => "ms-scan",
            ExperimentKind::CpScan => "cp-scan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct CoherenceOptions {
    /// Std of the collective phase, radians.
    pub phi_std: f64,
    pub samples: usize,
}

impl Default for CoherenceOptions {
    fn default() -> Self {
        Self {
            phi_std: PI,
            samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ScanOptions {
    /// Relative gate-time errors, each in (-0.5, 0.5).
    pub fractions: Vec<f64>,
    /// `theta` of `exp(-i theta S^2)`; defaults to pi/8 (MS) or pi/16 (CP).
    pub theta: Option<f64>,
    pub steps_per_loop: usize,
    pub n_fock: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            fractions: (-10..=10).map(|k| k as f64 / 100.0).collect(),
            theta: None,
            steps_per_loop: crate::motion::DEFAULT_STEPS,
            n_fock: 24,
        }
    }
}

fn default_register() -> LogicalRegister {
    LogicalRegister::linear(2)
}

fn default_shots() -> u64 {
    100
}

fn default_haar() -> usize {
    200_000
}

fn default_output() -> PathBuf {
    PathBuf::from("dfsqc-out")
}

fn default_target() -> usize {
    1
}

/// One experiment run. Relative output paths resolve against the directory
/// holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_register")]
    pub register: LogicalRegister,
    #[serde(default)]
    pub gate_params: GateParams,
    /// Omitted means noiseless.
    #[serde(default = "NoiseModel::noiseless")]
    pub noise: NoiseModel,
    /// Readouts per tomography setting.
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Use infinite-shot frequencies instead of sampled counts.
    #[serde(default)]
    pub exact_statistics: bool,
    #[serde(default = "default_haar")]
    pub n_haar_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Logical control qubit.
    #[serde(default)]
    pub control: usize,
    /// Logical target qubit.
    #[serde(default = "default_target")]
    pub target: usize,
    #[serde(default)]
    pub coherence: CoherenceOptions,
    #[serde(default)]
    pub scan: ScanOptions,
}

/// Why a config was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted path of the offending field, empty for the document root.
    pub field: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "line {l}, column {c}: ")?;
        }
        if !self.field.is_empty() {
            write!(f, "field `{}`: ", self.field)?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

fn semantic(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        line: None,
        column: None,
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the field path and, for syntax
    /// and type errors, the position in the file.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            let field = if field == "." { String::new() } else { field };
            // serde_json appends "at line L column C"; keep the bare message
            let full = inner.to_string();
            let message = match full.rfind(" at line ") {
                Some(pos) => full[..pos].to_string(),
                None => full,
            };
            ConfigError {
                field,
                line: Some(inner.line()),
                column: Some(inner.column()),
                message,
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.register
            .validate()
            .map_err(|e| semantic("register", e.to_string()))?;
        self.gate_params
            .validate()
            .map_err(|e| semantic("gate_params", e.to_string()))?;
        self.noise.validate().map_err(|e| semantic("noise", e.to_string()))?;
        if self.shots == 0 {
            return Err(semantic("shots", "must be >= 1"));
        }
        let n = self.register.n_logical();
        for (name, q) in [("control", self.control), ("target", self.target)] {
            if q >= n {
                return Err(semantic(name, format!("logical qubit {q} outside a register of {n}")));
            }
        }
        match self.experiment {
            ExperimentKind::Bell | ExperimentKind::CnotTomo => {
                if n != 2 {
                    return Err(semantic("register", "this experiment needs exactly two logical qubits"));
                }
                if self.control == self.target {
                    return Err(semantic("target", "control and target coincide"));
                }
                if self.experiment == ExperimentKind::CnotTomo
                    && self.n_haar_samples < crate::tomography::MIN_HAAR_SAMPLES
                {
                    return Err(semantic(
                        "n_haar_samples",
                        format!("must be >= {}", crate::tomography::MIN_HAAR_SAMPLES),
                    ));
                }
            }
            ExperimentKind::Coherence => {
                let c = &self.coherence;
                if !(c.phi_std >= 0.0 && c.phi_std.is_finite()) {
                    return Err(semantic("coherence.phi_std", "must be finite and >= 0"));
                }
                if c.samples < 1000 {
                    return Err(semantic("coherence.samples", "must be >= 1000"));
                }
            }
            ExperimentKind::MsScan | ExperimentKind::CpScan => {
                let s = &self.scan;
                if s.fractions.is_empty() {
                    return Err(semantic("scan.fractions", "must not be empty"));
                }
                if let Some(f) = s.fractions.iter().find(|f| !(**f > -0.5 && **f < 0.5)) {
                    return Err(semantic("scan.fractions", format!("{f} outside (-0.5, 0.5)")));
                }
                if let Some(t) = s.theta {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(semantic("scan.theta", "must be positive"));
                    }
                }
                if s.steps_per_loop < 400 {
                    return Err(semantic("scan.steps_per_loop", "must be >= 400"));
                }
                if s.n_fock < 8 || s.n_fock > 200 {
                    return Err(semantic("scan.n_fock", "must lie in [8, 200]"));
                }
            }
        }
        Ok(())
    }
}

/// JSON schema of [`ExperimentConfig`], pretty printed with a trailing
/// newline.
pub fn config_schema() -> String {
    let schema = schemars::schema_for!(ExperimentConfig);
    let mut s = serde_json::to_string_pretty(&schema).expect("schema serializes");
    s.push('\n');
    s
}
