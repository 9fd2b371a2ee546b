//! Frequency-domain model of a board power delivery network as an RLC
//! ladder running from the probe port to the die.
//!
//! Models are plain data loaded from TOML preset files (see
//! `presets/cw308-like.toml`); [`sim`] evaluates them and [`transform`]
//! derives process-varied, aged, and damaged variants.

pub mod sim;
pub mod transform;

use std::collections::HashSet;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rf::ReferenceImpedance;

pub use sim::{pdn_input_impedance, simulate_magnitude_trials, simulate_sweep, simulate_trials, NoiseSpec};
pub use transform::{apply_aging, apply_damage, sample_genuine, AgingSpec, VariationSpec};

#[derive(Debug, Error)]
pub enum PdnError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("capacitance drift {drift} reaches or exceeds 100%")]
    DriftOutOfRange { drift: f64 },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("model file: {0}")]
    Config(#[from] toml::de::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A series R + L (+ optional C) branch. Absent `c` means no capacitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlcBranch {
    /// Ohms.
    #[serde(default)]
    pub r: f64,
    /// Henries.
    #[serde(default)]
    pub l: f64,
    /// Farads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl RlcBranch {
    pub fn new(r: f64, l: f64, c: Option<f64>) -> Result<Self, PdnError> {
        let b = Self { r, l, c };
        b.validate("branch")?;
        Ok(b)
    }

    fn validate(&self, what: &str) -> Result<(), PdnError> {
        let bad = |m: String| Err(PdnError::InvalidModel(format!("{what}: {m}")));
        if !(self.r.is_finite() && self.r >= 0.0) {
            return bad(format!("resistance {} must be >= 0", self.r));
        }
        if !(self.l.is_finite() && self.l >= 0.0) {
            return bad(format!("inductance {} must be >= 0", self.l));
        }
        if let Some(c) = self.c {
            if !(c.is_finite() && c > 0.0) {
                return bad(format!("capacitance {c} must be > 0"));
            }
        }
        if self.r == 0.0 && self.l == 0.0 && self.c.is_none() {
            return bad("branch has no element".to_string());
        }
        Ok(())
    }

    /// `R + jωL + 1/(jωC)` at angular frequency `omega`.
    pub fn impedance(&self, omega: f64) -> Complex64 {
        let mut z = Complex64::new(self.r, omega * self.l);
        if let Some(c) = self.c {
            z += Complex64::new(0.0, -1.0 / (omega * c));
        }
        z
    }
}

/// One rung of the ladder: an optional series path toward the die followed
/// by an optional shunt branch to ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdnStage {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<RlcBranch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shunt: Option<RlcBranch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default = "default_z0")]
    z0: f64,
    #[serde(default = "default_powered")]
    powered: bool,
    die_on_branch: RlcBranch,
    stages: Vec<PdnStage>,
}

fn default_z0() -> f64 {
    50.0
}

fn default_powered() -> bool {
    true
}

/// Ladder of stages ordered from the probe port to the die.
#[derive(Debug, Clone, PartialEq)]
pub struct PdnModel {
    name: Option<String>,
    stages: Vec<PdnStage>,
    die_on_branch: RlcBranch,
    z0: ReferenceImpedance,
    powered: bool,
}

impl PdnModel {
    pub fn new(
        stages: Vec<PdnStage>,
        die_on_branch: RlcBranch,
        z0: ReferenceImpedance,
        powered: bool,
    ) -> Result<Self, PdnError> {
        let m = Self {
            name: None,
            stages,
            die_on_branch,
            z0,
            powered,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), PdnError> {
        if self.stages.is_empty() {
            return Err(PdnError::InvalidModel("model has no stages".into()));
        }
        let mut names = HashSet::new();
        for s in &self.stages {
            if !names.insert(s.name.as_str()) {
                return Err(PdnError::InvalidModel(format!("duplicate stage name {:?}", s.name)));
            }
            if s.series.is_none() && s.shunt.is_none() {
                return Err(PdnError::InvalidModel(format!("stage {:?} has no branch", s.name)));
            }
            if let Some(b) = &s.series {
                b.validate(&format!("{} series", s.name))?;
            }
            if let Some(b) = &s.shunt {
                b.validate(&format!("{} shunt", s.name))?;
            }
        }
        if self.die().shunt.is_none() {
            return Err(PdnError::InvalidModel(
                "the last (die) stage needs a shunt branch".into(),
            ));
        }
        self.die_on_branch.validate("die_on_branch")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, PdnError> {
        let file: ModelFile = toml::from_str(text)?;
        let z0 = ReferenceImpedance::new(file.z0).map_err(|e| PdnError::InvalidModel(e.to_string()))?;
        let mut m = Self::new(file.stages, file.die_on_branch, z0, file.powered)?;
        m.name = file.name;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, PdnError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        let file = ModelFile {
            name: self.name.clone(),
            z0: self.z0.ohms(),
            powered: self.powered,
            die_on_branch: self.die_on_branch,
            stages: self.stages.clone(),
        };
        toml::to_string(&file).expect("model always serializes")
    }

    /// A preset shipped with the crate, looked up by name.
    pub fn preset(name: &str) -> Result<Self, PdnError> {
        match name {
            "cw308-like" => Self::from_toml_str(include_str!("../../presets/cw308-like.toml")),
            other => Err(PdnError::UnknownPreset(other.to_string())),
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["cw308-like"]
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn stages(&self) -> &[PdnStage] {
        &self.stages
    }

    pub fn die(&self) -> &PdnStage {
        self.stages.last().expect("validated non-empty")
    }

    pub fn die_on_branch(&self) -> &RlcBranch {
        &self.die_on_branch
    }

    pub fn z0(&self) -> ReferenceImpedance {
        self.z0
    }

    pub fn powered(&self) -> bool {
        self.powered
    }

    pub fn with_powered(mut self, powered: bool) -> Self {
        self.powered = powered;
        self
    }

    /// Same model without any stage ahead of the die.
    pub fn die_only(&self) -> Self {
        let mut m = self.clone();
        m.stages = vec![self.die().clone()];
        m
    }

    pub(crate) fn stages_mut(&mut self) -> &mut [PdnStage] {
        &mut self.stages
    }

    pub(crate) fn die_on_branch_mut(&mut self) -> &mut RlcBranch {
        &mut self.die_on_branch
    }
}
