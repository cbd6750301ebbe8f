//! On-disk scenario description.
//!
//! A config is a small TOML document with a top-level `scenario` key and a
//! few optional sections. Energies are in units of `B` and times in units of
//! `1/B`; anything left out is filled from the scenario preset.
//!
//! ```toml
//! scenario = "w-four-defects"
//!
//! [chain]
//! n_sites = 12
//! anisotropy = 10.0
//!
//! [defects]
//! n0 = 3
//! g = 10.0
//!
//! [time]
//! t_max = 100.0
//! samples = 2000
//!
//! [quench]
//! at = 26.6
//! detuning = 20.0
//! sites = [6]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HopNormalization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    EprOneExcitation,
    EprBoundPair,
    EprFirstOrder,
    WFourDefects,
    WTwoDefects,
    Custom,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 6] = [
        ScenarioName::EprOneExcitation,
        ScenarioName::EprBoundPair,
        ScenarioName::EprFirstOrder,
        ScenarioName::WFourDefects,
        ScenarioName::WTwoDefects,
        ScenarioName::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::EprOneExcitation => "epr-one-excitation",
            ScenarioName::EprBoundPair => "epr-bound-pair",
            ScenarioName::EprFirstOrder => "epr-first-order",
            ScenarioName::WFourDefects => "w-four-defects",
            ScenarioName::WTwoDefects => "w-two-defects",
            ScenarioName::Custom => "custom",
        }
    }

    pub fn is_epr(self) -> bool {
        matches!(
            self,
            ScenarioName::EprOneExcitation | ScenarioName::EprBoundPair | ScenarioName::EprFirstOrder
        )
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub n_sites: Option<usize>,
    pub anisotropy: Option<f64>,
    pub base_spacing: Option<f64>,
    pub hop: Option<HopNormalization>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSection {
    pub n0: Option<usize>,
    pub m0: Option<usize>,
    pub mu: Option<usize>,
    pub g: Option<f64>,
    /// Explicit defect sites (custom scenario).
    pub sites: Option<Vec<usize>>,
    /// Offsets matching `sites`.
    pub offsets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKindName {
    EprPlus,
    EprMinus,
    W,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub kind: TargetKindName,
    pub components: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub initial: Option<Vec<usize>>,
    pub tracked: Option<Vec<Vec<usize>>>,
    pub target: Option<TargetSection>,
    pub concurrence: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    /// How many entanglement instants to report.
    pub instants: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchSection {
    /// Quench time; defaults to the first predicted entanglement instant.
    pub at: Option<f64>,
    #[serde(default = "default_detuning")]
    pub detuning: f64,
    pub sites: Option<Vec<usize>>,
}

fn default_detuning() -> f64 {
    20.0
}

impl Default for QuenchSection {
    fn default() -> Self {
        QuenchSection {
            at: None,
            detuning: default_detuning(),
            sites: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioName,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub defects: DefectSection,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub time: TimeSection,
    pub quench: Option<QuenchSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    /// A config that takes every value from the preset.
    pub fn preset(scenario: ScenarioName) -> Self {
        ScenarioConfig {
            scenario,
            chain: ChainSection::default(),
            defects: DefectSection::default(),
            state: StateSection::default(),
            time: TimeSection::default(),
            quench: None,
            output: OutputSection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always serializable")
    }
}
