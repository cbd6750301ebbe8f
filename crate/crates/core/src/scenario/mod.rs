//! Scenario presets, config files and the runners behind the command line.

mod config;
mod resolve;
mod run;

pub use config::{
    ChainSection, DefectSection, OutputSection, QuenchSection, ScenarioConfig, ScenarioName, StateSection,
    TargetKindName, TargetSection, TimeSection,
};
pub use resolve::{
    measured_gap, resolve, weight_on, Quench, ResolvedScenario, DEFAULT_ANISOTROPY, DEFAULT_BASE_SPACING,
};
pub use run::*;
