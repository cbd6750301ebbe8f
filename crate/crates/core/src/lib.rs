//! Exact diagonalization, effective models and entanglement diagnostics for
//! the one-dimensional XXZ chain with on-site defects.
//!
//! The Hamiltonian conserves the number of up spins, so everything works in
//! one fixed-excitation sector at a time:
//!
//! * [`basis`] enumerates a sector and indexes its configurations;
//! * [`hamiltonian`] assembles the dense sector matrix;
//! * [`dynamics`] diagonalizes it and evolves states exactly, including
//!   instantaneous detuning quenches;
//! * [`effective`] evaluates the perturbative two- and three-level models;
//! * [`entanglement`] measures target fidelities and concurrence;
//! * [`scenario`] wires the presets, config files and CSV outputs together.

pub mod basis;
pub mod dynamics;
pub mod effective;
pub mod entanglement;
pub mod error;
pub mod hamiltonian;
pub mod scenario;

pub use basis::{Config, SectorBasis};
pub use dynamics::{SpectralDecomposition, StateVector, TimeTrace};
pub use effective::EffectivePrediction;
pub use error::{Error, Result};
pub use hamiltonian::{ChainSpec, HopNormalization, SectorHamiltonian};
