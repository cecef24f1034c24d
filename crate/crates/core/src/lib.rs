//! Simulation and analysis of temporal Bell inequalities for a single
//! system measured twice in a row at settings drawn from `{a, b, c}`.
//!
//! - [`domain`]: directions, settings, outcomes, throw records
//! - [`quantum`]: qubit model with sequential projective measurements
//! - [`realist`]: predetermined-outcome (EPR-realist) model and its
//!   invasive variant
//! - [`engine`]: reproducible experiment runner
//! - [`analysis`]: tallies, correlators, inequality forms, noise diagnostics
//! - [`search`]: violation maximization and the flip-noise sweep

pub mod analysis;
pub mod domain;
pub mod engine;
pub mod error;
pub mod quantum;
pub mod realist;
pub mod rng;
pub mod search;

pub use analysis::{ConditionalTable, CorrelatorEstimate, InequalityReport, NoiseDiagnostics, Tally};
pub use domain::{Direction, Outcome, Setting, SettingTriple, ThrowRecord};
pub use engine::{ExperimentPlan, Model};
pub use error::{Error, Result};
pub use quantum::QubitState;
pub use realist::{Disturbance, RealityDist, RealityType};
pub use search::SearchResult;
