//! Deterministic equivalents of compact stochastic problem descriptions.
//!
//! * [`TwoStageSpec`] covers two-stage recourse problems over a finite set of
//!   scenarios ([`build_extensive_form`]) and their single-scenario
//!   deterministic counterpart ([`flatten_dlp2`]).
//! * [`ChanceSpec`] covers chance-constrained problems; rows with a normally
//!   distributed right-hand side are reformulated with the normal quantile
//!   ([`reformulate_individual_chance`]).
//! * [`CompactSpec`] is the on-disk TOML form of either description.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ObjectiveSense, Sense};

mod chance;
mod quantile;
mod spec_file;
mod two_stage;

pub use chance::reformulate_individual_chance;
pub use quantile::{normal_cdf, normal_quantile};
pub use spec_file::{compile_spec, emit_compact_spec, parse_compact_spec, CompactSpec};
pub use two_stage::{build_extensive_form, flatten_dlp2, scenario_name};

/// Tolerance on the scenario probabilities summing to one.
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetEquivError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid scenario probabilities: {0}")]
    ProbabilityError(String),
    #[error("value {0} is outside the open interval (0, 1)")]
    DomainError(f64),
    #[error("unsupported randomness: {0}")]
    UnsupportedRandomness(String),
    #[error("joint chance constraints are represented but not reformulated")]
    JointNotSupported,
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("spec file: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A deterministic linear row `coeffs · vars (sense) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub name: String,
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStage {
    pub vars: Vec<String>,
    pub cost: Vec<f64>,
    #[serde(default)]
    pub rows: Vec<LinearRow>,
}

/// Second-stage layout shared by every scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondStage {
    #[serde(default)]
    pub vars: Vec<String>,
    /// Row labels of the recourse system.
    #[serde(default)]
    pub rows: Vec<String>,
    /// Per-row senses; omitted means every row is an equality.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub senses: Option<Vec<Sense>>,
}

impl SecondStage {
    pub fn sense(&self, row: usize) -> Sense {
        self.senses.as_ref().and_then(|s| s.get(row).copied()).unwrap_or(Sense::Eq)
    }
}

/// One realization of the second-stage data: recourse rows read
/// `recourse · y (sense) technology · x + rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub probability: f64,
    /// Second-stage cost vector.
    pub cost: Vec<f64>,
    /// Recourse matrix, one row per second-stage row.
    pub recourse: Vec<Vec<f64>>,
    /// Technology matrix linking first-stage decisions into the recourse rows.
    pub technology: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageSpec {
    pub first_stage: FirstStage,
    pub second_stage: SecondStage,
    pub scenarios: Vec<Scenario>,
    /// Single implicit scenario known ahead of time.
    #[serde(default)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Distribution {
    Normal { mu: f64, sigma: f64 },
    Uniform { low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Fixed(f64),
    Random(Distribution),
}

/// Row whose right-hand side is random: `P(coeffs · x (sense) rhs) >= alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChanceRow {
    pub name: String,
    pub coeffs: Vec<Coefficient>,
    pub sense: Sense,
    pub rhs: Distribution,
    /// Individual confidence level; ignored for joint specs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChanceSpec {
    pub vars: Vec<String>,
    pub cost: Vec<f64>,
    #[serde(default = "default_sense")]
    pub sense: ObjectiveSense,
    #[serde(default)]
    pub joint: bool,
    /// Joint confidence level when `joint` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub rows: Vec<ChanceRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deterministic_rows: Vec<LinearRow>,
}

fn default_sense() -> ObjectiveSense {
    ObjectiveSense::Minimize
}
