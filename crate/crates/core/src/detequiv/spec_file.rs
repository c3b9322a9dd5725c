//! TOML form of compact specs.
//!
//! ```toml
//! kind = "two_stage"          # or "chance"
//! deterministic = false
//!
//! [first_stage]
//! vars = ["x"]
//! cost = [1.0]
//! rows = []                   # [{ name, coeffs, sense, rhs }]
//!
//! [second_stage]
//! vars = ["y"]
//! rows = ["demand"]
//! senses = [">="]             # optional, defaults to "=" for every row
//!
//! [[scenarios]]
//! probability = 0.5
//! cost = [2.0]
//! recourse = [[1.0]]          # D: one row per second-stage row
//! technology = [[-1.0]]       # B: recourse·y - technology·x (sense) rhs
//! rhs = [1.0]
//! ```
//!
//! Chance specs carry `vars`, `cost`, `sense`, `joint`, optional `alpha`,
//! `[[rows]]` with `coeffs`, `sense`, `alpha` and an `rhs` distribution table
//! (`{ family = "normal", mu, sigma }`), plus optional `[[deterministic_rows]]`.

use serde::{Deserialize, Serialize};

use super::{build_extensive_form, flatten_dlp2, reformulate_individual_chance, ChanceSpec, DetEquivError, TwoStageSpec};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompactSpec {
    TwoStage(TwoStageSpec),
    Chance(ChanceSpec),
}

pub fn parse_compact_spec(text: &str) -> Result<CompactSpec, DetEquivError> {
    let spec: CompactSpec = toml::from_str(text).map_err(|e| DetEquivError::Format(e.to_string()))?;
    match &spec {
        CompactSpec::TwoStage(s) => s.validate()?,
        CompactSpec::Chance(s) => s.validate()?,
    }
    Ok(spec)
}

pub fn emit_compact_spec(spec: &CompactSpec) -> String {
    toml::to_string(spec).expect("compact specs always serialize")
}

/// Deterministic-equivalent model of a compact spec.
pub fn compile_spec(spec: &CompactSpec) -> Result<Model, DetEquivError> {
    match spec {
        CompactSpec::TwoStage(s) if s.deterministic => flatten_dlp2(s),
        CompactSpec::TwoStage(s) => build_extensive_form(s),
        CompactSpec::Chance(s) => reformulate_individual_chance(s),
    }
}
