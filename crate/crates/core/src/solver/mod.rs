//! Embedded LP/MILP solver used to compute reference optima.
//!
//! [`solve_lp`] is a dense two-phase tableau simplex with Bland's rule;
//! [`solve_mip`] wraps it in best-first branch-and-bound. Both are meant for
//! desk-scale models (a few hundred variables at most).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Model, ObjectiveSense, Sense};

mod mip;
mod simplex;

pub use mip::solve_mip;

pub const FEASIBILITY_TOL: f64 = 1e-9;
pub const OPTIMALITY_TOL: f64 = 1e-9;
pub const PIVOT_TOL: f64 = 1e-12;
pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const DEFAULT_NODE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NodeLimit => "node_limit",
        }
    }
}

/// Solver result; also the schema of a candidate's `solution.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    #[serde(default)]
    pub objective: Option<f64>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
}

impl Solution {
    pub fn without_point(status: SolveStatus) -> Self {
        Self { status, objective: None, values: BTreeMap::new() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("numerical breakdown: {0}")]
    NumericBreakdown(String),
}

/// Dense minimization form of a model: `min cost·x + constant` over rows and bounds.
#[derive(Debug, Clone)]
pub(crate) struct LpData {
    pub names: Vec<String>,
    pub cost: Vec<f64>,
    pub constant: f64,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integral: Vec<bool>,
    pub maximize: bool,
}

impl LpData {
    pub fn from_model(model: &Model) -> Self {
        let n = model.variables().len();
        let names: Vec<String> = model.variables().iter().map(|v| v.name.clone()).collect();
        let maximize = model.objective().sense == ObjectiveSense::Maximize;
        let flip = if maximize { -1.0 } else { 1.0 };
        let mut cost = vec![0.0; n];
        for (name, coef) in &model.objective().expr.terms {
            let j = model.var_index(name).expect("validated model");
            cost[j] = flip * coef;
        }
        let rows = model
            .constraints()
            .iter()
            .map(|c| {
                let mut row = vec![0.0; n];
                for (name, coef) in &c.lhs.terms {
                    row[model.var_index(name).expect("validated model")] = *coef;
                }
                (row, c.sense, c.rhs - c.lhs.constant)
            })
            .collect();
        Self {
            names,
            cost,
            constant: flip * model.objective().expr.constant,
            rows,
            lower: model.variables().iter().map(|v| v.lower).collect(),
            upper: model.variables().iter().map(|v| v.upper).collect(),
            integral: model.variables().iter().map(|v| v.kind.is_integral()).collect(),
            maximize,
        }
    }

    /// Converts an internal (minimization) objective back to the model's sense.
    pub fn external_objective(&self, internal: f64) -> f64 {
        if self.maximize {
            -internal
        } else {
            internal
        }
    }

    pub fn values_map(&self, x: &[f64]) -> BTreeMap<String, f64> {
        self.names.iter().cloned().zip(x.iter().copied()).collect()
    }
}

/// Solves the continuous relaxation of `model` (integrality is ignored).
pub fn solve_lp(model: &Model) -> Result<Solution, SolveError> {
    let data = LpData::from_model(model);
    let outcome = simplex::solve(&data, &data.lower, &data.upper)?;
    Ok(match outcome {
        simplex::Outcome::Optimal { x, objective } => Solution {
            status: SolveStatus::Optimal,
            objective: Some(data.external_objective(objective)),
            values: data.values_map(&x),
        },
        simplex::Outcome::Infeasible => Solution::without_point(SolveStatus::Infeasible),
        simplex::Outcome::Unbounded => Solution::without_point(SolveStatus::Unbounded),
    })
}

/// Solves with branch-and-bound when the model has integer variables,
/// otherwise as a plain LP.
pub fn solve(model: &Model) -> Result<Solution, SolveError> {
    if model.has_integers() {
        solve_mip(model, DEFAULT_NODE_LIMIT)
    } else {
        solve_lp(model)
    }
}
