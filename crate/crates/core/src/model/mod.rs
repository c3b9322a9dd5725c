//! Canonical in-memory representation of linear (mixed-integer) models.
//!
//! A [`Model`] is validated on construction and immutable afterwards: names are
//! unique, bounds are consistent, and every expression references declared
//! variables only.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) mod canonical;
mod emit;
mod fingerprint;
mod parse;

pub use canonical::{
    canonicalize_constraint, CanonError, CANON_ZERO_TOL, COMPARE_REL_TOL,
};
pub use emit::emit_lp;
pub use fingerprint::fingerprint;
pub use parse::{parse_lp, LpError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

impl Variable {
    /// Continuous variable on the default domain `[0, +inf)`.
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), lower: 0.0, upper: f64::INFINITY, kind: VarKind::Continuous }
    }

    pub fn integer(name: impl Into<String>) -> Self {
        Self { kind: VarKind::Integer, ..Self::new(name) }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self { name: name.into(), lower: 0.0, upper: 1.0, kind: VarKind::Binary }
    }

    pub fn free(name: impl Into<String>) -> Self {
        Self { lower: f64::NEG_INFINITY, ..Self::new(name) }
    }

    pub fn bounded(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn has_default_bounds(&self) -> bool {
        self.lower == 0.0 && self.upper == f64::INFINITY
    }
}

/// Linear expression `sum(coef * var) + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: BTreeMap<String, f64>,
    #[serde(default)]
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder-style term insertion; repeated names accumulate.
    pub fn with(mut self, name: impl Into<String>, coef: f64) -> Self {
        self.add_term(name, coef);
        self
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn add_term(&mut self, name: impl Into<String>, coef: f64) {
        *self.terms.entry(name.into()).or_insert(0.0) += coef;
    }

    pub fn coef(&self, name: &str) -> f64 {
        self.terms.get(name).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.terms.get(name).is_some_and(|c| *c != 0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.values().all(|c| *c == 0.0)
    }

    /// Drops exact-zero coefficients.
    pub fn prune(&mut self) {
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub fn eval(&self, values: &BTreeMap<String, f64>) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(name, coef)| coef * values.get(name).copied().unwrap_or(0.0))
                .sum::<f64>()
    }

    pub fn scale(&mut self, factor: f64) {
        for coef in self.terms.values_mut() {
            *coef *= factor;
        }
        self.constant *= factor;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Sense {
    pub fn flipped(self) -> Self {
        match self {
            Sense::Le => Sense::Ge,
            Sense::Eq => Sense::Eq,
            Sense::Ge => Sense::Le,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub lhs: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(name: impl Into<String>, lhs: LinExpr, sense: Sense, rhs: f64) -> Self {
        Self { name: name.into(), lhs, sense, rhs }
    }

    /// Whether `values` satisfies the row within `tol`.
    pub fn is_satisfied(&self, values: &BTreeMap<String, f64>, tol: f64) -> bool {
        let lhs = self.lhs.eval(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Ge => lhs >= self.rhs - tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub name: String,
    pub sense: ObjectiveSense,
    pub expr: LinExpr,
}

impl Objective {
    pub fn minimize(expr: LinExpr) -> Self {
        Self { name: "obj".into(), sense: ObjectiveSense::Minimize, expr }
    }

    pub fn maximize(expr: LinExpr) -> Self {
        Self { name: "obj".into(), sense: ObjectiveSense::Maximize, expr }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid identifier `{0}`")]
    InvalidName(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint `{0}`")]
    DuplicateConstraint(String),
    #[error("`{context}` references undeclared variable `{name}`")]
    Undeclared { name: String, context: String },
    #[error("variable `{0}` has lower bound above upper bound")]
    InvalidBounds(String),
    #[error("binary variable `{0}` must have bounds [0, 1]")]
    BinaryBounds(String),
    #[error("non-finite coefficient or right-hand side in `{0}`")]
    NonFinite(String),
}

/// Identifier grammar shared by variables and constraints: `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
    index: HashMap<String, usize>,
}

impl Model {
    pub fn new(
        variables: Vec<Variable>,
        constraints: Vec<Constraint>,
        objective: Objective,
    ) -> Result<Self, ModelError> {
        let mut index = HashMap::with_capacity(variables.len());
        for (i, var) in variables.iter().enumerate() {
            if !is_identifier(&var.name) {
                return Err(ModelError::InvalidName(var.name.clone()));
            }
            if var.lower.is_nan() || var.upper.is_nan() || var.lower > var.upper {
                return Err(ModelError::InvalidBounds(var.name.clone()));
            }
            if var.kind == VarKind::Binary && (var.lower != 0.0 || var.upper != 1.0) {
                return Err(ModelError::BinaryBounds(var.name.clone()));
            }
            if index.insert(var.name.clone(), i).is_some() {
                return Err(ModelError::DuplicateVariable(var.name.clone()));
            }
        }

        let check_expr = |expr: &LinExpr, context: &str| -> Result<(), ModelError> {
            if !expr.constant.is_finite() {
                return Err(ModelError::NonFinite(context.to_string()));
            }
            for (name, coef) in &expr.terms {
                if !coef.is_finite() {
                    return Err(ModelError::NonFinite(context.to_string()));
                }
                if !index.contains_key(name) {
                    return Err(ModelError::Undeclared {
                        name: name.clone(),
                        context: context.to_string(),
                    });
                }
            }
            Ok(())
        };

        let mut seen = HashMap::with_capacity(constraints.len());
        for con in &constraints {
            if !is_identifier(&con.name) {
                return Err(ModelError::InvalidName(con.name.clone()));
            }
            if seen.insert(con.name.as_str(), ()).is_some() {
                return Err(ModelError::DuplicateConstraint(con.name.clone()));
            }
            if !con.rhs.is_finite() {
                return Err(ModelError::NonFinite(con.name.clone()));
            }
            check_expr(&con.lhs, &con.name)?;
        }
        if !is_identifier(&objective.name) {
            return Err(ModelError::InvalidName(objective.name.clone()));
        }
        check_expr(&objective.expr, &objective.name)?;

        Ok(Self { variables, constraints, objective, index })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index.get(name).map(|&i| &self.variables[i])
    }

    /// Declaration position of a variable.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn has_integers(&self) -> bool {
        self.variables.iter().any(|v| v.kind.is_integral())
    }

    pub fn into_parts(self) -> (Vec<Variable>, Vec<Constraint>, Objective) {
        (self.variables, self.constraints, self.objective)
    }

    /// Objective value at `values` (missing variables count as zero).
    pub fn objective_value(&self, values: &BTreeMap<String, f64>) -> f64 {
        self.objective.expr.eval(values)
    }

    /// Structural equality after canonicalizing every constraint: same
    /// variables (order, bounds, kind), same constraint names and canonical
    /// rows in order, same objective.
    pub fn approx_eq(&self, other: &Model, tol: f64) -> bool {
        canonical::models_approx_eq(self, other, tol)
    }
}
