//! Core building blocks for evaluating automatically formulated stochastic
//! optimization models.
//!
//! * [`model`] holds the canonical linear model representation, the LP-file
//!   reader/writer used as interchange format, and constraint canonicalization.
//! * [`detequiv`] compiles compact two-stage and chance-constrained problem
//!   descriptions into deterministic-equivalent [`model::Model`]s.
//! * [`solver`] is a small dense two-phase simplex with branch-and-bound.
//! * [`softscore`] compares a generated model against a ground truth and
//!   produces partial-credit metrics.

pub mod detequiv;
pub mod model;
pub mod numfmt;
pub mod softscore;
pub mod solver;
#[cfg(feature = "testkit")]
pub mod testkit;

pub use model::{Constraint, LinExpr, Model, Objective, ObjectiveSense, Sense, VarKind, Variable};
pub use solver::{Solution, SolveStatus};
