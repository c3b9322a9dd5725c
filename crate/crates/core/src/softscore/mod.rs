//! Partial-credit comparison of a generated model against a ground truth.
//!
//! Variables are matched greedily on a five-part structural similarity
//! ([`pair_score`]), the generated model is renamed into the truth namespace,
//! and constraints and objective terms are then compared algebraically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::canonical::{canonical_rows_close, rel_close};
use crate::model::{canonicalize_constraint, Constraint, Model, CANON_ZERO_TOL, COMPARE_REL_TOL};
use crate::solver::{Solution, SolveStatus};

mod matching;
mod profile;

pub use matching::{greedy_match, rename_generated, CollisionError, EXTRA_PREFIX, MATCH_FLOOR};
pub use profile::{pair_score, score_grid, PairScore};

/// Metric keys, in report column order.
pub const METRIC_NAMES: [&str; 8] =
    ["accuracy", "partial_score", "match_vars", "match_cons", "match_obj", "extra_gen", "runtime_err", "compile_err"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    #[default]
    None,
    Runtime,
    Compile,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::None => "none",
            ErrorKind::Runtime => "runtime",
            ErrorKind::Compile => "compile",
        }
    }
}

/// 100 if both runs agree on status and, when optimal, on the objective
/// within relative tolerance 1e-6; 0 otherwise.
pub fn exact_accuracy(truth_out: &Solution, gen_out: &Solution) -> f64 {
    if solutions_agree(truth_out, gen_out) {
        100.0
    } else {
        0.0
    }
}

fn solutions_agree(t: &Solution, g: &Solution) -> bool {
    if t.status != g.status {
        return false;
    }
    if t.status != SolveStatus::Optimal {
        return true;
    }
    match (t.objective, g.objective) {
        (Some(a), Some(b)) => (a - b).abs() <= COMPARE_REL_TOL * a.abs().max(1.0),
        _ => false,
    }
}

/// Algebraic equivalence of two constraints over a shared namespace.
pub fn constraints_equivalent(c1: &Constraint, c2: &Constraint, tol: f64) -> bool {
    match (canonicalize_constraint(c1, CANON_ZERO_TOL), canonicalize_constraint(c2, CANON_ZERO_TOL)) {
        (Ok(a), Ok(b)) => canonical_rows_close(&a, &b, tol),
        (Err(a), Err(b)) => std::mem::discriminant(&a) == std::mem::discriminant(&b),
        _ => false,
    }
}

/// Integer counts behind a report; every metric is a ratio of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub error_kind: ErrorKind,
    pub accurate: bool,
    pub truth_vars: u64,
    pub matched_vars: u64,
    pub truth_cons: u64,
    pub matched_cons: u64,
    /// Objective credit `matched_obj / obj_terms`; `obj_terms >= 1`.
    pub matched_obj: u64,
    pub obj_terms: u64,
    pub gen_elements: u64,
    pub extra_elements: u64,
}

impl Tally {
    /// `(numerator, denominator)` of each metric as a fraction of 100, in
    /// [`METRIC_NAMES`] order. Denominators are never zero.
    pub fn fractions(&self) -> [(u64, u64); 8] {
        let flag = |b: bool| (u64::from(b), 1);
        let ratio = |n: u64, d: u64| if d == 0 { (1, 1) } else { (n, d) };
        let errors = [flag(self.error_kind == ErrorKind::Runtime), flag(self.error_kind == ErrorKind::Compile)];
        if self.error_kind != ErrorKind::None {
            return [(0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1), errors[0], errors[1]];
        }
        let ot = self.obj_terms.max(1);
        [
            flag(self.accurate),
            (ot * (self.matched_vars + self.matched_cons) + self.matched_obj, ot * (self.truth_vars + self.truth_cons + 1)),
            ratio(self.matched_vars, self.truth_vars),
            ratio(self.matched_cons, self.truth_cons),
            (self.matched_obj, ot),
            if self.gen_elements == 0 { (0, 1) } else { (self.extra_elements, self.gen_elements) },
            errors[0],
            errors[1],
        ]
    }

    pub fn metrics(&self) -> Metrics {
        let p = self.fractions().map(|(n, d)| 100.0 * n as f64 / d as f64);
        Metrics {
            accuracy: p[0],
            partial_score: p[1],
            match_vars: p[2],
            match_cons: p[3],
            match_obj: p[4],
            extra_gen: p[5],
            runtime_err: p[6],
            compile_err: p[7],
        }
    }
}

/// The eight per-cell metrics, all percentages.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub partial_score: f64,
    pub match_vars: f64,
    pub match_cons: f64,
    pub match_obj: f64,
    pub extra_gen: f64,
    pub runtime_err: f64,
    pub compile_err: f64,
}

impl Metrics {
    pub fn values(&self) -> [f64; 8] {
        [
            self.accuracy,
            self.partial_score,
            self.match_vars,
            self.match_cons,
            self.match_obj,
            self.extra_gen,
            self.runtime_err,
            self.compile_err,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub accuracy: f64,
    pub partial_score: f64,
    pub match_vars: f64,
    pub match_cons: f64,
    pub match_obj: f64,
    pub extra_gen: f64,
    pub error_kind: ErrorKind,
    /// Generated name → truth name.
    pub var_mapping: BTreeMap<String, String>,
    /// (truth constraint, generated constraint) pairs in truth order.
    pub matched_constraints: Vec<(String, String)>,
    pub extra_variables: Vec<String>,
    pub extra_constraints: Vec<String>,
    pub extra_objective_terms: Vec<String>,
    pub tally: Tally,
}

impl ScoreReport {
    fn from_tally(tally: Tally) -> Self {
        let m = tally.metrics();
        Self {
            accuracy: m.accuracy,
            partial_score: m.partial_score,
            match_vars: m.match_vars,
            match_cons: m.match_cons,
            match_obj: m.match_obj,
            extra_gen: m.extra_gen,
            error_kind: tally.error_kind,
            var_mapping: BTreeMap::new(),
            matched_constraints: Vec::new(),
            extra_variables: Vec::new(),
            extra_constraints: Vec::new(),
            extra_objective_terms: Vec::new(),
            tally,
        }
    }

    /// Report for a candidate that failed to compile or run.
    pub fn failed(truth: &Model, kind: ErrorKind) -> Self {
        assert_ne!(kind, ErrorKind::None, "a failed report needs an error kind");
        Self::from_tally(Tally {
            error_kind: kind,
            truth_vars: truth.variables().len() as u64,
            truth_cons: truth.constraints().len() as u64,
            obj_terms: 1,
            ..Tally::default()
        })
    }

    pub fn metrics(&self) -> Metrics {
        self.tally.metrics()
    }
}

/// Compares `gen` against `truth`; solver outputs feed the accuracy metric
/// and may be absent.
pub fn score_models(truth: &Model, gen: &Model, truth_out: Option<&Solution>, gen_out: Option<&Solution>) -> ScoreReport {
    let mapping = greedy_match(&score_grid(truth, gen));
    let renamed = matching::apply_renaming(gen, &mapping).expect("greedy matching is injective into the truth namespace");

    // Constraints: one-to-one, greedy in declaration order.
    let canon = |c: &Constraint| canonicalize_constraint(c, CANON_ZERO_TOL);
    let truth_rows: Vec<_> = truth.constraints().iter().map(canon).collect();
    let gen_rows: Vec<_> = renamed.constraints().iter().map(canon).collect();
    let mut gen_used = vec![false; gen_rows.len()];
    let mut matched_constraints = Vec::new();
    for (ti, t) in truth_rows.iter().enumerate() {
        let hit = (0..gen_rows.len()).find(|&gi| {
            !gen_used[gi]
                && match (t, &gen_rows[gi]) {
                    (Ok(a), Ok(b)) => canonical_rows_close(a, b, COMPARE_REL_TOL),
                    (Err(a), Err(b)) => std::mem::discriminant(a) == std::mem::discriminant(b),
                    _ => false,
                }
        });
        if let Some(gi) = hit {
            gen_used[gi] = true;
            matched_constraints.push((truth.constraints()[ti].name.clone(), gen.constraints()[gi].name.clone()));
        }
    }
    let mut extra_constraints: Vec<String> = gen
        .constraints()
        .iter()
        .zip(&gen_used)
        .filter(|(_, used)| !**used)
        .map(|(c, _)| c.name.clone())
        .collect();
    extra_constraints.sort();

    // Objective terms.
    let t_obj = &truth.objective();
    let g_obj = &renamed.objective();
    let same_sense = t_obj.sense == g_obj.sense;
    let g_terms: Vec<(&String, f64)> = g_obj.expr.terms.iter().filter(|(_, c)| **c != 0.0).map(|(k, c)| (k, *c)).collect();
    let t_terms: Vec<(&String, f64)> = t_obj.expr.terms.iter().filter(|(_, c)| **c != 0.0).map(|(k, c)| (k, *c)).collect();
    let term_hit = |name: &String, coef: f64, other: &[(&String, f64)]| {
        same_sense && other.iter().any(|(k, c)| *k == name && rel_close(coef, *c, COMPARE_REL_TOL))
    };
    let (matched_obj, obj_terms) = if t_terms.is_empty() {
        (u64::from(same_sense && g_terms.is_empty()), 1)
    } else {
        (t_terms.iter().filter(|(k, c)| term_hit(k, *c, &g_terms)).count() as u64, t_terms.len() as u64)
    };
    let inverse: BTreeMap<&String, &String> = mapping.iter().map(|(g, t)| (t, g)).collect();
    let original_name = |renamed_name: &String| -> String {
        match inverse.get(renamed_name) {
            Some(g) => (*g).clone(),
            None => renamed_name.strip_prefix(EXTRA_PREFIX).unwrap_or(renamed_name).to_string(),
        }
    };
    let mut extra_objective_terms: Vec<String> =
        g_terms.iter().filter(|(k, c)| !term_hit(k, *c, &t_terms)).map(|(k, _)| original_name(k)).collect();
    extra_objective_terms.sort();

    let mut extra_variables: Vec<String> =
        gen.variables().iter().filter(|v| !mapping.contains_key(&v.name)).map(|v| v.name.clone()).collect();
    extra_variables.sort();

    let tally = Tally {
        error_kind: ErrorKind::None,
        accurate: matches!((truth_out, gen_out), (Some(t), Some(g)) if solutions_agree(t, g)),
        truth_vars: truth.variables().len() as u64,
        matched_vars: mapping.len() as u64,
        truth_cons: truth.constraints().len() as u64,
        matched_cons: matched_constraints.len() as u64,
        matched_obj,
        obj_terms,
        gen_elements: (gen.variables().len() + gen.constraints().len() + g_terms.len()) as u64,
        extra_elements: (extra_variables.len() + extra_constraints.len() + extra_objective_terms.len()) as u64,
    };
    ScoreReport {
        var_mapping: mapping,
        matched_constraints,
        extra_variables,
        extra_constraints,
        extra_objective_terms,
        ..ScoreReport::from_tally(tally)
    }
}
