use std::fmt::Write;

use sha2::{Digest, Sha256};

use super::{canonicalize_constraint, CanonError, Model, ObjectiveSense, CANON_ZERO_TOL};
use crate::numfmt::lp_number;

/// SHA-256 digest (hex) of the model's canonical content.
///
/// Variables are sorted by name, constraints are canonicalized and sorted by
/// their textual canonical form, and constraint labels are ignored, so
/// reordering variables or rows (or relabeling rows) leaves the digest
/// unchanged.
pub fn fingerprint(model: &Model) -> String {
    let mut vars: Vec<String> = model
        .variables()
        .iter()
        .map(|v| format!("{} {:?} {} {}", v.name, v.kind, lp_number(v.lower), lp_number(v.upper)))
        .collect();
    vars.sort();

    let mut rows: Vec<String> = model
        .constraints()
        .iter()
        .map(|c| match canonicalize_constraint(c, CANON_ZERO_TOL) {
            Ok(row) => {
                let mut s = String::new();
                for (name, coef) in &row.lhs.terms {
                    let _ = write!(s, "{} {} ", lp_number(*coef), name);
                }
                let _ = write!(s, "{} {}", row.sense, lp_number(row.rhs));
                s
            }
            Err(CanonError::TrivialConstraint(_)) => "trivial".to_string(),
            Err(CanonError::InfeasibleTautology(_)) => "infeasible".to_string(),
        })
        .collect();
    rows.sort();

    let objective = model.objective();
    let mut obj = String::from(match objective.sense {
        ObjectiveSense::Minimize => "min",
        ObjectiveSense::Maximize => "max",
    });
    for (name, coef) in objective.expr.terms.iter().filter(|(_, c)| c.abs() >= CANON_ZERO_TOL) {
        let _ = write!(obj, " {} {}", lp_number(*coef), name);
    }
    let _ = write!(obj, " const {}", lp_number(objective.expr.constant));

    let mut hasher = Sha256::new();
    for section in [vars, rows, vec![obj]] {
        for line in section {
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
        }
        hasher.update(b"--\n");
    }
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::super::*;

    fn build(rows: Vec<Constraint>, vars: Vec<Variable>) -> Model {
        Model::new(vars, rows, Objective::minimize(LinExpr::new().with("x", 1.0).with("y", 2.0))).unwrap()
    }

    fn rows() -> Vec<Constraint> {
        vec![
            Constraint::new("a", LinExpr::new().with("x", 1.0).with("y", 1.0), Sense::Ge, 2.0),
            Constraint::new("b", LinExpr::new().with("x", 3.0), Sense::Le, 9.0),
        ]
    }

    fn vars() -> Vec<Variable> {
        vec![Variable::new("x"), Variable::new("y")]
    }

    #[test]
    fn deterministic_and_order_free() {
        let m = build(rows(), vars());
        assert_eq!(fingerprint(&m), fingerprint(&m));
        assert_eq!(fingerprint(&m).len(), 64);

        let mut r = rows();
        r.reverse();
        let mut v = vars();
        v.reverse();
        assert_eq!(fingerprint(&build(r, v)), fingerprint(&m));

        // Positive rescaling is part of canonicalization.
        let mut r = rows();
        r[1] = Constraint::new("b", LinExpr::new().with("x", 1.0), Sense::Le, 3.0);
        assert_eq!(fingerprint(&build(r, vars())), fingerprint(&m));
    }

    #[test]
    fn coefficient_change_alters_digest() {
        let m = build(rows(), vars());
        let mut r = rows();
        r[0].lhs.terms.insert("y".into(), 1.001);
        assert_ne!(fingerprint(&build(r, vars())), fingerprint(&m));
    }
}
