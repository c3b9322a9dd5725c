use thiserror::Error;

use super::{Constraint, LinExpr, Model, Sense};

/// Absolute threshold below which coefficients are treated as zero.
pub const CANON_ZERO_TOL: f64 = 1e-9;
/// Relative tolerance for comparing canonical coefficients and right-hand sides.
pub const COMPARE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonError {
    /// All-zero left-hand side that can never be satisfied.
    #[error("constraint `{0}` has an all-zero left-hand side and can never hold")]
    InfeasibleTautology(String),
    /// All-zero left-hand side that always holds; carries no information.
    #[error("constraint `{0}` is trivially satisfied")]
    TrivialConstraint(String),
}

/// Brings a constraint into canonical form.
///
/// The constant is folded into the right-hand side, `>=` rows are negated into
/// `<=`, coefficients are scaled by the largest absolute coefficient, and
/// coefficients with magnitude below `tol` are dropped. Equality rows are
/// signed so that the lexicographically smallest variable has a positive
/// coefficient.
pub fn canonicalize_constraint(c: &Constraint, tol: f64) -> Result<Constraint, CanonError> {
    let mut terms = c.lhs.terms.clone();
    let mut rhs = c.rhs - c.lhs.constant;
    let mut sense = c.sense;
    if sense == Sense::Ge {
        for coef in terms.values_mut() {
            *coef = -*coef;
        }
        rhs = -rhs;
        sense = Sense::Le;
    }
    terms.retain(|_, coef| coef.abs() >= tol);

    let max_abs = terms.values().fold(0.0f64, |m, c| m.max(c.abs()));
    if max_abs == 0.0 {
        let holds = match sense {
            Sense::Eq => rhs.abs() <= tol,
            _ => rhs >= -tol,
        };
        return Err(if holds {
            CanonError::TrivialConstraint(c.name.clone())
        } else {
            CanonError::InfeasibleTautology(c.name.clone())
        });
    }

    for coef in terms.values_mut() {
        *coef /= max_abs;
    }
    rhs /= max_abs;
    terms.retain(|_, coef| coef.abs() >= tol);

    if sense == Sense::Eq {
        // BTreeMap iteration starts at the lexicographically smallest name.
        let leading = terms.values().next().copied().unwrap_or(1.0);
        if leading < 0.0 {
            for coef in terms.values_mut() {
                *coef = -*coef;
            }
            rhs = -rhs;
        }
    }

    Ok(Constraint {
        name: c.name.clone(),
        lhs: LinExpr { terms, constant: 0.0 },
        sense,
        rhs: rhs + 0.0,
    })
}

pub(crate) fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    if !a.is_finite() || !b.is_finite() {
        return false;
    }
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// Compares two canonical rows (same sense, same support, close values).
pub(crate) fn canonical_rows_close(a: &Constraint, b: &Constraint, tol: f64) -> bool {
    a.sense == b.sense
        && a.lhs.terms.len() == b.lhs.terms.len()
        && rel_close(a.rhs, b.rhs, tol)
        && a.lhs.terms.iter().all(|(name, coef)| {
            b.lhs.terms.get(name).is_some_and(|other| rel_close(*coef, *other, tol))
        })
}

pub(crate) fn models_approx_eq(a: &Model, b: &Model, tol: f64) -> bool {
    if a.variables.len() != b.variables.len() || a.constraints.len() != b.constraints.len() {
        return false;
    }
    let vars_eq = a.variables.iter().zip(&b.variables).all(|(x, y)| {
        x.name == y.name
            && x.kind == y.kind
            && rel_close(x.lower, y.lower, tol)
            && rel_close(x.upper, y.upper, tol)
    });
    if !vars_eq {
        return false;
    }
    let cons_eq = a.constraints.iter().zip(&b.constraints).all(|(x, y)| {
        if x.name != y.name {
            return false;
        }
        match (canonicalize_constraint(x, CANON_ZERO_TOL), canonicalize_constraint(y, CANON_ZERO_TOL)) {
            (Ok(cx), Ok(cy)) => canonical_rows_close(&cx, &cy, tol),
            (Err(ex), Err(ey)) => ex == ey,
            _ => false,
        }
    });
    if !cons_eq {
        return false;
    }
    let (oa, ob) = (&a.objective, &b.objective);
    let nonzero = |e: &LinExpr| e.terms.iter().filter(|(_, c)| c.abs() >= CANON_ZERO_TOL).count();
    oa.name == ob.name
        && oa.sense == ob.sense
        && rel_close(oa.expr.constant, ob.expr.constant, tol)
        && nonzero(&oa.expr) == nonzero(&ob.expr)
        && oa
            .expr
            .terms
            .iter()
            .filter(|(_, c)| c.abs() >= CANON_ZERO_TOL)
            .all(|(name, coef)| rel_close(*coef, ob.expr.coef(name), tol))
}
