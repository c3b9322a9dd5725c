use std::fmt::Write;

use super::{LinExpr, Model, ObjectiveSense, VarKind};
use crate::numfmt::lp_number;

/// Writes `model` in LP format.
///
/// Output is deterministic: sections appear in the order objective,
/// `Subject To`, `Bounds`, `Generals`, `Binaries`, `End`; variables and
/// constraints keep declaration order, terms follow variable declaration
/// order, and numbers carry 12 significant digits. Every variable is listed
/// under `Bounds` so that unused variables and declaration order survive a
/// round trip through [`super::parse_lp`].
pub fn emit_lp(model: &Model) -> String {
    let mut out = String::new();
    let objective = model.objective();
    out.push_str(match objective.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    let _ = writeln!(out, " {}: {}", objective.name, format_expr(model, &objective.expr, true));

    out.push_str("Subject To\n");
    for con in model.constraints() {
        let rhs = con.rhs - con.lhs.constant;
        let lhs = LinExpr { terms: con.lhs.terms.clone(), constant: 0.0 };
        let _ = writeln!(
            out,
            " {}: {} {} {}",
            con.name,
            format_expr(model, &lhs, false),
            con.sense,
            lp_number(rhs)
        );
    }

    out.push_str("Bounds\n");
    for var in model.variables() {
        let line = if var.kind == VarKind::Binary {
            format!("0 <= {} <= 1", var.name)
        } else if var.lower == f64::NEG_INFINITY && var.upper == f64::INFINITY {
            format!("{} free", var.name)
        } else if var.upper == f64::INFINITY {
            format!("{} >= {}", var.name, lp_number(var.lower))
        } else {
            format!("{} <= {} <= {}", lp_number(var.lower), var.name, lp_number(var.upper))
        };
        let _ = writeln!(out, " {line}");
    }

    for (header, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        let names: Vec<&str> =
            model.variables().iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if !names.is_empty() {
            let _ = writeln!(out, "{header}");
            for name in names {
                let _ = writeln!(out, " {name}");
            }
        }
    }
    out.push_str("End\n");
    out
}

fn format_expr(model: &Model, expr: &LinExpr, with_constant: bool) -> String {
    let mut terms: Vec<(usize, &str, f64)> = expr
        .terms
        .iter()
        .filter(|(_, c)| **c != 0.0)
        .map(|(name, c)| (model.var_index(name).unwrap_or(usize::MAX), name.as_str(), *c))
        .collect();
    terms.sort_by_key(|(idx, name, _)| (*idx, *name));

    let mut out = String::new();
    for (_, name, coef) in terms {
        push_term(&mut out, coef, Some(name));
    }
    if with_constant && expr.constant != 0.0 {
        push_term(&mut out, expr.constant, None);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn push_term(out: &mut String, coef: f64, name: Option<&str>) {
    let negative = coef < 0.0;
    if out.is_empty() {
        if negative {
            out.push_str("- ");
        }
    } else {
        out.push_str(if negative { " - " } else { " + " });
    }
    let magnitude = coef.abs();
    match name {
        Some(name) if magnitude == 1.0 => out.push_str(name),
        Some(name) => {
            let _ = write!(out, "{} {}", lp_number(magnitude), name);
        }
        None => out.push_str(&lp_number(magnitude)),
    }
}
