use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::PairScore;
use crate::model::{Constraint, LinExpr, Model, ModelError, Objective, Variable};

/// Pairs scoring below this total are never matched.
pub const MATCH_FLOOR: f64 = 0.2;

/// Prefix given to generated variables that have no truth counterpart.
pub const EXTRA_PREFIX: &str = "extra__";

/// Totals are compared on a 1e-9 grid so float noise cannot reorder ties.
fn quantized(total: f64) -> i64 {
    (total * 1e9).round() as i64
}

/// Greedy one-to-one matching by descending total; returns generated → truth.
///
/// Ties are broken by truth declaration order, then generated declaration order.
pub fn greedy_match(scores: &[PairScore]) -> BTreeMap<String, String> {
    let mut order: Vec<&PairScore> = scores.iter().filter(|s| s.total >= MATCH_FLOOR).collect();
    order.sort_by(|a, b| {
        quantized(b.total)
            .cmp(&quantized(a.total))
            .then(a.truth_index.cmp(&b.truth_index))
            .then(a.gen_index.cmp(&b.gen_index))
    });
    let mut used_truth = HashSet::new();
    let mut mapping = BTreeMap::new();
    for s in order {
        if mapping.contains_key(&s.gen_var) || used_truth.contains(&s.truth_var) {
            continue;
        }
        used_truth.insert(s.truth_var.clone());
        mapping.insert(s.gen_var.clone(), s.truth_var.clone());
    }
    mapping
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollisionError {
    #[error("`{0}` is mapped but not declared in the generated model")]
    UnknownSource(String),
    #[error("`{a}` and `{b}` would both be renamed to `{target}`")]
    NonInjective { a: String, b: String, target: String },
    #[error("`{target}` is the target of `{from}` but also names an unmatched generated variable")]
    Shadowed { from: String, target: String },
    #[error("renamed model is invalid: {0}")]
    Model(#[from] ModelError),
}

/// Applies `mapping` (generated → truth) and prefixes every unmatched
/// generated variable with [`EXTRA_PREFIX`].
///
/// Fails when two variables would end up with the same name, or when a
/// mapping target already names an unmatched generated variable.
pub fn rename_generated(gen: &Model, mapping: &BTreeMap<String, String>) -> Result<Model, CollisionError> {
    for (source, target) in mapping {
        if target != source && gen.variable(target).is_some() && !mapping.contains_key(target) {
            return Err(CollisionError::Shadowed { from: source.clone(), target: target.clone() });
        }
    }
    apply_renaming(gen, mapping)
}

/// Renaming into the truth namespace; only a non-injective final naming fails.
pub(crate) fn apply_renaming(gen: &Model, mapping: &BTreeMap<String, String>) -> Result<Model, CollisionError> {
    let mut final_names: BTreeMap<String, String> = BTreeMap::new();
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    for source in mapping.keys() {
        if gen.variable(source).is_none() {
            return Err(CollisionError::UnknownSource(source.clone()));
        }
    }
    for v in gen.variables() {
        let target = match mapping.get(&v.name) {
            Some(t) => t.clone(),
            None => format!("{EXTRA_PREFIX}{}", v.name),
        };
        if let Some(prev) = owner.insert(target.clone(), v.name.clone()) {
            return Err(CollisionError::NonInjective { a: prev, b: v.name.clone(), target });
        }
        final_names.insert(v.name.clone(), target);
    }
    let rename_expr = |e: &LinExpr| LinExpr {
        terms: e.terms.iter().map(|(k, c)| (final_names[k].clone(), *c)).collect(),
        constant: e.constant,
    };
    let vars = gen
        .variables()
        .iter()
        .map(|v| Variable { name: final_names[&v.name].clone(), ..v.clone() })
        .collect();
    let cons = gen
        .constraints()
        .iter()
        .map(|c| Constraint { lhs: rename_expr(&c.lhs), ..c.clone() })
        .collect();
    let obj = gen.objective();
    let objective = Objective { expr: rename_expr(&obj.expr), ..obj.clone() };
    Ok(Model::new(vars, cons, objective)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_lp;

    fn pair(t: &str, ti: usize, g: &str, gi: usize, total: f64) -> PairScore {
        PairScore {
            truth_var: t.into(),
            gen_var: g.into(),
            truth_index: ti,
            gen_index: gi,
            subscores: [total; 5],
            total,
        }
    }

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn greedy_takes_best_first() {
        let scores = [pair("a", 0, "x", 0, 0.9), pair("a", 0, "y", 1, 0.8), pair("b", 1, "y", 1, 0.7)];
        assert_eq!(greedy_match(&scores), map(&[("x", "a"), ("y", "b")]));
    }

    #[test]
    fn floor_rejects_weak_pairs() {
        assert!(greedy_match(&[pair("a", 0, "x", 0, 0.19)]).is_empty());
        assert_eq!(greedy_match(&[pair("a", 0, "x", 0, 0.2)]).len(), 1);
    }

    #[test]
    fn ties_follow_declaration_order() {
        let scores = [pair("b", 1, "x", 0, 0.5), pair("a", 0, "x", 0, 0.5)];
        assert_eq!(greedy_match(&scores), map(&[("x", "a")]));
        // Float noise below the quantization grid is a tie too.
        let scores = [pair("b", 1, "x", 0, 0.5 + 1e-12), pair("a", 0, "x", 0, 0.5)];
        assert_eq!(greedy_match(&scores), map(&[("x", "a")]));
    }

    #[test]
    fn renaming() {
        let g = parse_lp("Minimize\n obj: x + y\nSubject To\n c: x - y <= 1\nEnd").unwrap();
        let r = rename_generated(&g, &map(&[("x", "a")])).unwrap();
        let names: Vec<_> = r.variables().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["a", "extra__y"]);
        assert_eq!(r.constraints()[0].lhs.coef("a"), 1.0);
        assert_eq!(r.objective().expr.coef("extra__y"), 1.0);

        let r = rename_generated(&g, &BTreeMap::new()).unwrap();
        assert!(r.variables().iter().all(|v| v.name.starts_with(EXTRA_PREFIX)));

        // Swapping names is a valid bijection.
        let r = rename_generated(&g, &map(&[("x", "y"), ("y", "x")])).unwrap();
        assert_eq!(r.constraints()[0].lhs.coef("y"), 1.0);
    }

    #[test]
    fn collisions() {
        let g = parse_lp("Minimize\n obj: x + a\nSubject To\n c: x - a <= 1\nEnd").unwrap();
        assert!(matches!(rename_generated(&g, &map(&[("x", "a")])), Err(CollisionError::Shadowed { .. })));
        assert!(matches!(
            rename_generated(&g, &map(&[("x", "t"), ("a", "t")])),
            Err(CollisionError::NonInjective { .. })
        ));
        assert!(matches!(rename_generated(&g, &map(&[("q", "t")])), Err(CollisionError::UnknownSource(_))));
        // Final-namespace clash with the extra prefix.
        assert!(matches!(
            rename_generated(&g, &map(&[("x", "extra__a")])),
            Err(CollisionError::NonInjective { .. })
        ));
    }
}
