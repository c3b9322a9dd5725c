//! Per-variable structural profiles and the five-part pair score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::canonical::rel_close;
use crate::model::{canonicalize_constraint, Model, Sense, VarKind, Variable, CANON_ZERO_TOL, COMPARE_REL_TOL};

/// Sign pattern of a canonical row as seen from one of its variables.
///
/// Equality rows are re-signed so the variable's own coefficient is
/// positive; this keeps the pattern independent of variable names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Shape {
    equality: bool,
    positive: usize,
    negative: usize,
    own_positive: bool,
}

/// A (row, coefficient) incidence, with the row identified by content.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Incidence {
    equality: bool,
    len: usize,
    coef: f64,
    rhs: f64,
}

impl Incidence {
    fn close(&self, other: &Incidence) -> bool {
        self.equality == other.equality
            && self.len == other.len
            && rel_close(self.coef, other.coef, COMPARE_REL_TOL)
            && rel_close(self.rhs, other.rhs, COMPARE_REL_TOL)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct VarProfile {
    kind: VarKind,
    lower: f64,
    upper: f64,
    /// Objective coefficient over the model's largest objective magnitude.
    objective: Option<f64>,
    shapes: BTreeMap<Shape, usize>,
    frequency: usize,
    incidences: Vec<Incidence>,
}

pub(crate) fn profiles(model: &Model) -> Vec<VarProfile> {
    let obj = &model.objective().expr.terms;
    let obj_scale = obj.values().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut out: Vec<VarProfile> = model
        .variables()
        .iter()
        .map(|v| {
            let objective = obj.get(&v.name).filter(|c| **c != 0.0).map(|c| c / obj_scale);
            VarProfile {
                kind: v.kind,
                lower: v.lower,
                upper: v.upper,
                objective,
                shapes: BTreeMap::new(),
                frequency: usize::from(objective.is_some()),
                incidences: Vec::new(),
            }
        })
        .collect();
    for c in model.constraints() {
        let Ok(row) = canonicalize_constraint(c, CANON_ZERO_TOL) else {
            continue;
        };
        let equality = row.sense == Sense::Eq;
        let len = row.lhs.terms.len();
        let pos = row.lhs.terms.values().filter(|c| **c > 0.0).count();
        for (name, &coef) in &row.lhs.terms {
            let j = model.var_index(name).expect("validated model");
            let flip = equality && coef < 0.0;
            let (positive, negative) = if flip { (len - pos, pos) } else { (pos, len - pos) };
            let sign = if flip { -1.0 } else { 1.0 };
            let p = &mut out[j];
            *p.shapes
                .entry(Shape { equality, positive, negative, own_positive: sign * coef > 0.0 })
                .or_insert(0) += 1;
            p.frequency += 1;
            p.incidences.push(Incidence { equality, len, coef: sign * coef, rhs: sign * row.rhs + 0.0 });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub truth_var: String,
    pub gen_var: String,
    /// Declaration positions, used for deterministic tie-breaking.
    pub truth_index: usize,
    pub gen_index: usize,
    /// Bounds/type, constraint structure, objective contribution,
    /// appearance frequency, indexed-term overlap.
    pub subscores: [f64; 5],
    pub total: f64,
}

fn bounds_type(t: &VarProfile, g: &VarProfile) -> f64 {
    let kind = if t.kind == g.kind { 1.0 } else { 0.0 };
    let differing = [(t.lower, g.lower), (t.upper, g.upper)]
        .iter()
        .filter(|(a, b)| !rel_close(*a, *b, COMPARE_REL_TOL))
        .count();
    (kind - 0.25 * differing as f64).max(0.0)
}

fn multiset_jaccard<K: Ord>(a: &BTreeMap<K, usize>, b: &BTreeMap<K, usize>) -> f64 {
    let mut inter = 0;
    let mut union = 0;
    for (k, &ca) in a {
        let cb = b.get(k).copied().unwrap_or(0);
        inter += ca.min(cb);
        union += ca.max(cb);
    }
    union += b.iter().filter(|(k, _)| !a.contains_key(k)).map(|(_, c)| c).sum::<usize>();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn objective_contribution(t: &VarProfile, g: &VarProfile) -> f64 {
    match (t.objective, g.objective) {
        (None, None) => 1.0,
        (Some(a), Some(b)) => (1.0 - (a - b).abs()).clamp(0.0, 1.0),
        _ => 0.0,
    }
}

fn frequency(t: &VarProfile, g: &VarProfile) -> f64 {
    let (a, b) = (t.frequency, g.frequency);
    if a.max(b) == 0 {
        1.0
    } else {
        a.min(b) as f64 / a.max(b) as f64
    }
}

fn term_overlap(t: &VarProfile, g: &VarProfile) -> f64 {
    if t.incidences.is_empty() {
        return if g.incidences.is_empty() { 1.0 } else { 0.0 };
    }
    let mut used = vec![false; g.incidences.len()];
    let mut matched = 0;
    for inc in &t.incidences {
        if let Some(k) = (0..used.len()).find(|&k| !used[k] && inc.close(&g.incidences[k])) {
            used[k] = true;
            matched += 1;
        }
    }
    matched as f64 / t.incidences.len() as f64
}

pub(crate) fn score_profiles(
    truth: (&Variable, usize, &VarProfile),
    gen: (&Variable, usize, &VarProfile),
) -> PairScore {
    let (tv, ti, t) = truth;
    let (gv, gi, g) = gen;
    let subscores = [
        bounds_type(t, g),
        multiset_jaccard(&t.shapes, &g.shapes),
        objective_contribution(t, g),
        frequency(t, g),
        term_overlap(t, g),
    ];
    PairScore {
        truth_var: tv.name.clone(),
        gen_var: gv.name.clone(),
        truth_index: ti,
        gen_index: gi,
        subscores,
        total: subscores.iter().sum::<f64>() / 5.0,
    }
}

/// Scores every truth × generated variable pair.
pub fn score_grid(truth: &Model, gen: &Model) -> Vec<PairScore> {
    let tp = profiles(truth);
    let gp = profiles(gen);
    let mut out = Vec::with_capacity(tp.len() * gp.len());
    for (ti, tv) in truth.variables().iter().enumerate() {
        for (gi, gv) in gen.variables().iter().enumerate() {
            out.push(score_profiles((tv, ti, &tp[ti]), (gv, gi, &gp[gi])));
        }
    }
    out
}

/// Structural similarity of truth variable `vt` and generated variable `vg`.
///
/// # Panics
/// If either name is not declared in its model.
pub fn pair_score(vt: &str, vg: &str, truth: &Model, gen: &Model) -> PairScore {
    let ti = truth.var_index(vt).unwrap_or_else(|| panic!("`{vt}` is not a truth variable"));
    let gi = gen.var_index(vg).unwrap_or_else(|| panic!("`{vg}` is not a generated variable"));
    let tp = profiles(truth);
    let gp = profiles(gen);
    score_profiles((&truth.variables()[ti], ti, &tp[ti]), (&gen.variables()[gi], gi, &gp[gi]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_lp;

    fn lp(text: &str) -> Model {
        parse_lp(text).unwrap()
    }

    #[test]
    fn identical_variables_score_one() {
        let m = lp("Minimize\n obj: 2 x + 3 y\nSubject To\n a: x + y >= 2\n b: x - y = 1\nBounds\n x <= 4\nGenerals\n y\nEnd");
        for v in ["x", "y"] {
            let s = pair_score(v, v, &m, &m);
            assert_eq!(s.subscores, [1.0; 5]);
            assert_eq!(s.total, 1.0);
        }
    }

    #[test]
    fn absent_variable_has_zero_frequency() {
        let t = lp("Minimize\n obj: x\nSubject To\n a: x + y >= 2\n b: x - y <= 1\n c: 2 x + y <= 9\nEnd");
        let g = lp("Minimize\n obj: y\nSubject To\n a: y >= 2\nBounds\n x >= 0\nEnd");
        let s = pair_score("x", "x", &t, &g);
        assert_eq!(s.subscores[3], 0.0);
        assert_eq!(s.subscores[2], 0.0);
    }

    #[test]
    fn kind_mismatch_zeroes_bounds_term() {
        let t = lp("Minimize\n obj: x\nSubject To\nBounds\n 0 <= x <= 1\nEnd");
        let g = lp("Minimize\n obj: x\nSubject To\nBinaries\n x\nEnd");
        assert_eq!(pair_score("x", "x", &t, &g).subscores[0], 0.0);
        let g = lp("Minimize\n obj: x\nSubject To\nBounds\n 0 <= x <= 2\nEnd");
        assert_eq!(pair_score("x", "x", &t, &g).subscores[0], 0.75);
    }

    #[test]
    fn equality_shapes_ignore_names() {
        // Same row written with names that flip the canonical sign convention.
        let t = lp("Minimize\n obj: a\nSubject To\n e: a - b = 1\nEnd");
        let g = lp("Minimize\n obj: z\nSubject To\n e: z - c = 1\nEnd");
        let s = pair_score("a", "z", &t, &g);
        assert_eq!(s.subscores, [1.0; 5]);
    }

    #[test]
    fn multiset_jaccard_counts_multiplicity() {
        let a: BTreeMap<u8, usize> = [(1, 2), (2, 1)].into();
        let b: BTreeMap<u8, usize> = [(1, 1), (3, 1)].into();
        assert_eq!(multiset_jaccard(&a, &b), 1.0 / 4.0);
        assert_eq!(multiset_jaccard::<u8>(&BTreeMap::new(), &BTreeMap::new()), 1.0);
    }
}
