//! Random model generators, model transforms and brute-force oracles shared
//! by the property and acceptance tests. Enabled by the `testkit` feature.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::detequiv::{FirstStage, LinearRow, Scenario, SecondStage, TwoStageSpec};
use crate::model::{Constraint, LinExpr, Model, Objective, ObjectiveSense, Sense, VarKind, Variable};
use crate::solver::{Solution, SolveStatus};

const SENSES: [Sense; 3] = [Sense::Le, Sense::Eq, Sense::Ge];

fn nonzero(rng: &mut impl Rng, lo: i32, hi: i32) -> f64 {
    loop {
        let v = rng.random_range(lo..=hi);
        if v != 0 {
            return v as f64;
        }
    }
}

fn build(vars: Vec<Variable>, cons: Vec<Constraint>, objective: Objective) -> Model {
    Model::new(vars, cons, objective).expect("generator produces valid models")
}

/// Small LP with integer data: `n` nonnegative variables (some upper-bounded
/// or free) and up to `max_cons` rows of mixed sense.
pub fn random_lp(rng: &mut impl Rng, max_vars: usize, max_cons: usize) -> Model {
    let n = rng.random_range(1..=max_vars);
    let m = rng.random_range(1..=max_cons);
    let vars: Vec<Variable> = (0..n)
        .map(|j| {
            let v = Variable::new(format!("x{j}"));
            match rng.random_range(0..6) {
                0 => v.bounded(0.0, rng.random_range(1..=8) as f64),
                1 => Variable::free(format!("x{j}")),
                _ => v,
            }
        })
        .collect();
    let cons = (0..m)
        .map(|i| {
            let mut lhs = LinExpr::new();
            for v in &vars {
                if rng.random_bool(0.7) {
                    lhs.add_term(v.name.clone(), nonzero(rng, -5, 5));
                }
            }
            if lhs.is_empty() {
                lhs.add_term(vars[0].name.clone(), 1.0);
            }
            Constraint::new(format!("r{i}"), lhs, SENSES[rng.random_range(0..3)], rng.random_range(-10..=10) as f64)
        })
        .collect();
    let mut obj = LinExpr::new();
    for v in &vars {
        let c = rng.random_range(-5..=5);
        if c != 0 {
            obj.add_term(v.name.clone(), c as f64);
        }
    }
    let objective = if rng.random_bool(0.5) { Objective::minimize(obj) } else { Objective::maximize(obj) };
    build(vars, cons, objective)
}

/// Pure binary program with integer data and up to `max_vars` variables.
pub fn random_binary_mip(rng: &mut impl Rng, max_vars: usize, max_cons: usize) -> Model {
    let n = rng.random_range(1..=max_vars);
    let m = rng.random_range(1..=max_cons);
    let vars: Vec<Variable> = (0..n).map(|j| Variable::binary(format!("b{j}"))).collect();
    let cons = (0..m)
        .map(|i| {
            let mut lhs = LinExpr::new();
            for v in &vars {
                if rng.random_bool(0.6) {
                    lhs.add_term(v.name.clone(), nonzero(rng, -6, 9));
                }
            }
            if lhs.is_empty() {
                lhs.add_term(vars[0].name.clone(), 1.0);
            }
            let sense = [Sense::Le, Sense::Le, Sense::Ge, Sense::Eq][rng.random_range(0..4)];
            Constraint::new(format!("k{i}"), lhs, sense, rng.random_range(-2..=12) as f64)
        })
        .collect();
    let mut obj = LinExpr::new();
    for v in &vars {
        obj.add_term(v.name.clone(), nonzero(rng, -9, 9));
    }
    let objective = if rng.random_bool(0.5) { Objective::minimize(obj) } else { Objective::maximize(obj) };
    build(vars, cons, objective)
}

/// Values with at most six significant digits, so LP text reproduces them exactly.
fn short_value(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..4) {
        0 => rng.random_range(-20..=20) as f64,
        1 => rng.random_range(-80..=80) as f64 / 8.0,
        2 => rng.random_range(-999_999..=999_999) as f64 / 1000.0,
        _ => rng.random_range(1..=99) as f64 / 10_000.0,
    }
}

/// Model exercising every feature the LP writer supports: all variable kinds,
/// finite/infinite/fixed bounds, every sense and an objective constant.
pub fn random_model(rng: &mut impl Rng) -> Model {
    let stems = ["x", "flow_", "qty", "y", "Stock", "z_"];
    let n = rng.random_range(1..=8);
    let vars: Vec<Variable> = (0..n)
        .map(|j| {
            let name = format!("{}{}", stems[rng.random_range(0..stems.len())], j);
            match rng.random_range(0..7) {
                0 => Variable::binary(name),
                1 => Variable::integer(name).bounded(rng.random_range(-5..=0) as f64, rng.random_range(1..=9) as f64),
                2 => Variable::free(name),
                3 => Variable::new(name).bounded(f64::NEG_INFINITY, short_value(rng).abs()),
                4 => {
                    let v = short_value(rng);
                    Variable::new(name).bounded(v, v)
                }
                5 => {
                    let lo = short_value(rng);
                    // Every short value is a multiple of 1e-4; stay on that grid.
                    let hi = ((lo * 10_000.0).round() + 10_000.0 * rng.random_range(1..=50) as f64) / 10_000.0;
                    Variable::new(name).bounded(lo, hi)
                }
                _ => Variable::new(name),
            }
        })
        .collect();
    let m = rng.random_range(0..=6);
    let cons = (0..m)
        .map(|i| {
            let mut lhs = LinExpr::new();
            for v in &vars {
                if rng.random_bool(0.5) {
                    let c = short_value(rng);
                    if c != 0.0 {
                        lhs.add_term(v.name.clone(), c);
                    }
                }
            }
            if lhs.is_empty() {
                lhs.add_term(vars[rng.random_range(0..n)].name.clone(), 1.0);
            }
            Constraint::new(format!("c{i}_{}", rng.random_range(0..100)), lhs, SENSES[rng.random_range(0..3)], short_value(rng))
        })
        .collect();
    let mut obj = LinExpr::new();
    for v in &vars {
        if rng.random_bool(0.6) {
            let c = short_value(rng);
            if c != 0.0 {
                obj.add_term(v.name.clone(), c);
            }
        }
    }
    if rng.random_bool(0.3) {
        obj.constant = short_value(rng);
    }
    let mut objective = if rng.random_bool(0.5) { Objective::minimize(obj) } else { Objective::maximize(obj) };
    if rng.random_bool(0.3) {
        objective.name = "cost".into();
    }
    build(vars, cons, objective)
}

/// Model whose variables all have distinguishable structure (distinct
/// coefficients), so greedy matching is unambiguous.
pub fn generic_model(rng: &mut impl Rng) -> Model {
    let n = rng.random_range(2..=6);
    let m = rng.random_range(1..=6);
    let mut pool: Vec<i32> = (1..=60).collect();
    pool.shuffle(rng);
    let mut next = pool.into_iter();
    let mut signed = |rng: &mut dyn rand::RngCore| {
        let v = next.next().expect("pool is large enough") as f64;
        if rng.random_bool(0.3) {
            -v
        } else {
            v
        }
    };
    let vars: Vec<Variable> = (0..n)
        .map(|j| match j % 3 {
            0 => Variable::new(format!("v{j}")),
            1 => Variable::new(format!("v{j}")).bounded(0.0, (10 + j) as f64),
            _ => Variable::integer(format!("v{j}")).bounded(0.0, 20.0),
        })
        .collect();
    let cons = (0..m)
        .map(|i| {
            let mut lhs = LinExpr::new();
            for v in &vars {
                if rng.random_bool(0.6) {
                    lhs.add_term(v.name.clone(), signed(rng));
                }
            }
            if lhs.is_empty() {
                lhs.add_term(vars[i % n].name.clone(), signed(rng));
            }
            Constraint::new(format!("g{i}"), lhs, SENSES[rng.random_range(0..3)], rng.random_range(1..=40) as f64)
        })
        .collect();
    let mut obj = LinExpr::new();
    for v in &vars {
        obj.add_term(v.name.clone(), signed(rng));
    }
    build(vars, cons, Objective::minimize(obj))
}

/// A plausible imperfect formulation of `truth`: a few rows dropped or
/// perturbed, an objective coefficient changed, maybe an extra variable.
pub fn perturb(rng: &mut impl Rng, truth: &Model) -> Model {
    let (mut vars, cons, mut objective) = truth.clone().into_parts();
    let mut out = Vec::new();
    for c in cons {
        match rng.random_range(0..6) {
            0 => {}
            1 => {
                let mut c = c;
                c.rhs += 1.0;
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    if rng.random_bool(0.5) {
        if let Some((_, coef)) = objective.expr.terms.iter_mut().next() {
            *coef += 0.5;
        }
    }
    if rng.random_bool(0.5) {
        vars.push(Variable::new("aux"));
        let mut lhs = LinExpr::new().with("aux", 1.0);
        lhs.add_term(vars[0].name.clone(), -1.0);
        out.push(Constraint::new("aux_link", lhs, Sense::Le, 3.0));
    }
    build(vars, out, objective)
}

pub fn shuffle_constraints(rng: &mut impl Rng, model: &Model) -> Model {
    let (vars, mut cons, obj) = model.clone().into_parts();
    cons.shuffle(rng);
    build(vars, cons, obj)
}

/// Applies a random bijective renaming; returns the model and old → new names.
pub fn rename_randomly(rng: &mut impl Rng, model: &Model) -> (Model, BTreeMap<String, String>) {
    let mut ids: Vec<usize> = (0..model.variables().len()).collect();
    ids.shuffle(rng);
    let map: BTreeMap<String, String> =
        model.variables().iter().zip(ids).map(|(v, k)| (v.name.clone(), format!("n{k}_{}", rng.random_range(0..1000)))).collect();
    let rename = |e: &LinExpr| LinExpr { terms: e.terms.iter().map(|(k, c)| (map[k].clone(), *c)).collect(), constant: e.constant };
    let vars = model.variables().iter().map(|v| Variable { name: map[&v.name].clone(), ..v.clone() }).collect();
    let cons = model.constraints().iter().map(|c| Constraint { lhs: rename(&c.lhs), ..c.clone() }).collect();
    let obj = Objective { expr: rename(&model.objective().expr), ..model.objective().clone() };
    (build(vars, cons, obj), map)
}

/// Multiplies one random constraint by a positive factor.
pub fn scale_constraint(rng: &mut impl Rng, model: &Model) -> Model {
    let (vars, mut cons, obj) = model.clone().into_parts();
    if !cons.is_empty() {
        let i = rng.random_range(0..cons.len());
        let f = [0.5, 2.0, 3.0, 7.25, 1e-3, 1e3][rng.random_range(0..6)];
        cons[i].lhs.scale(f);
        cons[i].rhs *= f;
    }
    build(vars, cons, obj)
}

/// Negates one random inequality and flips its sense.
pub fn flip_inequality(rng: &mut impl Rng, model: &Model) -> Model {
    let (vars, mut cons, obj) = model.clone().into_parts();
    let candidates: Vec<usize> = (0..cons.len()).filter(|&i| cons[i].sense != Sense::Eq).collect();
    if let Some(&i) = candidates.get(rng.random_range(0..candidates.len().max(1))) {
        cons[i].lhs.scale(-1.0);
        cons[i].rhs = -cons[i].rhs;
        cons[i].sense = cons[i].sense.flipped();
    }
    build(vars, cons, obj)
}

/// Random dimension-consistent two-stage spec (stochastic).
pub fn random_two_stage(rng: &mut impl Rng) -> TwoStageSpec {
    let n1 = rng.random_range(1..=4);
    let n2 = rng.random_range(0..=4);
    let m1 = rng.random_range(0..=3);
    let m2 = rng.random_range(0..=4);
    let s = rng.random_range(1..=5);
    let row = |rng: &mut dyn rand::RngCore, len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-5..=5) as f64).collect() };
    let weights: Vec<u32> = (0..s).map(|_| rng.random_range(1..=9)).collect();
    let total: u32 = weights.iter().sum();
    TwoStageSpec {
        first_stage: FirstStage {
            vars: (0..n1).map(|j| format!("x{j}")).collect(),
            cost: row(rng, n1),
            rows: (0..m1)
                .map(|i| LinearRow {
                    name: format!("a{i}"),
                    coeffs: row(rng, n1),
                    sense: SENSES[rng.random_range(0..3)],
                    rhs: rng.random_range(-5..=5) as f64,
                })
                .collect(),
        },
        second_stage: SecondStage {
            vars: (0..n2).map(|j| format!("y{j}")).collect(),
            rows: (0..m2).map(|i| format!("r{i}")).collect(),
            senses: None,
        },
        scenarios: weights
            .iter()
            .map(|&w| Scenario {
                probability: w as f64 / total as f64,
                cost: row(rng, n2),
                recourse: (0..m2).map(|_| row(rng, n2)).collect(),
                technology: (0..m2).map(|_| row(rng, n1)).collect(),
                rhs: row(rng, m2),
            })
            .collect(),
        deterministic: false,
    }
}

// ---------------------------------------------------------------------------
// Oracles

fn dense(model: &Model) -> (Vec<Vec<f64>>, Vec<Sense>, Vec<f64>, Vec<f64>, f64) {
    let n = model.variables().len();
    let mut a = Vec::new();
    let mut senses = Vec::new();
    let mut b = Vec::new();
    for c in model.constraints() {
        let mut row = vec![0.0; n];
        for (k, v) in &c.lhs.terms {
            row[model.var_index(k).unwrap()] = *v;
        }
        a.push(row);
        senses.push(c.sense);
        b.push(c.rhs - c.lhs.constant);
    }
    let mut cost = vec![0.0; n];
    for (k, v) in &model.objective().expr.terms {
        cost[model.var_index(k).unwrap()] = *v;
    }
    (a, senses, b, cost, model.objective().expr.constant)
}

/// Solves the square system by Gaussian elimination with partial pivoting.
fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[p][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, p);
        rhs.swap(col, p);
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            if f != 0.0 {
                for k in col..n {
                    m[i][k] -= f * m[col][k];
                }
                rhs[i] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (rhs[i] - s) / m[i][i];
    }
    Some(x)
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if acc.len() == k {
            f(acc);
            return;
        }
        for i in start..n {
            if n - i < k - acc.len() {
                break;
            }
            acc.push(i);
            rec(i + 1, n, k, acc, f);
            acc.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Best vertex of `model` intersected with the box `|x_j| <= big`.
fn boxed_optimum(model: &Model, big: f64) -> Option<f64> {
    let n = model.variables().len();
    let (a, senses, b, cost, constant) = dense(model);
    let mut planes: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    let mut all_a = a.clone();
    let mut all_s = senses.clone();
    let mut all_b = b.clone();
    for (j, v) in model.variables().iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let lo = if v.lower.is_finite() { v.lower } else { -big };
        let hi = if v.upper.is_finite() { v.upper } else { big };
        for (bound, sense) in [(lo, Sense::Ge), (hi, Sense::Le)] {
            planes.push((e.clone(), bound));
            all_a.push(e.clone());
            all_s.push(sense);
            all_b.push(bound);
        }
    }
    let maximize = model.objective().sense == ObjectiveSense::Maximize;
    let mut best: Option<f64> = None;
    for_each_subset(planes.len(), n, &mut |idx| {
        let m = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let r = idx.iter().map(|&i| planes[i].1).collect();
        let Some(x) = solve_square(m, r) else { return };
        let feasible = all_a.iter().zip(&all_s).zip(&all_b).all(|((row, s), rhs)| {
            let lhs: f64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
            let tol = 1e-7 * (1.0 + rhs.abs());
            match s {
                Sense::Le => lhs <= rhs + tol,
                Sense::Ge => lhs >= rhs - tol,
                Sense::Eq => (lhs - rhs).abs() <= tol,
            }
        });
        if feasible {
            let obj: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>() + constant;
            best = Some(match best {
                None => obj,
                Some(b) if maximize => b.max(obj),
                Some(b) => b.min(obj),
            });
        }
    });
    best
}

/// LP optimum by vertex enumeration. Unboundedness is detected by growing
/// the artificial box and watching the optimum move.
pub fn vertex_enumeration(model: &Model) -> Solution {
    let (Some(small), Some(large)) = (boxed_optimum(model, 1e7), boxed_optimum(model, 2e7)) else {
        return Solution::without_point(SolveStatus::Infeasible);
    };
    if (small - large).abs() > 1e-6 * small.abs().max(1.0) {
        return Solution::without_point(SolveStatus::Unbounded);
    }
    Solution { status: SolveStatus::Optimal, objective: Some(small), values: BTreeMap::new() }
}

/// Exhaustive search over all 0/1 assignments of a pure binary model.
pub fn binary_enumeration(model: &Model) -> Solution {
    let n = model.variables().len();
    assert!(n <= 20 && model.variables().iter().all(|v| v.kind == VarKind::Binary));
    let maximize = model.objective().sense == ObjectiveSense::Maximize;
    let mut best: Option<(f64, BTreeMap<String, f64>)> = None;
    for mask in 0u32..(1 << n) {
        let values: BTreeMap<String, f64> = model
            .variables()
            .iter()
            .enumerate()
            .map(|(j, v)| (v.name.clone(), f64::from((mask >> j) & 1)))
            .collect();
        if !model.constraints().iter().all(|c| c.is_satisfied(&values, 0.0)) {
            continue;
        }
        let obj = model.objective_value(&values);
        let better = match &best {
            None => true,
            Some((b, _)) => (maximize && obj > *b) || (!maximize && obj < *b),
        };
        if better {
            best = Some((obj, values));
        }
    }
    match best {
        Some((obj, values)) => Solution { status: SolveStatus::Optimal, objective: Some(obj), values },
        None => Solution::without_point(SolveStatus::Infeasible),
    }
}
