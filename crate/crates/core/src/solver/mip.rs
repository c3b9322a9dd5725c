use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::simplex::{self, Outcome};
use super::{LpData, Solution, SolveError, SolveStatus, INTEGRALITY_TOL};
use crate::model::Model;

struct Node {
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Index of the most fractional integer variable, if any.
fn branching_variable(x: &[f64], integral: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (&v, &is_int)) in x.iter().zip(integral).enumerate() {
        if !is_int {
            continue;
        }
        let frac = v - v.floor();
        let dist = frac.min(1.0 - frac);
        if dist > INTEGRALITY_TOL && best.is_none_or(|(_, d)| dist > d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

/// Best-first branch-and-bound over the LP relaxation.
///
/// Branches on the most fractional integer variable. When `node_limit` LP
/// relaxations have been processed the search stops with status `node_limit`,
/// carrying the incumbent if one was found.
pub fn solve_mip(model: &Model, node_limit: usize) -> Result<Solution, SolveError> {
    let data = LpData::from_model(model);
    let mut lower = data.lower.clone();
    let mut upper = data.upper.clone();
    for j in 0..lower.len() {
        if data.integral[j] {
            lower[j] = lower[j].ceil();
            upper[j] = upper[j].floor();
        }
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let mut processed = 0;
    match simplex::solve(&data, &lower, &upper)? {
        Outcome::Infeasible => return Ok(Solution::without_point(SolveStatus::Infeasible)),
        Outcome::Unbounded => return Ok(Solution::without_point(SolveStatus::Unbounded)),
        Outcome::Optimal { x, objective } => {
            processed += 1;
            heap.push(Node { bound: objective, seq, lower, upper, x });
        }
    }

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let prunable = |bound: f64, inc: &Option<(f64, Vec<f64>)>| {
        inc.as_ref().is_some_and(|(best, _)| bound >= best - 1e-9 * best.abs().max(1.0))
    };

    let mut exhausted = false;
    while let Some(node) = heap.pop() {
        if prunable(node.bound, &incumbent) {
            continue;
        }
        let Some(j) = branching_variable(&node.x, &data.integral) else {
            incumbent = Some((node.bound, node.x));
            continue;
        };
        if processed >= node_limit {
            exhausted = true;
            break;
        }
        let v = node.x[j];
        let children = [(node.lower[j], v.floor()), (v.ceil(), node.upper[j])];
        for (lo, hi) in children {
            if lo > hi {
                continue;
            }
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            lower[j] = lo;
            upper[j] = hi;
            processed += 1;
            if let Outcome::Optimal { x, objective } = simplex::solve(&data, &lower, &upper)? {
                if !prunable(objective, &incumbent) {
                    seq += 1;
                    heap.push(Node { bound: objective, seq, lower, upper, x });
                }
            }
        }
    }

    let status = if exhausted { SolveStatus::NodeLimit } else { SolveStatus::Optimal };
    Ok(match incumbent {
        Some((objective, x)) => {
            let x: Vec<f64> = x
                .iter()
                .zip(&data.integral)
                .map(|(&v, &is_int)| if is_int && (v - v.round()).abs() <= 1e-9 { v.round() } else { v })
                .collect();
            Solution {
                status,
                objective: Some(data.external_objective(objective)),
                values: data.values_map(&x),
            }
        }
        None if exhausted => Solution::without_point(SolveStatus::NodeLimit),
        None => Solution::without_point(SolveStatus::Infeasible),
    })
}
