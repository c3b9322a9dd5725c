//! Dense two-phase tableau simplex with Bland's anti-cycling rule.

use super::{LpData, SolveError, FEASIBILITY_TOL, OPTIMALITY_TOL, PIVOT_TOL};
use crate::model::Sense;

#[derive(Debug, Clone)]
pub(crate) enum Outcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// How a structural variable is expressed through nonnegative columns:
/// `x = offset + sum(sign * col)`.
#[derive(Debug, Clone)]
struct Mapping {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    /// `rows x (cols + 1)`; the last entry of each row is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    /// Columns that may never enter the basis (retired artificials).
    blocked: Vec<bool>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.ncols]
    }

    fn pivot(&mut self, row: usize, col: usize, z: &mut [f64]) {
        let width = self.ncols + 1;
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        self.t[row][col] = 1.0;
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for k in 0..width {
                    r[k] -= f * pivot_row[k];
                    if r[k].abs() < 1e-14 {
                        r[k] = 0.0;
                    }
                }
                r[col] = 0.0;
            }
        }
        let f = z[col];
        if f != 0.0 {
            for k in 0..width {
                z[k] -= f * pivot_row[k];
            }
            z[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Reduced-cost row for `cost` under the current basis; the last entry
    /// holds minus the objective value.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = cost.iter().copied().chain(std::iter::once(0.0)).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (k, v) in self.t[i].iter().enumerate() {
                    z[k] -= cb * v;
                }
            }
        }
        z
    }

    fn run(&mut self, z: &mut [f64], max_iter: usize) -> Result<Phase, SolveError> {
        for _ in 0..max_iter {
            // Bland: lowest-index improving column.
            let Some(col) = (0..self.ncols).find(|&j| !self.blocked[j] && z[j] < -OPTIMALITY_TOL) else {
                return Ok(Phase::Optimal);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][col];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((row, _)) = best else {
                return Ok(Phase::Unbounded);
            };
            self.pivot(row, col, z);
        }
        Err(SolveError::NumericBreakdown(format!("no convergence after {max_iter} pivots")))
    }
}

pub(crate) fn solve(data: &LpData, lower: &[f64], upper: &[f64]) -> Result<Outcome, SolveError> {
    let n = data.names.len();
    for j in 0..n {
        if lower[j] > upper[j] + FEASIBILITY_TOL {
            return Ok(Outcome::Infeasible);
        }
    }

    // Substitute bounds so every column is nonnegative.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lower[j], upper[j]);
        let map = if l.is_finite() && u.is_finite() && (u - l).abs() <= FEASIBILITY_TOL {
            Mapping { offset: l, cols: vec![] }
        } else if l.is_finite() {
            let col = ncols;
            ncols += 1;
            if u.is_finite() {
                bound_rows.push((col, u - l));
            }
            Mapping { offset: l, cols: vec![(col, 1.0)] }
        } else if u.is_finite() {
            ncols += 1;
            Mapping { offset: u, cols: vec![(ncols - 1, -1.0)] }
        } else {
            ncols += 2;
            Mapping { offset: 0.0, cols: vec![(ncols - 2, 1.0), (ncols - 1, -1.0)] }
        };
        maps.push(map);
    }
    let nstruct = ncols;

    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(data.rows.len() + bound_rows.len());
    for (coefs, sense, rhs) in &data.rows {
        let mut row = vec![0.0; nstruct];
        let mut b = *rhs;
        for (j, a) in coefs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            b -= a * maps[j].offset;
            for &(col, sign) in &maps[j].cols {
                row[col] += a * sign;
            }
        }
        if row.iter().all(|v| *v == 0.0) {
            let ok = match sense {
                Sense::Le => b >= -FEASIBILITY_TOL,
                Sense::Ge => b <= FEASIBILITY_TOL,
                Sense::Eq => b.abs() <= FEASIBILITY_TOL,
            };
            if !ok {
                return Ok(Outcome::Infeasible);
            }
            continue;
        }
        rows.push((row, *sense, b));
    }
    for (col, width) in bound_rows {
        let mut row = vec![0.0; nstruct];
        row[col] = 1.0;
        rows.push((row, Sense::Le, width));
    }

    let mut cost = vec![0.0; nstruct];
    let mut constant = data.constant;
    for j in 0..n {
        constant += data.cost[j] * maps[j].offset;
        for &(col, sign) in &maps[j].cols {
            cost[col] += data.cost[j] * sign;
        }
    }

    // Normalize to nonnegative right-hand sides, then add slack/surplus and artificial columns.
    for (row, sense, b) in rows.iter_mut() {
        if *b < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
            *sense = sense.flipped();
        }
    }
    let m = rows.len();
    let nslack = rows.iter().filter(|(_, s, _)| *s != Sense::Eq).count();
    let nart = rows.iter().filter(|(_, s, _)| *s != Sense::Le).count();
    let total = nstruct + nslack + nart;
    let mut t = vec![vec![0.0; total + 1]; m];
    let mut basis = vec![0; m];
    let mut is_art = vec![false; total];
    let (mut next_slack, mut next_art) = (nstruct, nstruct + nslack);
    for (i, (row, sense, b)) in rows.iter().enumerate() {
        t[i][..nstruct].copy_from_slice(row);
        t[i][total] = *b;
        match sense {
            Sense::Le => {
                t[i][next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t[i][next_slack] = -1.0;
                next_slack += 1;
                t[i][next_art] = 1.0;
                basis[i] = next_art;
                is_art[next_art] = true;
                next_art += 1;
            }
            Sense::Eq => {
                t[i][next_art] = 1.0;
                basis[i] = next_art;
                is_art[next_art] = true;
                next_art += 1;
            }
        }
    }

    let mut tab = Tableau { t, basis, ncols: total, blocked: vec![false; total] };
    let max_iter = 50 * (m + total) + 1000;
    let bscale = 1.0 + rows.iter().map(|(_, _, b)| b.abs()).fold(0.0, f64::max);

    if nart > 0 {
        let phase1_cost: Vec<f64> = is_art.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        let mut z = tab.reduced_costs(&phase1_cost);
        tab.run(&mut z, max_iter)?;
        let infeasibility = -z[total];
        if infeasibility > FEASIBILITY_TOL * bscale {
            return Ok(Outcome::Infeasible);
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.t.len() {
            if is_art[tab.basis[i]] {
                let col = (0..total)
                    .filter(|&j| !is_art[j])
                    .max_by(|&a, &b| tab.t[i][a].abs().total_cmp(&tab.t[i][b].abs()))
                    .filter(|&j| tab.t[i][j].abs() > 1e-9);
                match col {
                    Some(j) => {
                        tab.pivot(i, j, &mut z);
                    }
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for (j, &a) in is_art.iter().enumerate() {
            tab.blocked[j] = a;
        }
    }

    let mut full_cost = vec![0.0; total];
    full_cost[..nstruct].copy_from_slice(&cost);
    let mut z = tab.reduced_costs(&full_cost);
    if let Phase::Unbounded = tab.run(&mut z, max_iter)? {
        return Ok(Outcome::Unbounded);
    }

    let mut cols = vec![0.0; total];
    for (i, &b) in tab.basis.iter().enumerate() {
        cols[b] = tab.rhs(i);
    }
    let x: Vec<f64> = (0..n)
        .map(|j| {
            let raw = maps[j].offset + maps[j].cols.iter().map(|&(c, s)| s * cols[c]).sum::<f64>();
            clamp_to_bounds(raw, lower[j], upper[j])
        })
        .collect();
    let objective = -z[total] + constant;

    for (coefs, sense, rhs) in &data.rows {
        let lhs: f64 = coefs.iter().zip(&x).map(|(a, v)| a * v).sum();
        let slack = 1e-6 * (1.0 + rhs.abs());
        let ok = match sense {
            Sense::Le => lhs <= rhs + slack,
            Sense::Ge => lhs >= rhs - slack,
            Sense::Eq => (lhs - rhs).abs() <= slack,
        };
        if !ok {
            return Err(SolveError::NumericBreakdown(format!(
                "optimal basis violates a row by {:.3e}",
                (lhs - rhs).abs()
            )));
        }
    }
    Ok(Outcome::Optimal { x, objective })
}

fn clamp_to_bounds(v: f64, lower: f64, upper: f64) -> f64 {
    if v < lower && lower - v <= 1e-7 {
        lower
    } else if v > upper && v - upper <= 1e-7 {
        upper
    } else {
        v
    }
}
