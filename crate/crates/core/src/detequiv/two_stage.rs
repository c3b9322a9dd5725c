use super::{DetEquivError, LinearRow, TwoStageSpec, PROBABILITY_TOL};
use crate::model::{Constraint, LinExpr, Model, Objective, Variable};

/// Name of an entity replicated for scenario `index` (0-based).
pub fn scenario_name(base: &str, index: usize) -> String {
    format!("{base}__s{}", index + 1)
}

fn mismatch(what: impl Into<String>) -> DetEquivError {
    DetEquivError::DimensionMismatch(what.into())
}

fn check_len(what: &str, got: usize, want: usize) -> Result<(), DetEquivError> {
    if got == want {
        Ok(())
    } else {
        Err(mismatch(format!("{what} has length {got}, expected {want}")))
    }
}

fn check_finite(what: &str, values: &[f64]) -> Result<(), DetEquivError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(DetEquivError::InvalidSpec(format!("{what} contains non-finite value {v}"))),
        None => Ok(()),
    }
}

fn check_linear_row(row: &LinearRow, nvars: usize) -> Result<(), DetEquivError> {
    check_len(&format!("row {}", row.name), row.coeffs.len(), nvars)?;
    check_finite(&format!("row {}", row.name), &row.coeffs)?;
    check_finite(&format!("row {}", row.name), &[row.rhs])
}

impl TwoStageSpec {
    /// Checks every dimension and the probability vector.
    pub fn validate(&self) -> Result<(), DetEquivError> {
        let fs = &self.first_stage;
        let n1 = fs.vars.len();
        let n2 = self.second_stage.vars.len();
        let m2 = self.second_stage.rows.len();
        check_len("first-stage cost", fs.cost.len(), n1)?;
        check_finite("first-stage cost", &fs.cost)?;
        for row in &fs.rows {
            check_linear_row(row, n1)?;
        }
        if let Some(senses) = &self.second_stage.senses {
            check_len("second-stage senses", senses.len(), m2)?;
        }
        if self.scenarios.is_empty() {
            return Err(DetEquivError::ProbabilityError("no scenarios".into()));
        }
        if self.deterministic && self.scenarios.len() != 1 {
            return Err(DetEquivError::InvalidSpec(format!(
                "a deterministic problem carries exactly one scenario, found {}",
                self.scenarios.len()
            )));
        }
        for (k, s) in self.scenarios.iter().enumerate() {
            let tag = format!("scenario {}", k + 1);
            check_len(&format!("{tag} cost"), s.cost.len(), n2)?;
            check_finite(&format!("{tag} cost"), &s.cost)?;
            check_len(&format!("{tag} recourse rows"), s.recourse.len(), m2)?;
            check_len(&format!("{tag} technology rows"), s.technology.len(), m2)?;
            check_len(&format!("{tag} rhs"), s.rhs.len(), m2)?;
            check_finite(&format!("{tag} rhs"), &s.rhs)?;
            for i in 0..m2 {
                check_len(&format!("{tag} recourse row {}", i + 1), s.recourse[i].len(), n2)?;
                check_len(&format!("{tag} technology row {}", i + 1), s.technology[i].len(), n1)?;
                check_finite(&format!("{tag} recourse"), &s.recourse[i])?;
                check_finite(&format!("{tag} technology"), &s.technology[i])?;
            }
            if !(s.probability >= 0.0 && s.probability <= 1.0) {
                return Err(DetEquivError::ProbabilityError(format!("{tag} has probability {}", s.probability)));
            }
        }
        let total: f64 = self.scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(DetEquivError::ProbabilityError(format!("probabilities sum to {total}")));
        }
        Ok(())
    }
}

fn first_stage_parts(spec: &TwoStageSpec) -> (Vec<Variable>, Vec<Constraint>, LinExpr) {
    let fs = &spec.first_stage;
    let vars = fs.vars.iter().map(Variable::new).collect();
    let rows = fs
        .rows
        .iter()
        .map(|r| {
            let lhs = dot(&fs.vars, &r.coeffs, |n| n.to_string());
            Constraint::new(r.name.clone(), lhs, r.sense, r.rhs)
        })
        .collect();
    let objective = dot(&fs.vars, &fs.cost, |n| n.to_string());
    (vars, rows, objective)
}

fn dot(names: &[String], coeffs: &[f64], rename: impl Fn(&str) -> String) -> LinExpr {
    let mut expr = LinExpr::new();
    for (name, &c) in names.iter().zip(coeffs) {
        if c != 0.0 {
            expr.add_term(rename(name), c);
        }
    }
    expr
}

/// Recourse row `recourse·y - technology·x (sense) rhs` for one scenario.
fn recourse_row(spec: &TwoStageSpec, k: usize, i: usize, rename: impl Fn(&str) -> String + Copy) -> Constraint {
    let s = &spec.scenarios[k];
    let mut lhs = dot(&spec.second_stage.vars, &s.recourse[i], rename);
    for (name, &t) in spec.first_stage.vars.iter().zip(&s.technology[i]) {
        if t != 0.0 {
            lhs.add_term(name.clone(), -t);
        }
    }
    lhs.prune();
    Constraint::new(rename(&spec.second_stage.rows[i]), lhs, spec.second_stage.sense(i), s.rhs[i])
}

/// Extensive form of a stochastic two-stage problem.
///
/// Second-stage variables and rows are replicated once per scenario with a
/// `__s<k>` suffix (1-based); the objective is the first-stage cost plus the
/// probability-weighted second-stage costs.
pub fn build_extensive_form(spec: &TwoStageSpec) -> Result<Model, DetEquivError> {
    if spec.deterministic {
        return Err(DetEquivError::InvalidSpec("deterministic problems are flattened, not expanded".into()));
    }
    spec.validate()?;
    let (mut vars, mut rows, mut objective) = first_stage_parts(spec);
    for (k, s) in spec.scenarios.iter().enumerate() {
        let rename = |n: &str| scenario_name(n, k);
        vars.extend(spec.second_stage.vars.iter().map(|n| Variable::new(rename(n))));
        for (name, &q) in spec.second_stage.vars.iter().zip(&s.cost) {
            let w = s.probability * q;
            if w != 0.0 {
                objective.add_term(rename(name), w);
            }
        }
        for i in 0..spec.second_stage.rows.len() {
            rows.push(recourse_row(spec, k, i, rename));
        }
    }
    objective.prune();
    Ok(Model::new(vars, rows, Objective::minimize(objective))?)
}

/// Single-stage model of a deterministic two-stage problem; names are kept.
pub fn flatten_dlp2(spec: &TwoStageSpec) -> Result<Model, DetEquivError> {
    if !spec.deterministic {
        return Err(DetEquivError::InvalidSpec("only deterministic problems can be flattened".into()));
    }
    spec.validate()?;
    let (mut vars, mut rows, mut objective) = first_stage_parts(spec);
    let s = &spec.scenarios[0];
    let keep = |n: &str| n.to_string();
    vars.extend(spec.second_stage.vars.iter().map(Variable::new));
    for (name, &q) in spec.second_stage.vars.iter().zip(&s.cost) {
        if q != 0.0 {
            objective.add_term(name.clone(), q);
        }
    }
    for i in 0..spec.second_stage.rows.len() {
        rows.push(recourse_row(spec, 0, i, keep));
    }
    objective.prune();
    Ok(Model::new(vars, rows, Objective::minimize(objective))?)
}
