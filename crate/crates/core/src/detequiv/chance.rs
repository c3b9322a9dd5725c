use super::{normal_quantile, ChanceSpec, Coefficient, DetEquivError, Distribution};
use crate::model::{Constraint, LinExpr, Model, Objective, ObjectiveSense, Sense, Variable};

impl ChanceSpec {
    pub fn validate(&self) -> Result<(), DetEquivError> {
        let n = self.vars.len();
        if self.cost.len() != n {
            return Err(DetEquivError::DimensionMismatch(format!("cost has length {}, expected {n}", self.cost.len())));
        }
        for row in &self.rows {
            if row.coeffs.len() != n {
                return Err(DetEquivError::DimensionMismatch(format!(
                    "row {} has {} coefficients, expected {n}",
                    row.name,
                    row.coeffs.len()
                )));
            }
            match row.rhs {
                Distribution::Normal { mu, sigma } if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) => {
                    return Err(DetEquivError::InvalidSpec(format!("row {}: normal rhs needs finite mu and sigma > 0", row.name)));
                }
                Distribution::Uniform { low, high } if !(low < high) => {
                    return Err(DetEquivError::InvalidSpec(format!("row {}: uniform rhs needs low < high", row.name)));
                }
                _ => {}
            }
            if !self.joint {
                match row.alpha {
                    Some(a) if a > 0.0 && a < 1.0 => {}
                    Some(a) => return Err(DetEquivError::DomainError(a)),
                    None => return Err(DetEquivError::InvalidSpec(format!("row {} has no confidence level", row.name))),
                }
            }
        }
        if self.joint {
            match self.alpha {
                Some(a) if a > 0.0 && a < 1.0 => {}
                Some(a) => return Err(DetEquivError::DomainError(a)),
                None => return Err(DetEquivError::InvalidSpec("joint spec has no confidence level".into())),
            }
        }
        for row in &self.deterministic_rows {
            if row.coeffs.len() != n {
                return Err(DetEquivError::DimensionMismatch(format!(
                    "row {} has {} coefficients, expected {n}",
                    row.name,
                    row.coeffs.len()
                )));
            }
        }
        Ok(())
    }
}

fn linear(vars: &[String], coeffs: impl IntoIterator<Item = f64>) -> LinExpr {
    let mut expr = LinExpr::new();
    for (name, c) in vars.iter().zip(coeffs) {
        if c != 0.0 {
            expr.add_term(name.clone(), c);
        }
    }
    expr
}

/// Deterministic equivalent of individual chance constraints with normal
/// right-hand sides.
///
/// `P(a·x >= d) >= alpha` becomes `a·x >= mu + z(alpha) sigma`;
/// `P(a·x <= d) >= alpha` becomes `a·x <= mu - z(alpha) sigma`.
pub fn reformulate_individual_chance(spec: &ChanceSpec) -> Result<Model, DetEquivError> {
    if spec.joint {
        return Err(DetEquivError::JointNotSupported);
    }
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.rows.len() + spec.deterministic_rows.len());
    for row in &spec.rows {
        let mut coeffs = Vec::with_capacity(row.coeffs.len());
        for c in &row.coeffs {
            match c {
                Coefficient::Fixed(v) => coeffs.push(*v),
                Coefficient::Random(_) => {
                    return Err(DetEquivError::UnsupportedRandomness(format!("row {} has a random coefficient", row.name)));
                }
            }
        }
        let Distribution::Normal { mu, sigma } = row.rhs else {
            return Err(DetEquivError::UnsupportedRandomness(format!("row {} has a non-normal rhs", row.name)));
        };
        let z = normal_quantile(row.alpha.expect("validated"))?;
        let rhs = match row.sense {
            Sense::Ge => mu + z * sigma,
            Sense::Le => mu - z * sigma,
            Sense::Eq => {
                return Err(DetEquivError::UnsupportedRandomness(format!(
                    "row {} equates a decision with a continuous random value",
                    row.name
                )));
            }
        };
        rows.push(Constraint::new(row.name.clone(), linear(&spec.vars, coeffs), row.sense, rhs));
    }
    for row in &spec.deterministic_rows {
        rows.push(Constraint::new(row.name.clone(), linear(&spec.vars, row.coeffs.iter().copied()), row.sense, row.rhs));
    }
    let vars = spec.vars.iter().map(Variable::new).collect();
    let expr = linear(&spec.vars, spec.cost.iter().copied());
    let objective = match spec.sense {
        ObjectiveSense::Minimize => Objective::minimize(expr),
        ObjectiveSense::Maximize => Objective::maximize(expr),
    };
    Ok(Model::new(vars, rows, objective)?)
}
