//! Per-group metric means, computed exactly over rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use stochform_core::softscore::METRIC_NAMES;
use thiserror::Error;

use crate::experiment::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKey {
    Model,
    Method,
    Category,
    /// Instance index within its category.
    Instance,
    Problem,
    Run,
}

impl GroupKey {
    pub const ALL: [GroupKey; 6] =
        [GroupKey::Model, GroupKey::Method, GroupKey::Category, GroupKey::Instance, GroupKey::Problem, GroupKey::Run];

    pub fn as_str(self) -> &'static str {
        match self {
            GroupKey::Model => "model",
            GroupKey::Method => "method",
            GroupKey::Category => "category",
            GroupKey::Instance => "instance",
            GroupKey::Problem => "problem",
            GroupKey::Run => "run",
        }
    }

    fn value(self, r: &RunRecord) -> String {
        match self {
            GroupKey::Model => r.cell.model.clone(),
            GroupKey::Method => r.cell.method.to_string(),
            GroupKey::Category => r.category.to_string(),
            GroupKey::Instance => r.instance_index.to_string(),
            GroupKey::Problem => r.cell.problem.clone(),
            GroupKey::Run => r.cell.run.to_string(),
        }
    }

    /// Sort key so numeric values (runs, instances) order numerically.
    fn order(self, v: &str) -> (u64, String) {
        match self {
            GroupKey::Instance | GroupKey::Run => (v.parse().unwrap_or(u64::MAX), String::new()),
            _ => (0, v.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown grouping `{0}` (expected a comma-separated list of model, method, category, instance, problem, run)")]
pub struct GroupingParseError(String);

/// Parses `model`, `method,category`, `model×category` and the like.
pub fn parse_grouping(s: &str) -> Result<Vec<GroupKey>, GroupingParseError> {
    let mut out = Vec::new();
    for part in s.split([',', '×', '+']).map(str::trim) {
        let key = GroupKey::ALL.into_iter().find(|k| k.as_str() == part).ok_or_else(|| GroupingParseError(s.into()))?;
        if out.contains(&key) {
            return Err(GroupingParseError(s.into()));
        }
        out.push(key);
    }
    Ok(out)
}

pub fn grouping_name(grouping: &[GroupKey]) -> String {
    if grouping.is_empty() {
        return "overall".into();
    }
    format!("by_{}", grouping.iter().map(|k| k.as_str()).collect::<Vec<_>>().join("_"))
}

/// Exact rational written as `num/den` (or an integer).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exact(pub BigRational);

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Exact {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (n, d) = s.split_once('/').unwrap_or((s, "1"));
        let n: BigInt = n.parse().map_err(|_| format!("bad rational `{s}`"))?;
        let d: BigInt = d.parse().map_err(|_| format!("bad rational `{s}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        Ok(Exact(BigRational::new(n, d)))
    }
}

impl Serialize for Exact {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    /// Group key values in grouping order.
    pub key: Vec<String>,
    pub cells: u64,
    /// Metric name → mean percentage.
    pub metrics: BTreeMap<String, f64>,
    /// Metric name → exact mean percentage.
    pub exact: BTreeMap<String, Exact>,
}

impl AggregateRow {
    pub fn metric(&self, name: &str) -> f64 {
        self.metrics[name]
    }

    pub fn exact(&self, name: &str) -> &BigRational {
        &self.exact[name].0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub grouping: Vec<GroupKey>,
    pub rows: Vec<AggregateRow>,
}

impl MetricAggregate {
    pub fn name(&self) -> String {
        grouping_name(&self.grouping)
    }

    pub fn row(&self, key: &[&str]) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.key.iter().map(String::as_str).eq(key.iter().copied()))
    }
}

/// Exact per-metric percentages of one scored record.
pub fn record_values(r: &RunRecord) -> Option<[BigRational; 8]> {
    let fr = r.score.as_ref()?.tally.fractions();
    Some(fr.map(|(n, d)| BigRational::new(BigInt::from(n) * 100, BigInt::from(d))))
}

/// Sort key → (display key, cells, metric sums).
type Groups = BTreeMap<Vec<(u64, String)>, (Vec<String>, u64, [BigRational; 8])>;

/// Arithmetic mean of every metric per group. Records without a score
/// (pipeline failures) are skipped; groups without records are absent.
pub fn aggregate(records: &[RunRecord], grouping: &[GroupKey]) -> MetricAggregate {
    let mut groups = Groups::new();
    for r in records {
        let Some(values) = record_values(r) else { continue };
        let key: Vec<String> = grouping.iter().map(|k| k.value(r)).collect();
        let order = grouping.iter().zip(&key).map(|(k, v)| k.order(v)).collect();
        let entry = groups.entry(order).or_insert_with(|| (key, 0, std::array::from_fn(|_| BigRational::zero())));
        entry.1 += 1;
        for (acc, v) in entry.2.iter_mut().zip(values) {
            *acc += v;
        }
    }
    let rows = groups
        .into_values()
        .map(|(key, cells, sums)| {
            let n = BigRational::from_integer(BigInt::from(cells));
            let means = sums.map(|s| s / &n);
            AggregateRow {
                key,
                cells,
                metrics: METRIC_NAMES.iter().zip(&means).map(|(m, v)| (m.to_string(), v.to_f64().unwrap_or(f64::NAN))).collect(),
                exact: METRIC_NAMES.iter().zip(means).map(|(m, v)| (m.to_string(), Exact(v))).collect(),
            }
        })
        .collect();
    MetricAggregate { grouping: grouping.to_vec(), rows }
}
