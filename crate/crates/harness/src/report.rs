//! CSV/JSON renderings of aggregates and the plot-data bundle.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_traits::ToPrimitive;
use serde::Serialize;
use stochform_core::softscore::METRIC_NAMES;
use thiserror::Error;

use crate::aggregate::{aggregate, GroupKey, MetricAggregate};
use crate::experiment::RunRecord;

pub const PLOT_DATA_FILE: &str = "plot_data.json";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Plot series: name → grouping.
pub const PLOT_SERIES: [(&str, &[GroupKey]); 5] = [
    ("per_model_per_category", &[GroupKey::Model, GroupKey::Category]),
    ("per_method_per_category", &[GroupKey::Method, GroupKey::Category]),
    ("per_instance", &[GroupKey::Category, GroupKey::Instance]),
    ("per_method_trend", &[GroupKey::Method, GroupKey::Run]),
    ("per_model_trend", &[GroupKey::Model, GroupKey::Run]),
];

/// Groupings written by a full report: each single key plus the plot series.
pub fn standard_groupings() -> Vec<Vec<GroupKey>> {
    let mut out: Vec<Vec<GroupKey>> = vec![Vec::new()];
    out.extend(
        [GroupKey::Model, GroupKey::Method, GroupKey::Category, GroupKey::Instance, GroupKey::Problem, GroupKey::Run]
            .map(|k| vec![k]),
    );
    out.extend(PLOT_SERIES.iter().map(|(_, g)| g.to_vec()));
    out
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn to_csv(agg: &MetricAggregate) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = agg.grouping.iter().map(|k| k.as_str()).collect();
    header.push("cells");
    header.extend(METRIC_NAMES);
    w.write_record(&header)?;
    for row in &agg.rows {
        let mut fields = row.key.clone();
        fields.push(row.cells.to_string());
        fields.extend(METRIC_NAMES.iter().map(|m| fmt6(row.metric(m))));
        w.write_record(&fields)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io { path: PathBuf::from("<csv>"), source: e.into_error() })?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn to_json(agg: &MetricAggregate) -> Result<String, ReportError> {
    Ok(serde_json::to_string_pretty(agg)? + "\n")
}

/// Loads an aggregate written by [`to_json`]. Float means are rebuilt from
/// the exact values, which are authoritative.
pub fn from_json(text: &str) -> Result<MetricAggregate, ReportError> {
    let mut agg: MetricAggregate = serde_json::from_str(text)?;
    for row in &mut agg.rows {
        for (name, v) in &row.exact {
            row.metrics.insert(name.clone(), v.0.to_f64().unwrap_or(f64::NAN));
        }
    }
    Ok(agg)
}

#[derive(Serialize)]
struct PlotPoint<'a> {
    #[serde(flatten)]
    key: BTreeMap<&'static str, &'a str>,
    cells: u64,
    #[serde(flatten)]
    metrics: BTreeMap<&'static str, String>,
}

/// Plot-data JSON keyed by series name; values carry 6-decimal strings
/// so the file is byte-stable.
pub fn plot_data(records: &[RunRecord]) -> Result<String, ReportError> {
    let mut out: BTreeMap<&str, Vec<PlotPoint>> = BTreeMap::new();
    let aggs: Vec<(&str, MetricAggregate)> = PLOT_SERIES.iter().map(|(n, g)| (*n, aggregate(records, g))).collect();
    for (name, agg) in &aggs {
        let points = agg
            .rows
            .iter()
            .map(|row| PlotPoint {
                key: agg.grouping.iter().map(|k| k.as_str()).zip(row.key.iter().map(String::as_str)).collect(),
                cells: row.cells,
                metrics: METRIC_NAMES.iter().map(|m| (*m, fmt6(row.metric(m)))).collect(),
            })
            .collect();
        out.insert(name, points);
    }
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, ReportError> {
    std::fs::write(&path, text).map_err(|source| ReportError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes `<name>.csv` / `<name>.json` for each aggregate into `dir`.
pub fn emit_report(aggregates: &[MetricAggregate], dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for agg in aggregates {
        for f in formats {
            written.push(match f {
                Format::Csv => write(dir.join(format!("{}.csv", agg.name())), &to_csv(agg)?)?,
                Format::Json => write(dir.join(format!("{}.json", agg.name())), &to_json(agg)?)?,
            });
        }
    }
    Ok(written)
}

/// The standard report set plus plot data.
pub fn emit_full_report(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let aggs: Vec<MetricAggregate> = standard_groupings().iter().map(|g| aggregate(records, g)).collect();
    let mut written = emit_report(&aggs, dir, &[Format::Csv, Format::Json])?;
    written.push(write(dir.join(PLOT_DATA_FILE), &plot_data(records)?)?);
    Ok(written)
}
