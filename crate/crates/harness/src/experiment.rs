//! The experiment sweep: problem × model × method × run cells, executed on a
//! worker pool and persisted as append-only JSONL.
//!
//! Records hold nothing time- or path-dependent, so a replayed sweep
//! reproduces them byte for byte; wall-clock timings go to a separate file.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use stochform_core::softscore::{score_models, ErrorKind, ScoreReport};
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::corpus::{Category, ProblemInstance};
use crate::pipeline::{run_method, ChatClient, Method, MethodConfig, ProblemPrompt, CODE_EXAMPLE};
use crate::runner::{execute_candidate, Classification};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const TIMINGS_FILE: &str = "timings.jsonl";
pub const TRANSCRIPTS_DIR: &str = "transcripts";
const STDERR_TAIL: usize = 2000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub problem: String,
    pub model: String,
    pub method: Method,
    /// 1-based run index.
    pub run: u32,
}

impl CellKey {
    /// File-name-safe identifier.
    pub fn slug(&self) -> String {
        let clean = |s: &str| s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect::<String>();
        format!("{}__{}__{}__r{}", clean(&self.problem), clean(&self.model), self.method, self.run)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub classification: Classification,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// End of the candidate's stderr with its workdir replaced by `<workdir>`.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub stderr_tail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(flatten)]
    pub cell: CellKey,
    pub category: Category,
    pub instance_index: u32,
    pub error_kind: ErrorKind,
    /// Prompting or client failure; such cells carry no score and are retried
    /// when the sweep is resumed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline_error: Option<String>,
    /// Transcript path relative to the experiment directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<OutcomeSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreReport>,
}

impl RunRecord {
    pub fn is_scored(&self) -> bool {
        self.score.is_some()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellTiming {
    #[serde(flatten)]
    pub cell: CellKey,
    pub prompting_s: f64,
    pub execution_s: f64,
    pub total_s: f64,
}

/// Every cell of the sweep in canonical order.
pub fn cells(cfg: &ExperimentConfig, corpus: &[ProblemInstance]) -> Vec<CellKey> {
    let mut out = Vec::new();
    for p in corpus {
        for model in &cfg.models {
            for &method in &cfg.methods {
                for run in 1..=cfg.runs {
                    out.push(CellKey { problem: p.id.clone(), model: model.clone(), method, run });
                }
            }
        }
    }
    out
}

/// Restricts the corpus to the configured problem ids, in corpus order.
pub fn select_problems(cfg: &ExperimentConfig, corpus: Vec<ProblemInstance>) -> Result<Vec<ProblemInstance>, ExperimentError> {
    if cfg.problems.is_empty() {
        return Ok(corpus);
    }
    for id in &cfg.problems {
        if !corpus.iter().any(|p| &p.id == id) {
            return Err(ExperimentError::Config(format!("problem `{id}` is not in the corpus")));
        }
    }
    Ok(corpus.into_iter().filter(|p| cfg.problems.contains(&p.id)).collect())
}

/// Reads a records file; the last record of a cell wins and a torn final
/// line (from an interrupted write) is ignored.
pub fn load_records(path: &Path) -> Result<Vec<RunRecord>, ExperimentError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut latest: BTreeMap<CellKey, (usize, RunRecord)> = BTreeMap::new();
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>().map_err(io_err(path))?;
    let n = lines.len();
    for (i, line) in lines.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(&line) {
            Ok(r) => {
                latest.insert(r.cell.clone(), (i, r));
            }
            Err(_) if i + 1 == n => {}
            Err(e) => {
                return Err(ExperimentError::Io {
                    path: path.to_path_buf(),
                    source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)),
                })
            }
        }
    }
    let mut records: Vec<(usize, RunRecord)> = latest.into_values().collect();
    records.sort_by_key(|(i, _)| *i);
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

fn to_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("records serialize");
    s.push('\n');
    s
}

fn stderr_tail(stderr: &str, workdir: &Path) -> String {
    let cleaned = stderr.replace(&*workdir.to_string_lossy(), "<workdir>");
    let start = cleaned.len().saturating_sub(STDERR_TAIL);
    let start = (start..=cleaned.len()).find(|&i| cleaned.is_char_boundary(i)).unwrap_or(cleaned.len());
    cleaned[start..].to_string()
}

struct CellContext<'a> {
    cfg: &'a ExperimentConfig,
    client: &'a dyn ChatClient,
    dir: &'a Path,
}

fn run_cell(ctx: &CellContext, problem: &ProblemInstance, cell: &CellKey) -> (RunRecord, CellTiming) {
    let start = Instant::now();
    let mut record = RunRecord {
        cell: cell.clone(),
        category: problem.category,
        instance_index: problem.instance_index,
        error_kind: ErrorKind::None,
        pipeline_error: None,
        transcript: None,
        outcome: None,
        score: None,
    };
    let timing = |prompting_s: f64, execution_s: f64| CellTiming {
        cell: cell.clone(),
        prompting_s,
        execution_s,
        total_s: start.elapsed().as_secs_f64(),
    };

    let prompt = ProblemPrompt {
        description: problem.description.clone(),
        instructions: problem.category.instructions().to_string(),
    };
    let mcfg = MethodConfig {
        model: cell.model.clone(),
        temperature: ctx.cfg.temperature,
        max_tokens: ctx.cfg.max_tokens,
        n_reviewers: ctx.cfg.reviewers,
        code_example: CODE_EXAMPLE.to_string(),
        sample: cell.run - 1,
    };
    let (code, transcript) = match run_method(cell.method, &prompt, ctx.client, &mcfg) {
        Ok(v) => v,
        Err(e) => {
            record.pipeline_error = Some(e.to_string());
            return (record, timing(start.elapsed().as_secs_f64(), 0.0));
        }
    };
    let prompting_s = start.elapsed().as_secs_f64();

    let rel = format!("{TRANSCRIPTS_DIR}/{}.json", cell.slug());
    let path = ctx.dir.join(&rel);
    let written = serde_json::to_string_pretty(&transcript)
        .map_err(std::io::Error::other)
        .and_then(|t| std::fs::write(&path, t + "\n"));
    if let Err(e) = written {
        record.pipeline_error = Some(format!("cannot write transcript: {e}"));
        return (record, timing(prompting_s, 0.0));
    }
    record.transcript = Some(rel);

    let exec_start = Instant::now();
    let work = ctx.dir.join("work");
    let outcome = match execute_candidate(&code, &work, &ctx.cfg.runner.cmd, ctx.cfg.runner.timeout_s) {
        Ok(o) => o,
        Err(e) => {
            record.pipeline_error = Some(e.to_string());
            return (record, timing(prompting_s, exec_start.elapsed().as_secs_f64()));
        }
    };
    let execution_s = exec_start.elapsed().as_secs_f64();
    if !ctx.cfg.runner.keep_workdirs {
        let _ = std::fs::remove_dir_all(&outcome.workdir);
    }

    record.error_kind = match outcome.classification {
        Classification::Ok => ErrorKind::None,
        Classification::CompileError => ErrorKind::Compile,
        Classification::RuntimeError | Classification::Timeout => ErrorKind::Runtime,
    };
    record.score = Some(match (&outcome.model, &outcome.solution) {
        (Some(m), Some(s)) => score_models(&problem.truth, m, Some(&problem.reference), Some(s)),
        _ => ScoreReport::failed(&problem.truth, record.error_kind),
    });
    record.outcome = Some(OutcomeSummary {
        classification: outcome.classification,
        detail: outcome.detail.clone(),
        stderr_tail: stderr_tail(&outcome.stderr, &outcome.workdir),
    });
    (record, timing(prompting_s, execution_s))
}

/// Runs every cell not already scored in `<output_dir>/<name>/records.jsonl`.
///
/// Cell failures are recorded, never propagated; only I/O on the experiment
/// directory is fatal. On completion the records file is rewritten with one
/// record per cell in canonical order, which is also the return value.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    corpus: &[ProblemInstance],
    client: &dyn ChatClient,
) -> Result<Vec<RunRecord>, ExperimentError> {
    cfg.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
    let dir = cfg.experiment_dir();
    std::fs::create_dir_all(dir.join(TRANSCRIPTS_DIR)).map_err(io_err(&dir))?;
    let records_path = dir.join(RECORDS_FILE);
    let timings_path = dir.join(TIMINGS_FILE);

    let all = cells(cfg, corpus);
    let mut done: BTreeMap<CellKey, RunRecord> =
        load_records(&records_path)?.into_iter().filter(|r| r.is_scored()).map(|r| (r.cell.clone(), r)).collect();
    let pending: Vec<&CellKey> = all.iter().filter(|c| !done.contains_key(*c)).collect();
    let problems: BTreeMap<&str, &ProblemInstance> = corpus.iter().map(|p| (p.id.as_str(), p)).collect();

    let append = |path: &Path| OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path));
    let mut records_out = append(&records_path)?;
    let mut timings_out = append(&timings_path)?;

    let ctx = CellContext { cfg, client, dir: &dir };
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(RunRecord, CellTiming)>();
    let mut fresh = Vec::with_capacity(pending.len());
    std::thread::scope(|s| -> Result<(), ExperimentError> {
        for _ in 0..cfg.workers.min(pending.len()) {
            let tx = tx.clone();
            let (ctx, next, pending, problems) = (&ctx, &next, &pending, &problems);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = pending.get(i) else { break };
                let result = run_cell(ctx, problems[cell.problem.as_str()], cell);
                if tx.send(result).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // Single writer: records are appended and flushed as cells finish.
        for (record, timing) in rx {
            records_out.write_all(to_line(&record).as_bytes()).map_err(io_err(&records_path))?;
            records_out.flush().map_err(io_err(&records_path))?;
            timings_out.write_all(to_line(&timing).as_bytes()).map_err(io_err(&timings_path))?;
            fresh.push(record);
        }
        Ok(())
    })?;

    // Earlier records of cells outside this configuration are kept at the end.
    let mut latest: BTreeMap<CellKey, RunRecord> =
        load_records(&records_path)?.into_iter().map(|r| (r.cell.clone(), r)).collect();
    latest.extend(fresh.into_iter().map(|r| (r.cell.clone(), r)));
    latest.extend(std::mem::take(&mut done));
    let ordered: Vec<RunRecord> = all.iter().filter_map(|c| latest.remove(c)).collect();
    let text: String = ordered.iter().chain(latest.values()).map(to_line).collect();
    let tmp = dir.join(format!("{RECORDS_FILE}.tmp"));
    std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, &records_path).map_err(io_err(&records_path))?;
    Ok(ordered)
}
