//! Executes candidate scripts and enforces the artifact contract.
//!
//! Each candidate goes through two invocations of the configured runner
//! command: a syntax check (`{mode}` = `check`) and a full run (`{mode}` =
//! `run`) in a fresh working directory. The harness itself provides no
//! security isolation; resource limits belong in the runner command.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use stochform_core::model::{parse_lp, Model};
use stochform_core::solver::{Solution, SolveStatus};
use thiserror::Error;

pub const MODEL_FILE: &str = "model.lp";
pub const SOLUTION_FILE: &str = "solution.json";
pub const CANDIDATE_FILE: &str = "candidate.py";
pub const DEFAULT_TIMEOUT_S: f64 = 60.0;

/// Captured output beyond this many bytes per stream is dropped.
const CAPTURE_LIMIT: usize = 1 << 20;
const POLL: Duration = Duration::from_millis(10);

/// `python3 -c DRIVER {mode} {file}`: `check` compiles without executing,
/// `run` executes the file as `__main__`.
const PYTHON_DRIVER: &str = "\
import runpy, sys
mode, path = sys.argv[1], sys.argv[2]
if mode == 'check':
    with open(path, encoding='utf-8') as f:
        compile(f.read(), path, 'exec')
else:
    sys.argv = [path]
    runpy.run_path(path, run_name='__main__')
";

pub fn default_runner_cmd() -> Vec<String> {
    ["python3", "-c", PYTHON_DRIVER, "{mode}", "{file}"].map(String::from).to_vec()
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("runner config: {0}")]
    Config(String),
    #[error("cannot prepare workdir {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Ok,
    CompileError,
    RuntimeError,
    Timeout,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Ok => "ok",
            Classification::CompileError => "compile_error",
            Classification::RuntimeError => "runtime_error",
            Classification::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub classification: Classification,
    /// Why the candidate failed; `None` when it succeeded.
    pub detail: Option<String>,
    pub workdir: PathBuf,
    pub lp_artifact: Option<PathBuf>,
    pub solution_artifact: Option<PathBuf>,
    /// Parsed artifacts; both present exactly when `classification` is `Ok`.
    pub model: Option<Model>,
    pub solution: Option<Solution>,
    pub stdout: String,
    pub stderr: String,
    pub duration: f64,
}

struct Exit {
    success: bool,
    code: Option<i32>,
    timed_out: bool,
    stdout: String,
    stderr: String,
}

fn expand(template: &[String], mode: &str, file: &Path) -> Vec<String> {
    let file = file.to_string_lossy();
    template.iter().map(|a| a.replace("{mode}", mode).replace("{file}", &file)).collect()
}

fn drain<R: Read + Send + 'static>(mut stream: R) -> JoinHandle<Vec<u8>> {
    std::thread::spawn(move || {
        let mut kept = Vec::new();
        let mut buf = [0u8; 8192];
        while let Ok(n) = stream.read(&mut buf) {
            if n == 0 {
                break;
            }
            let room = CAPTURE_LIMIT.saturating_sub(kept.len());
            kept.extend_from_slice(&buf[..n.min(room)]);
        }
        kept
    })
}

#[cfg(unix)]
fn kill_tree(child: &mut Child) {
    // The child leads its own process group; take down any grandchildren too.
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut Child) {
    let _ = child.kill();
}

fn invoke(argv: &[String], cwd: &Path, timeout: Duration) -> std::io::Result<Exit> {
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..]).current_dir(cwd).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn()?;
    let out = drain(child.stdout.take().expect("piped"));
    let err = drain(child.stderr.take().expect("piped"));
    let start = Instant::now();
    let (status, timed_out) = loop {
        if let Some(status) = child.try_wait()? {
            break (Some(status), false);
        }
        if start.elapsed() >= timeout {
            kill_tree(&mut child);
            let _ = child.wait();
            break (None, true);
        }
        std::thread::sleep(POLL);
    };
    let text = |h: JoinHandle<Vec<u8>>| String::from_utf8_lossy(&h.join().unwrap_or_default()).into_owned();
    Ok(Exit {
        success: status.is_some_and(|s| s.success()),
        code: status.and_then(|s| s.code()),
        timed_out,
        stdout: text(out),
        stderr: text(err),
    })
}

#[derive(Deserialize)]
struct RawSolution {
    status: String,
    #[serde(default)]
    objective: Option<f64>,
    #[serde(default)]
    values: std::collections::BTreeMap<String, f64>,
}

fn parse_status(s: &str) -> Option<SolveStatus> {
    match s.trim().to_ascii_lowercase().as_str() {
        "optimal" => Some(SolveStatus::Optimal),
        "infeasible" => Some(SolveStatus::Infeasible),
        "unbounded" => Some(SolveStatus::Unbounded),
        "node_limit" => Some(SolveStatus::NodeLimit),
        _ => None,
    }
}

/// Reads a candidate's `solution.json`; status strings are case-insensitive.
pub fn parse_solution(text: &str) -> Result<Solution, String> {
    let raw: RawSolution = serde_json::from_str(text).map_err(|e| format!("{SOLUTION_FILE}: {e}"))?;
    let status = parse_status(&raw.status).ok_or_else(|| format!("{SOLUTION_FILE}: unknown status `{}`", raw.status))?;
    if status == SolveStatus::Optimal && raw.objective.is_none() {
        return Err(format!("{SOLUTION_FILE}: optimal status without objective"));
    }
    Ok(Solution { status, objective: raw.objective, values: raw.values })
}

fn failure(classification: Classification, detail: String, workdir: PathBuf, exit: Exit, start: Instant) -> RunOutcome {
    RunOutcome {
        classification,
        detail: Some(detail),
        workdir,
        lp_artifact: None,
        solution_artifact: None,
        model: None,
        solution: None,
        stdout: exit.stdout,
        stderr: exit.stderr,
        duration: start.elapsed().as_secs_f64(),
    }
}

fn exit_detail(phase: &str, exit: &Exit) -> String {
    match exit.code {
        Some(code) => format!("{phase} exited with status {code}"),
        None => format!("{phase} was terminated by a signal"),
    }
}

/// Runs `code` in a fresh directory created under `parent`.
///
/// Candidate failures are data: only a missing/invalid runner command or an
/// unusable `parent` produce an error. The directory is left in place for the
/// caller to inspect or delete.
pub fn execute_candidate(
    code: &str,
    parent: &Path,
    runner_cmd: &[String],
    timeout_s: f64,
) -> Result<RunOutcome, RunnerError> {
    if runner_cmd.is_empty() {
        return Err(RunnerError::Config("runner_cmd is empty".into()));
    }
    if !runner_cmd.iter().any(|a| a.contains("{file}")) {
        return Err(RunnerError::Config("runner_cmd has no {file} placeholder".into()));
    }
    if !(timeout_s > 0.0 && timeout_s.is_finite()) {
        return Err(RunnerError::Config(format!("timeout must be positive, got {timeout_s}")));
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunnerError::Io { path, source }
    };
    std::fs::create_dir_all(parent).map_err(io(parent))?;
    let workdir = tempfile::Builder::new().prefix("cell-").tempdir_in(parent).map_err(io(parent))?.keep();
    let file = workdir.join(CANDIDATE_FILE);
    std::fs::write(&file, code).map_err(io(&file))?;

    let start = Instant::now();
    let timeout = Duration::from_secs_f64(timeout_s);
    let launch = |mode: &str| {
        invoke(&expand(runner_cmd, mode, &file), &workdir, timeout.saturating_sub(start.elapsed()))
            .map_err(|e| RunnerError::Config(format!("cannot launch `{}`: {e}", runner_cmd[0])))
    };

    let check = launch("check")?;
    if check.timed_out {
        return Ok(failure(Classification::Timeout, "syntax check timed out".into(), workdir, check, start));
    }
    if !check.success {
        let detail = exit_detail("syntax check", &check);
        return Ok(failure(Classification::CompileError, detail, workdir, check, start));
    }

    let run = launch("run")?;
    if run.timed_out {
        return Ok(failure(Classification::Timeout, format!("run exceeded {timeout_s} s"), workdir, run, start));
    }
    if !run.success {
        let detail = exit_detail("run", &run);
        return Ok(failure(Classification::RuntimeError, detail, workdir, run, start));
    }

    let lp_path = workdir.join(MODEL_FILE);
    let sol_path = workdir.join(SOLUTION_FILE);
    let artifacts = std::fs::read_to_string(&lp_path)
        .map_err(|_| format!("{MODEL_FILE} missing"))
        .and_then(|t| parse_lp(&t).map_err(|e| format!("{MODEL_FILE}: {e}")))
        .and_then(|m| {
            let text = std::fs::read_to_string(&sol_path).map_err(|_| format!("{SOLUTION_FILE} missing"))?;
            Ok((m, parse_solution(&text)?))
        });
    match artifacts {
        Ok((model, solution)) => Ok(RunOutcome {
            classification: Classification::Ok,
            detail: None,
            workdir,
            lp_artifact: Some(lp_path),
            solution_artifact: Some(sol_path),
            model: Some(model),
            solution: Some(solution),
            stdout: run.stdout,
            stderr: run.stderr,
            duration: start.elapsed().as_secs_f64(),
        }),
        Err(detail) => Ok(failure(Classification::RuntimeError, detail, workdir, run, start)),
    }
}
