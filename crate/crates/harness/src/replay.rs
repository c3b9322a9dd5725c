//! The shipped replay experiment: hand-authored candidate completions for
//! two problems × two single-prompt methods, and a verifier that runs the
//! sweep twice and compares every output byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use stochform_core::softscore::ErrorKind;

use crate::config::{ExperimentConfig, Mode};
use crate::corpus::{ingest_corpus, ProblemInstance};
use crate::experiment::{run_experiment, select_problems, RunRecord, RECORDS_FILE, TRANSCRIPTS_DIR};
use crate::pipeline::{
    render, template, ChatMessage, ChatResponse, Fixture, FixtureStore, Method, ReplayClient, Role, CODE_EXAMPLE,
};
use crate::report::emit_full_report;

pub const DEFAULT_REPLAY_CONFIG: &str = "experiments/replay/config.toml";
pub const EXPECTED_FILE: &str = "expected.json";
pub const DEMO_MODEL: &str = "gpt-4-turbo";

const TRUCK_OK: &str = r#"import json
from statistics import NormalDist

z = NormalDist().inv_cdf
need_a = 120 + z(0.95) * 12
need_b = 90 + z(0.90) * 9

with open("model.lp", "w") as f:
    f.write("Minimize\n obj: x1 + x2\nSubject To\n")
    f.write(f" store_a: x1 >= {need_a!r}\n store_b: x2 >= {need_b!r}\nEnd\n")
with open("solution.json", "w") as f:
    json.dump({"status": "OPTIMAL", "objective": need_a + need_b, "values": {"x1": need_a, "x2": need_b}}, f)
"#;

// Rounded quantiles and an invented aggregate row.
const TRUCK_PARTIAL: &str = r#"import json

need_a = 120 + 1.64 * 12
need_b = 90 + 1.28 * 9

with open("model.lp", "w") as f:
    f.write("Minimize\n obj: x1 + x2\nSubject To\n")
    f.write(f" store_a: x1 >= {need_a}\n store_b: x2 >= {need_b}\n both: x1 + x2 >= 230\nEnd\n")
obj = max(need_a + need_b, 230)
with open("solution.json", "w") as f:
    json.dump({"status": "Optimal", "objective": obj, "values": {"x1": need_a, "x2": obj - need_a}}, f)
"#;

const TRUCK_COMPILE: &str = r#"import json

def quantile(p)
    return 1.6449 if p > 0.92 else 1.2816

print(quantile(0.95))
"#;

const WAREHOUSE_OK: &str = r#"import json

probs = [0.4, 0.6]
demand = [(20, 40), (40, 60)]
ship = {(1, 1): 1, (1, 2): 4, (2, 1): 3, (2, 2): 1}

terms = ["2 x1", "3 x2"]
for s, p in enumerate(probs, 1):
    for (i, j), c in ship.items():
        terms.append(f"{p * c} y{i}{j}_{s}")
    for j in (1, 2):
        terms.append(f"{p * 10} u{j}_{s}")
rows = [" cap1: x1 <= 100", " cap2: x2 <= 100"]
for s, (d1, d2) in enumerate(demand, 1):
    for i in (1, 2):
        rows.append(f" ship{i}_{s}: y{i}1_{s} + y{i}2_{s} - x{i} <= 0")
    rows.append(f" dem1_{s}: y11_{s} + y21_{s} + u1_{s} = {d1}")
    rows.append(f" dem2_{s}: y12_{s} + y22_{s} + u2_{s} = {d2}")

with open("model.lp", "w") as f:
    f.write("Minimize\n obj: " + " + ".join(terms) + "\nSubject To\n" + "\n".join(rows) + "\nEnd\n")
# Optimum computed offline.
with open("solution.json", "w") as f:
    json.dump({"status": "optimal", "objective": OBJECTIVE, "values": {}}, f)
"#;

// Expected-value model: one scenario at mean demand.
const WAREHOUSE_MEAN: &str = r#"import json

lp = """Minimize
 obj: 2 x1 + 3 x2 + y11 + 4 y12 + 3 y21 + y22 + 10 u1 + 10 u2
Subject To
 cap1: x1 <= 100
 cap2: x2 <= 100
 ship1: y11 + y12 - x1 <= 0
 ship2: y21 + y22 - x2 <= 0
 dem1: y11 + y21 + u1 = 32
 dem2: y12 + y22 + u2 = 52
End
"""
with open("model.lp", "w") as f:
    f.write(lp)
with open("solution.json", "w") as f:
    json.dump({"status": "optimal", "objective": 304.0, "values": {"x1": 32, "x2": 52, "y11": 32, "y22": 52}}, f)
"#;

const WAREHOUSE_NO_LP: &str = r#"import json

with open("solution.json", "w") as f:
    json.dump({"status": "optimal", "objective": 0.0, "values": {}}, f)
print("model built")
"#;

const WAREHOUSE_NAME_ERROR: &str = r#"import json

probs = [0.4, 0.6]
expected_demand = sum(p * d for p, d in zip(probs, demand_region_1))
print(expected_demand)
"#;

const WAREHOUSE_COMPILE: &str = r#"import json

rows = [" cap1: x1 <= 100", " cap2: x2 <= 100"
with open("model.lp", "w") as f:
    f.write("\n".join(rows))
"#;

/// One (problem, method) pair of the demo: candidate programs by sample.
struct DemoPair {
    problem: &'static str,
    method: Method,
    candidates: &'static [&'static str],
}

const PAIRS: [DemoPair; 4] = [
    DemoPair { problem: "warehouse_stock", method: Method::StandardS, candidates: &[WAREHOUSE_NO_LP, WAREHOUSE_NAME_ERROR, WAREHOUSE_OK] },
    DemoPair { problem: "warehouse_stock", method: Method::CotS, candidates: &[WAREHOUSE_MEAN, WAREHOUSE_MEAN, WAREHOUSE_COMPILE] },
    DemoPair { problem: "truck_dispatch", method: Method::StandardS, candidates: &[TRUCK_OK] },
    DemoPair { problem: "truck_dispatch", method: Method::CotS, candidates: &[TRUCK_PARTIAL, TRUCK_COMPILE, TRUCK_OK] },
];

pub const DEMO_RUNS: u32 = 3;

fn classify(candidate: &str) -> ErrorKind {
    match candidate {
        TRUCK_COMPILE | WAREHOUSE_COMPILE => ErrorKind::Compile,
        WAREHOUSE_NO_LP | WAREHOUSE_NAME_ERROR => ErrorKind::Runtime,
        _ => ErrorKind::None,
    }
}

fn wrap(method: Method, code: &str) -> String {
    match method {
        Method::CotS => format!(
            "Step 1: identify the decisions and the uncertain data.\nStep 2: write the constraints and the objective.\nStep 3: code it.\n\n```python\n{code}```\n"
        ),
        _ => format!("Here is the program.\n\n```python\n{code}```\n"),
    }
}

/// Expected error kind per `problem/method/run` cell.
pub fn expected_kinds() -> BTreeMap<String, ErrorKind> {
    let mut out = BTreeMap::new();
    for pair in &PAIRS {
        for run in 1..=DEMO_RUNS {
            let c = pair.candidates[(run as usize - 1) % pair.candidates.len()];
            out.insert(format!("{}/{}/{run}", pair.problem, pair.method), classify(c));
        }
    }
    out
}

/// Builds the fixtures for `corpus`; `OBJECTIVE` placeholders in candidate
/// programs are replaced with the ground-truth optimum.
pub fn demo_fixtures(corpus: &[ProblemInstance]) -> Result<Vec<Fixture>, String> {
    let mut out = Vec::new();
    for pair in &PAIRS {
        let p = corpus.iter().find(|p| p.id == pair.problem).ok_or_else(|| format!("corpus lacks `{}`", pair.problem))?;
        let bindings = BTreeMap::from([
            ("problem_description", p.description.clone()),
            ("code_example", CODE_EXAMPLE.to_string()),
            ("instructions", p.category.instructions().to_string()),
        ]);
        let prompt = render(template(pair.method, Role::Single), &bindings).map_err(|e| e.to_string())?;
        let objective = format!("{:?}", p.reference.objective.expect("references are optimal"));
        let responses = pair
            .candidates
            .iter()
            .map(|c| ChatResponse { text: wrap(pair.method, &c.replace("OBJECTIVE", &objective)), usage: None, latency: 0.0 })
            .collect();
        out.push(Fixture { model: DEMO_MODEL.into(), messages: vec![ChatMessage::user(prompt)], responses });
    }
    Ok(out)
}

/// Writes fixture files and `expected.json` into `dir` (the config directory).
pub fn write_demo(dir: &Path, corpus: &[ProblemInstance]) -> Result<Vec<PathBuf>, String> {
    let store = FixtureStore::new(dir.join("fixtures"));
    let mut written = Vec::new();
    for f in demo_fixtures(corpus)? {
        written.push(store.save(&f).map_err(|e| e.to_string())?);
    }
    let expected = dir.join(EXPECTED_FILE);
    let text = serde_json::to_string_pretty(&expected_kinds()).map_err(|e| e.to_string())? + "\n";
    std::fs::write(&expected, text).map_err(|e| format!("{}: {e}", expected.display()))?;
    written.push(expected);
    Ok(written)
}

#[derive(Debug, Default)]
pub struct VerifySummary {
    pub records: usize,
    pub seconds: [f64; 2],
    /// Relative paths whose bytes differ between the two runs.
    pub mismatched_files: Vec<String>,
    /// `cell: expected → actual` classification mismatches.
    pub classification_errors: Vec<String>,
    pub pipeline_errors: usize,
    pub kinds: BTreeMap<&'static str, usize>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.records > 0 && self.mismatched_files.is_empty() && self.classification_errors.is_empty() && self.pipeline_errors == 0
    }
}

impl fmt::Display for VerifySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {} (pipeline failures: {})", self.records, self.pipeline_errors)?;
        writeln!(f, "error kinds: {:?}", self.kinds)?;
        writeln!(f, "wall time: {:.2} s, {:.2} s", self.seconds[0], self.seconds[1])?;
        for m in &self.mismatched_files {
            writeln!(f, "differs: {m}")?;
        }
        for m in &self.classification_errors {
            writeln!(f, "misclassified: {m}")?;
        }
        writeln!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// Runs the replay experiment at `config` twice into scratch directories
/// and compares records, transcripts and reports.
pub fn verify_replay(config: &Path) -> Result<VerifySummary, String> {
    let base = ExperimentConfig::load(config).map_err(|e| e.to_string())?;
    let corpus = ingest_corpus(&base.corpus).map_err(|e| e.to_string())?;
    let corpus = select_problems(&base, corpus).map_err(|e| e.to_string())?;
    let client = ReplayClient::new(FixtureStore::new(&base.client.fixtures));
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;

    let mut summary = VerifySummary::default();
    let mut outputs: Vec<(PathBuf, Vec<RunRecord>)> = Vec::new();
    for i in 0..2 {
        let mut cfg = base.clone();
        cfg.mode = Mode::Replay;
        cfg.output_dir = scratch.path().join(format!("pass{i}"));
        let start = Instant::now();
        let records = run_experiment(&cfg, &corpus, &client).map_err(|e| e.to_string())?;
        let dir = cfg.experiment_dir();
        emit_full_report(&records, &dir.join("report")).map_err(|e| e.to_string())?;
        summary.seconds[i] = start.elapsed().as_secs_f64();
        outputs.push((dir, records));
    }

    let (dir_a, records) = &outputs[0];
    let dir_b = &outputs[1].0;
    let compared: Vec<PathBuf> = files_under(dir_a)
        .into_iter()
        .filter(|p| p.starts_with("report") || p.starts_with(TRANSCRIPTS_DIR) || p == Path::new(RECORDS_FILE))
        .collect();
    let listed_b: Vec<PathBuf> =
        files_under(dir_b).into_iter().filter(|p| !p.starts_with("work") && !p.ends_with("timings.jsonl")).collect();
    for rel in compared.iter().chain(listed_b.iter().filter(|p| !compared.contains(p))) {
        if std::fs::read(dir_a.join(rel)).ok() != std::fs::read(dir_b.join(rel)).ok() {
            summary.mismatched_files.push(rel.display().to_string());
        }
    }

    summary.records = records.len();
    summary.pipeline_errors = records.iter().filter(|r| r.pipeline_error.is_some()).count();
    for r in records {
        *summary.kinds.entry(r.error_kind.as_str()).or_default() += 1;
    }
    let expected_path = config.parent().unwrap_or(Path::new(".")).join(EXPECTED_FILE);
    if let Ok(text) = std::fs::read_to_string(&expected_path) {
        let expected: BTreeMap<String, ErrorKind> =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", expected_path.display()))?;
        for r in records {
            let key = format!("{}/{}/{}", r.cell.problem, r.cell.method, r.cell.run);
            match expected.get(&key) {
                Some(k) if *k == r.error_kind => {}
                Some(k) => summary.classification_errors.push(format!("{key}: {} → {}", k.as_str(), r.error_kind.as_str())),
                None => summary.classification_errors.push(format!("{key}: not in {EXPECTED_FILE}")),
            }
        }
    }
    Ok(summary)
}
