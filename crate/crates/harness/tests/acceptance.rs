//! End-to-end acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p stochform --test acceptance -- --nocapture` to see
//! the report.

// `ensure!` negates float comparisons on purpose: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use stochform::aggregate::{aggregate, GroupKey};
use stochform::corpus::{ingest_corpus, Category};
use stochform::experiment::{load_records, CellKey, RunRecord, RECORDS_FILE, TRANSCRIPTS_DIR};
use stochform::pipeline::{render, template, templates, Method, Role};
use stochform::replay::expected_kinds;
use stochform::report::to_csv;
use stochform_core::detequiv::{
    build_extensive_form, normal_quantile, reformulate_individual_chance, ChanceRow, ChanceSpec, Coefficient, Distribution,
    FirstStage, Scenario, SecondStage, TwoStageSpec,
};
use stochform_core::model::{emit_lp, parse_lp, Model};
use stochform_core::softscore::{score_models, ErrorKind, ScoreReport, Tally, METRIC_NAMES};
use stochform_core::solver::{solve, solve_lp, solve_mip, DEFAULT_NODE_LIMIT};
use stochform_core::testkit::{
    binary_enumeration, flip_inequality, generic_model, perturb, random_binary_mip, random_lp, random_model, random_two_stage,
    rename_randomly, scale_constraint, shuffle_constraints, vertex_enumeration,
};
use stochform_core::{ObjectiveSense, Sense, SolveStatus};

type Outcome = Result<String, String>;

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------------------
// 1. Self-score fixed point

fn self_score() -> Outcome {
    let corpus = ingest_corpus(&workspace().join("corpus")).map_err(|e| e.to_string())?;
    let mut slowest = 0.0f64;
    for p in &corpus {
        let start = Instant::now();
        let out = solve(&p.truth).map_err(|e| e.to_string())?;
        let r = score_models(&p.truth, &p.truth, Some(&out), Some(&out));
        let secs = start.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        let v = r.metrics().values();
        ensure!(v[..6] == [100.0, 100.0, 100.0, 100.0, 100.0, 0.0], "{}: {:?}", p.id, &v[..6]);
        ensure!(secs < 1.0, "{}: {secs:.3} s", p.id);
    }
    Ok(format!("{} ground truths, slowest {:.1} ms", corpus.len(), slowest * 1e3))
}

// ---------------------------------------------------------------------------
// 2. Invariance suite

/// Every field, with generated variable names mapped back through `names`.
fn normalized(r: &ScoreReport, names: &BTreeMap<String, String>) -> String {
    let back: BTreeMap<&str, &str> = names.iter().map(|(old, new)| (new.as_str(), old.as_str())).collect();
    let tr = |s: &String| back.get(s.as_str()).map_or_else(|| s.clone(), |o| o.to_string());
    let mut r = r.clone();
    r.var_mapping = r.var_mapping.iter().map(|(g, t)| (tr(g), t.clone())).collect();
    r.extra_variables = r.extra_variables.iter().map(tr).collect();
    r.extra_variables.sort();
    r.extra_objective_terms = r.extra_objective_terms.iter().map(tr).collect();
    r.extra_objective_terms.sort();
    r.extra_constraints.sort();
    format!(
        "{:?}",
        (r.metrics().values().map(|v| (v * 1e6).round()), &r.var_mapping, &r.matched_constraints, &r.extra_variables, &r.extra_constraints, &r.extra_objective_terms, r.tally, r.error_kind)
    )
}

fn invariance() -> Outcome {
    const TRIALS: u64 = 200;
    let mut violations = BTreeMap::<&str, u64>::new();
    for seed in 0..TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE + seed);
        let truth = generic_model(&mut rng);
        let gen = perturb(&mut rng, &truth);
        let base = score_models(&truth, &gen, None, None);
        let none = BTreeMap::new();
        let want = normalized(&base, &none);
        let (renamed, names) = rename_randomly(&mut rng, &gen);
        let cases: [(&str, Model, &BTreeMap<String, String>); 4] = [
            ("shuffle", shuffle_constraints(&mut rng, &gen), &none),
            ("rename", renamed, &names),
            ("scale", scale_constraint(&mut rng, &gen), &none),
            ("flip", flip_inequality(&mut rng, &gen), &none),
        ];
        for (name, model, map) in cases {
            let got = normalized(&score_models(&truth, &model, None, None), map);
            *violations.entry(name).or_default() += u64::from(got != want);
        }
    }
    ensure!(violations.values().all(|&v| v == 0), "violations: {violations:?}");
    Ok(format!("{TRIALS} trials x 4 properties, 0 violations"))
}

// ---------------------------------------------------------------------------
// 3. Solver oracle equivalence

fn oracle_equivalence() -> Outcome {
    let mut optimal = 0;
    for seed in 0..500u64 {
        let model = random_lp(&mut ChaCha8Rng::seed_from_u64(seed), 6, 6);
        let got = solve_lp(&model).map_err(|e| e.to_string())?;
        let want = vertex_enumeration(&model);
        ensure!(got.status == want.status, "LP seed {seed}: {:?} vs {:?}", got.status, want.status);
        if want.status == SolveStatus::Optimal {
            optimal += 1;
            let (g, w) = (got.objective.unwrap(), want.objective.unwrap());
            ensure!((g - w).abs() <= 1e-6 * w.abs().max(1.0), "LP seed {seed}: {g} vs {w}");
        }
    }
    for seed in 0..200u64 {
        let model = random_binary_mip(&mut ChaCha8Rng::seed_from_u64(seed), 10, 5);
        let got = solve_mip(&model, DEFAULT_NODE_LIMIT).map_err(|e| e.to_string())?;
        let want = binary_enumeration(&model);
        ensure!(got.status == want.status, "MIP seed {seed}: {:?} vs {:?}", got.status, want.status);
        if want.status == SolveStatus::Optimal {
            ensure!(model.objective_value(&got.values) == want.objective.unwrap(), "MIP seed {seed}");
        }
    }
    Ok(format!("500 LPs ({optimal} optimal) and 200 binary MIPs agree"))
}

// ---------------------------------------------------------------------------
// 4. Quantile accuracy

/// Φ via erf(x) = 2/√π · e^{-x²} · Σ (2x²)^n x / (1·3·…·(2n+1)): every term is
/// positive, so there is no cancellation for the |x| < 2 range used here.
fn phi_oracle(z: f64) -> f64 {
    let x = z.abs() / std::f64::consts::SQRT_2;
    let (mut term, mut sum, mut n) = (x, x, 0.0);
    while term > 1e-18 * sum {
        n += 1.0;
        term *= 2.0 * x * x / (2.0 * n + 1.0);
        sum += term;
    }
    let erf = 2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp() * sum;
    if z >= 0.0 { 0.5 + 0.5 * erf } else { 0.5 - 0.5 * erf }
}

fn quantile_accuracy() -> Outcome {
    let mut worst = 0.0f64;
    for k in 1..=99 {
        let alpha = k as f64 / 100.0;
        let z = normal_quantile(alpha).map_err(|e| e.to_string())?;
        worst = worst.max((phi_oracle(z) - alpha).abs());
    }
    ensure!(worst <= 1e-10, "max |Φ(z) − α| = {worst:e}");
    let (z95, z90) = (normal_quantile(0.95).unwrap(), normal_quantile(0.90).unwrap());
    ensure!((z95 - 1.6449).abs() < 1e-4 && (z90 - 1.2816).abs() < 1e-4, "z95 {z95}, z90 {z90}");
    Ok(format!("max |Φ(z) − α| = {worst:.1e}; z(0.95) = {z95:.6}, z(0.90) = {z90:.6}"))
}

// ---------------------------------------------------------------------------
// 5. Chance reformulation

fn chance_reformulation() -> Outcome {
    let rows = [("store_1", 100.0, 10.0, 0.95), ("store_2", 150.0, 15.0, 0.90)];
    let spec = ChanceSpec {
        vars: vec!["x1".into(), "x2".into()],
        cost: vec![1.0, 1.0],
        sense: ObjectiveSense::Minimize,
        joint: false,
        alpha: None,
        rows: rows
            .iter()
            .enumerate()
            .map(|(i, &(name, mu, sigma, alpha))| ChanceRow {
                name: name.into(),
                coeffs: (0..2).map(|j| Coefficient::Fixed(if i == j { 1.0 } else { 0.0 })).collect(),
                sense: Sense::Ge,
                rhs: Distribution::Normal { mu, sigma },
                alpha: Some(alpha),
            })
            .collect(),
        deterministic_rows: vec![],
    };
    let model = reformulate_individual_chance(&spec).map_err(|e| e.to_string())?;
    let sol = solve_lp(&model).map_err(|e| e.to_string())?;
    let (x1, x2, obj) = (sol.values["x1"], sol.values["x2"], sol.objective.unwrap());
    // μ + z·σ with z from the independent oracle above (bisection on phi_oracle).
    let z = |alpha: f64| {
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi_oracle(mid) < alpha { lo = mid } else { hi = mid }
        }
        0.5 * (lo + hi)
    };
    let want = (100.0 + 10.0 * z(0.95), 150.0 + 15.0 * z(0.90));
    ensure!((x1 - want.0).abs() < 1e-3 && (x2 - want.1).abs() < 1e-3, "x = ({x1}, {x2}) vs {want:?}");
    ensure!((x1 - 116.449).abs() < 1e-3 && (x2 - 169.224).abs() < 1e-3, "x = ({x1}, {x2})");
    // Oracle optimum is want.0 + want.1 = 285.6718; the commonly quoted 285.673
    // is the sum of the two bounds after rounding each to three decimals.
    ensure!((obj - (want.0 + want.1)).abs() < 1e-3 && (obj - 285.6718).abs() < 1e-4, "objective {obj}");

    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut coverage = Vec::new();
    for (c, &(_, mu, sigma, alpha)) in model.constraints().iter().zip(&rows) {
        let demand = Normal::new(mu, sigma).unwrap();
        let n = 1_000_000;
        let p = (0..n).filter(|_| c.rhs >= demand.sample(&mut rng)).count() as f64 / n as f64;
        ensure!((p - alpha).abs() <= 0.005, "{}: coverage {p} vs {alpha}", c.name);
        coverage.push(format!("{p:.4}"));
    }
    Ok(format!(
        "objective {obj:.4} at ({x1:.3}, {x2:.3}) (quoted 285.673 is off by {:.4}); coverage {}",
        (obj - 285.673).abs(),
        coverage.join(", ")
    ))
}

// ---------------------------------------------------------------------------
// 6. Extensive form

fn extensive_form() -> Outcome {
    let spec = TwoStageSpec {
        first_stage: FirstStage { vars: vec!["x".into()], cost: vec![1.0], rows: vec![] },
        second_stage: SecondStage { vars: vec!["y".into()], rows: vec!["cover".into()], senses: Some(vec![Sense::Ge]) },
        scenarios: [1.0, 3.0]
            .map(|d| Scenario { probability: 0.5, cost: vec![2.0], recourse: vec![vec![1.0]], technology: vec![vec![-1.0]], rhs: vec![d] })
            .to_vec(),
        deterministic: false,
    };
    let got = solve_lp(&build_extensive_form(&spec).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.objective.unwrap();
    // Grid over x with the recourse minimized in closed form.
    let grid = (0..=500)
        .map(|i| {
            let x = i as f64 / 100.0;
            x + [1.0, 3.0].iter().map(|d: &f64| 0.5 * 2.0 * (d - x).max(0.0)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    ensure!((grid - 3.0).abs() < 1e-9, "grid oracle {grid}");
    ensure!((got - grid).abs() < 1e-6, "extensive form {got} vs {grid}");

    for seed in 0..50u64 {
        let spec = random_two_stage(&mut ChaCha8Rng::seed_from_u64(seed));
        let m = build_extensive_form(&spec).map_err(|e| e.to_string())?;
        let s = spec.scenarios.len();
        ensure!(
            m.variables().len() == spec.first_stage.vars.len() + s * spec.second_stage.vars.len()
                && m.constraints().len() == spec.first_stage.rows.len() + s * spec.second_stage.rows.len(),
            "seed {seed}: counts"
        );
    }
    Ok(format!("toy objective {got:.6}; 50 random specs replicate exactly"))
}

// ---------------------------------------------------------------------------
// 7. LP round trip

fn lp_round_trip() -> Outcome {
    let corpus = ingest_corpus(&workspace().join("corpus")).map_err(|e| e.to_string())?;
    let mut models: Vec<(String, Model)> = corpus.into_iter().map(|p| (p.id, p.truth)).collect();
    models.extend((0..200u64).map(|s| (format!("random {s}"), random_model(&mut ChaCha8Rng::seed_from_u64(s)))));
    for (name, m) in &models {
        let text = emit_lp(m);
        let back = parse_lp(&text).map_err(|e| format!("{name}: {e}"))?;
        ensure!(back.approx_eq(m, 1e-9), "{name}: parse(emit(m)) != m");
        ensure!(emit_lp(&back) == text && emit_lp(m) == text, "{name}: emit not byte-stable");
    }
    Ok(format!("{} models", models.len()))
}

// ---------------------------------------------------------------------------
// 8. Prompt fidelity

fn prompt_fidelity() -> Outcome {
    let bindings = BTreeMap::from([
        ("problem_description", "Ship goods from one depot to two shops at least cost.".to_string()),
        ("code_example", "import gurobipy as gp\nm = gp.Model()".into()),
        ("instructions", "min c^T x s.t. A x >= b, x >= 0".into()),
        ("extraction_output", "Sets: shops {1, 2}".into()),
        ("code_formulation_output_1", "m.setObjective(x, GRB.MINIMIZE)".into()),
        ("current_code", "m.setObjective(x, GRB.MINIMIZE)".into()),
        ("reviewers_feedback", "Reviewer 1:\nno issues".into()),
    ]);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for t in templates() {
        let path = golden.join(format!("{}.txt", t.id.replace('/', "__")));
        let want = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let got = render(t, &bindings).map_err(|e| e.to_string())? + "\n";
        ensure!(got == want, "{} differs from its golden file", t.id);
    }
    let anchors = [
        (Method::StandardS, Role::Single, "Give your Python code directly."),
        (Method::CotS, Role::Single, "Let's analyse the problem step by step"),
        (Method::CotS2, Role::ExtensiveForm, "Enumerate all possible scenarios, associating each with its corresponding probability."),
        (Method::CotSInstructions, Role::ExtractElements, "Your extraction will serve as the foundation for subsequent code implementation."),
        (Method::Agentic, Role::Reviewer, "Provide concise and precise feedback."),
        (Method::Agentic, Role::Updater, "Return the updated final code."),
    ];
    for (m, r, s) in anchors {
        ensure!(template(m, r).body.contains(s), "{m}/{}: missing anchor `{s}`", r.as_str());
    }
    let methods: std::collections::BTreeSet<Method> = templates().iter().map(|t| t.method).collect();
    ensure!(methods.len() == 5, "methods: {methods:?}");
    Ok(format!("{} templates match golden files; {} anchors present", templates().len(), anchors.len()))
}

// ---------------------------------------------------------------------------
// 9. End-to-end replay through the CLI

fn replay_config(out: &Path) -> String {
    let dir = workspace().join("experiments/replay");
    let base = std::fs::read_to_string(dir.join("config.toml")).unwrap();
    let abs = |p: &str| dir.join(p).canonicalize().unwrap().display().to_string();
    base.replace("\"../../corpus\"", &format!("{:?}", abs("../../corpus")))
        .replace("\"../../runs\"", &format!("{:?}", out.display().to_string()))
        .replace("fixtures = \"fixtures\"", &format!("fixtures = {:?}", abs("fixtures")))
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn end_to_end_replay() -> Outcome {
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut outputs = Vec::new();
    for pass in ["a", "b"] {
        let out = scratch.path().join(pass);
        let config = scratch.path().join(format!("{pass}.toml"));
        std::fs::write(&config, replay_config(&out)).map_err(|e| e.to_string())?;
        let status = Command::new(env!("CARGO_BIN_EXE_stochform"))
            .args(["run", "--mode", "replay", "--config"])
            .arg(&config)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(status.status.success(), "run failed: {}", String::from_utf8_lossy(&status.stderr));
        outputs.push(out.join("replay"));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "two passes took {secs:.1} s");

    let keep = |p: &Path| p.starts_with("report") || p.starts_with(TRANSCRIPTS_DIR) || p == Path::new(RECORDS_FILE);
    let (a, b) = (files(&outputs[0]), files(&outputs[1]));
    let a: BTreeMap<_, _> = a.into_iter().filter(|(p, _)| keep(p)).collect();
    let b: BTreeMap<_, _> = b.into_iter().filter(|(p, _)| keep(p)).collect();
    ensure!(a.keys().eq(b.keys()), "file sets differ");
    let differing: Vec<_> = a.iter().filter(|(p, bytes)| b[*p] != **bytes).map(|(p, _)| p.display().to_string()).collect();
    ensure!(differing.is_empty(), "differ: {differing:?}");
    ensure!(a.keys().any(|p| p.starts_with("report")), "no report written");

    let records = load_records(&outputs[0].join(RECORDS_FILE)).map_err(|e| e.to_string())?;
    ensure!(records.len() == 12, "{} records", records.len());
    let expected = expected_kinds();
    let mut kinds = BTreeMap::<&str, usize>::new();
    for r in &records {
        let key = format!("{}/{}/{}", r.cell.problem, r.cell.method, r.cell.run);
        ensure!(expected.get(&key) == Some(&r.error_kind), "{key}: {}", r.error_kind.as_str());
        *kinds.entry(r.error_kind.as_str()).or_default() += 1;
    }
    ensure!(kinds.len() == 3, "kinds covered: {kinds:?}");
    Ok(format!("2 passes in {secs:.1} s, {} identical files, kinds {kinds:?}", a.len()))
}

// ---------------------------------------------------------------------------
// 10. Aggregation

fn synthetic_record(rng: &mut impl Rng) -> RunRecord {
    let error_kind = [ErrorKind::None, ErrorKind::None, ErrorKind::None, ErrorKind::Runtime, ErrorKind::Compile][rng.random_range(0..5)];
    let (tv, tc, ot, ge) = (rng.random_range(0..6), rng.random_range(0..6), rng.random_range(1..4), rng.random_range(0..10));
    let tally = Tally {
        error_kind,
        accurate: rng.random_bool(0.3),
        truth_vars: tv,
        matched_vars: rng.random_range(0..=tv),
        truth_cons: tc,
        matched_cons: rng.random_range(0..=tc),
        matched_obj: rng.random_range(0..=ot),
        obj_terms: ot,
        gen_elements: ge,
        extra_elements: rng.random_range(0..=ge),
    };
    let m = tally.metrics();
    let category = Category::ALL[rng.random_range(0..4)];
    RunRecord {
        cell: CellKey {
            problem: format!("p{}", rng.random_range(0..5)),
            model: format!("m{}", rng.random_range(0..3)),
            method: Method::ALL[rng.random_range(0..5)],
            run: rng.random_range(1..=10),
        },
        category,
        instance_index: rng.random_range(1..=2),
        error_kind,
        pipeline_error: None,
        transcript: None,
        outcome: None,
        score: Some(ScoreReport {
            accuracy: m.accuracy,
            partial_score: m.partial_score,
            match_vars: m.match_vars,
            match_cons: m.match_cons,
            match_obj: m.match_obj,
            extra_gen: m.extra_gen,
            error_kind,
            var_mapping: BTreeMap::new(),
            matched_constraints: Vec::new(),
            extra_variables: Vec::new(),
            extra_constraints: Vec::new(),
            extra_objective_terms: Vec::new(),
            tally,
        }),
    }
}

fn aggregation() -> Outcome {
    let groupings: [&[GroupKey]; 4] =
        [&[], &[GroupKey::Model, GroupKey::Category], &[GroupKey::Method, GroupKey::Run], &[GroupKey::Category, GroupKey::Instance]];
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let records: Vec<RunRecord> = (0..rng.random_range(1..80)).map(|_| synthetic_record(&mut rng)).collect();
        let parts = rng.random_range(2..6);
        let mut split = vec![Vec::new(); parts];
        for r in &records {
            split[rng.random_range(0..parts)].push(r.clone());
        }
        let grouping = groupings[trial as usize % groupings.len()];
        let whole = aggregate(&records, grouping);
        let pieces: Vec<_> = split.iter().map(|s| aggregate(s, grouping)).collect();
        for row in &whole.rows {
            let key: Vec<&str> = row.key.iter().map(String::as_str).collect();
            for m in METRIC_NAMES {
                let (mut weighted, mut cells) = (BigRational::zero(), 0u64);
                for p in pieces.iter().filter_map(|p| p.row(&key)) {
                    weighted += p.exact(m) * BigRational::from_integer(BigInt::from(p.cells));
                    cells += p.cells;
                }
                ensure!(
                    cells == row.cells && row.exact(m) * BigRational::from_integer(BigInt::from(cells)) == weighted,
                    "trial {trial}: {m} for {key:?}"
                );
            }
        }
    }
    let agg = aggregate(&[synthetic_record(&mut ChaCha8Rng::seed_from_u64(1))], &[GroupKey::Method]);
    let csv = to_csv(&agg).map_err(|e| e.to_string())?;
    let header: Vec<&str> = csv.lines().next().unwrap_or("").split(',').collect();
    let want = ["accuracy", "partial_score", "match_vars", "match_cons", "match_obj", "extra_gen", "runtime_err", "compile_err"];
    ensure!(header[2..] == want, "columns {header:?}");
    Ok("100 partitions exact; report columns match".into())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("self-score fixed point", self_score),
        ("scoring invariances", invariance),
        ("solver oracle equivalence", oracle_equivalence),
        ("quantile accuracy", quantile_accuracy),
        ("chance reformulation", chance_reformulation),
        ("extensive form", extensive_form),
        ("LP round trip", lp_round_trip),
        ("prompt fidelity", prompt_fidelity),
        ("end-to-end replay", end_to_end_replay),
        ("aggregation", aggregation),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("[{:>2}] PASS {name} ({secs:.1} s): {msg}", i + 1),
            Err(msg) => {
                println!("[{:>2}] FAIL {name} ({secs:.1} s): {msg}", i + 1);
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
