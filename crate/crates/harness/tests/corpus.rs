use std::path::{Path, PathBuf};

use stochform::corpus::{ingest_corpus, load_instance, Category};
use stochform_core::detequiv::normal_quantile;
use stochform_core::model::{emit_lp, parse_lp};
use stochform_core::softscore::{score_models, ErrorKind};
use stochform_core::Sense;

fn corpus_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn shipped_corpus_has_two_instances_per_category() {
    let corpus = ingest_corpus(&corpus_root()).unwrap();
    assert_eq!(corpus.len(), 8);
    for cat in Category::ALL {
        let mut idx: Vec<u32> = corpus.iter().filter(|p| p.category == cat).map(|p| p.instance_index).collect();
        idx.sort();
        assert_eq!(idx, [1, 2], "{cat}");
        assert!(!cat.instructions().trim().is_empty());
    }
    assert!(corpus.iter().all(|p| p.reference.is_optimal()));
}

#[test]
fn ground_truths_are_score_fixed_points() {
    for p in ingest_corpus(&corpus_root()).unwrap() {
        let r = score_models(&p.truth, &p.truth, Some(&p.reference), Some(&p.reference));
        let m = r.metrics();
        assert_eq!(
            (m.accuracy, m.partial_score, m.match_vars, m.match_cons, m.match_obj, m.extra_gen),
            (100.0, 100.0, 100.0, 100.0, 100.0, 0.0),
            "{}",
            p.id
        );
        assert_eq!(r.error_kind, ErrorKind::None);
    }
}

#[test]
fn ground_truths_round_trip_through_lp_text() {
    for p in ingest_corpus(&corpus_root()).unwrap() {
        let text = emit_lp(&p.truth);
        let back = parse_lp(&text).unwrap();
        assert!(back.approx_eq(&p.truth, 1e-9), "{}", p.id);
        assert_eq!(emit_lp(&back), text);
    }
}

/// Each joint row holds with probability α^(1/m), m rows, independent normals.
#[test]
fn joint_chance_truths_use_the_equal_split() {
    let cases: [(&str, f64, &[(f64, f64)]); 2] = [
        ("project_funding", 0.95, &[(50.0, 5.0), (70.0, 8.0)]),
        ("district_water", 0.90, &[(30.0, 3.0), (45.0, 4.0), (25.0, 2.0)]),
    ];
    let corpus = ingest_corpus(&corpus_root()).unwrap();
    for (id, alpha, rows) in cases {
        let p = corpus.iter().find(|p| p.id == id).unwrap();
        let z = normal_quantile(alpha.powf(1.0 / rows.len() as f64)).unwrap();
        let bounds: Vec<f64> = p.truth.constraints().iter().filter(|c| c.sense == Sense::Ge).map(|c| c.rhs).collect();
        assert_eq!(bounds.len(), rows.len());
        for (b, (mu, sigma)) in bounds.iter().zip(rows) {
            assert!((b - (mu + z * sigma)).abs() < 1e-9, "{id}: {b} vs {}", mu + z * sigma);
        }
    }
}

fn write_instance(root: &Path, cat: &str, id: &str, files: &[(&str, &str)]) -> PathBuf {
    let dir = root.join("problems").join(cat).join(id);
    std::fs::create_dir_all(&dir).unwrap();
    for (name, body) in files {
        std::fs::write(dir.join(name), body).unwrap();
    }
    dir
}

const META: &str = r#"{"category": "DLP-2", "instance_index": 1}"#;
const LP: &str = "Minimize\n obj: x\nSubject To\n c: x >= 2\nEnd\n";

#[test]
fn malformed_instances_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = write_instance(tmp.path(), "DLP-2", "ok", &[("meta.json", META), ("description.md", "d"), ("truth.lp", LP)]);
    assert_eq!(load_instance(&ok).unwrap().reference.objective, Some(2.0));

    let infeasible = "Minimize\n obj: x\nSubject To\n a: x >= 2\n b: x <= 1\nEnd\n";
    let cases: [(&str, &[(&str, &str)], &str); 5] = [
        ("infeasible", &[("meta.json", META), ("description.md", "d"), ("truth.lp", infeasible)], "infeasible"),
        ("no_desc", &[("meta.json", META), ("truth.lp", LP)], "description.md"),
        ("no_truth", &[("meta.json", META), ("description.md", "d")], "missing truth"),
        ("blank", &[("meta.json", META), ("description.md", " \n"), ("truth.lp", LP)], "empty description"),
        (
            "misfiled",
            &[("meta.json", r#"{"category": "SLP-2", "instance_index": 1}"#), ("description.md", "d"), ("truth.lp", LP)],
            "filed under",
        ),
    ];
    for (id, files, needle) in cases {
        let dir = write_instance(tmp.path(), "DLP-2", id, files);
        let err = load_instance(&dir).unwrap_err();
        assert!(err.to_string().contains(needle), "{id}: {err}");
    }
}

#[test]
fn duplicate_ids_across_categories_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    write_instance(tmp.path(), "DLP-2", "same", &[("meta.json", META), ("description.md", "d"), ("truth.lp", LP)]);
    let meta = r#"{"category": "SLP-2", "instance_index": 1}"#;
    write_instance(tmp.path(), "SLP-2", "same", &[("meta.json", meta), ("description.md", "d"), ("truth.lp", LP)]);
    assert!(ingest_corpus(tmp.path()).unwrap_err().to_string().contains("same"));
}
