//! Problem corpus: `problems/<category>/<id>/{description.md, truth.lp | truth.spec, meta.json}`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stochform_core::detequiv::{compile_spec, parse_compact_spec};
use stochform_core::model::{parse_lp, Model};
use stochform_core::solver::{solve, Solution};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "SLP-2")]
    Slp2,
    #[serde(rename = "DLP-2")]
    Dlp2,
    JointChance,
    IndividualChance,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Slp2, Category::Dlp2, Category::JointChance, Category::IndividualChance];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Slp2 => "SLP-2",
            Category::Dlp2 => "DLP-2",
            Category::JointChance => "JointChance",
            Category::IndividualChance => "IndividualChance",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.as_str() == s)
    }

    /// Modeling instructions bound into instruction-guided prompts.
    pub fn instructions(self) -> &'static str {
        match self {
            Category::Slp2 => include_str!("../assets/instructions/SLP-2.txt"),
            Category::Dlp2 => include_str!("../assets/instructions/DLP-2.txt"),
            Category::JointChance => include_str!("../assets/instructions/JointChance.txt"),
            Category::IndividualChance => include_str!("../assets/instructions/IndividualChance.txt"),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("{}: {reason}", path.display())]
pub struct CorpusError {
    pub path: PathBuf,
    pub reason: String,
}

fn corpus_err(path: &Path, reason: impl Into<String>) -> CorpusError {
    CorpusError { path: path.to_path_buf(), reason: reason.into() }
}

#[derive(Debug, Clone, Deserialize)]
struct Meta {
    category: Category,
    instance_index: u32,
    #[serde(default)]
    title: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub id: String,
    pub category: Category,
    pub instance_index: u32,
    pub title: Option<String>,
    pub description: String,
    pub truth: Model,
    pub reference: Solution,
    pub truth_path: PathBuf,
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|e| corpus_err(path, e.to_string()))
}

fn sorted_dirs(path: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let entries = std::fs::read_dir(path).map_err(|e| corpus_err(path, e.to_string()))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| corpus_err(path, e.to_string()))?.path();
        if p.is_dir() {
            dirs.push(p);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Loads one instance directory and solves its ground truth.
pub fn load_instance(dir: &Path) -> Result<ProblemInstance, CorpusError> {
    let id = dir.file_name().and_then(|n| n.to_str()).ok_or_else(|| corpus_err(dir, "unnamed directory"))?.to_string();
    let meta_path = dir.join("meta.json");
    let meta: Meta = serde_json::from_str(&read(&meta_path)?).map_err(|e| corpus_err(&meta_path, e.to_string()))?;
    if meta.instance_index == 0 {
        return Err(corpus_err(&meta_path, "instance_index starts at 1"));
    }
    if let Some(parent) = dir.parent().and_then(|p| p.file_name()).and_then(|n| n.to_str()) {
        if parent != meta.category.as_str() {
            return Err(corpus_err(&meta_path, format!("category {} filed under {parent}/", meta.category)));
        }
    }
    let description = read(&dir.join("description.md"))?;
    if description.trim().is_empty() {
        return Err(corpus_err(&dir.join("description.md"), "empty description"));
    }

    let (lp_path, spec_path) = (dir.join("truth.lp"), dir.join("truth.spec"));
    let (truth, truth_path) = match (lp_path.is_file(), spec_path.is_file()) {
        (true, false) => (parse_lp(&read(&lp_path)?).map_err(|e| corpus_err(&lp_path, e.to_string()))?, lp_path),
        (false, true) => {
            let spec = parse_compact_spec(&read(&spec_path)?).map_err(|e| corpus_err(&spec_path, e.to_string()))?;
            (compile_spec(&spec).map_err(|e| corpus_err(&spec_path, e.to_string()))?, spec_path)
        }
        (true, true) => return Err(corpus_err(dir, "both truth.lp and truth.spec present")),
        (false, false) => return Err(corpus_err(dir, "missing truth.lp or truth.spec")),
    };
    let reference = solve(&truth).map_err(|e| corpus_err(&truth_path, e.to_string()))?;
    if !reference.is_optimal() {
        return Err(corpus_err(&truth_path, format!("ground truth is {}", reference.status.as_str())));
    }
    Ok(ProblemInstance {
        id,
        category: meta.category,
        instance_index: meta.instance_index,
        title: meta.title,
        description,
        truth,
        reference,
        truth_path,
    })
}

/// Reads every instance under `root/problems`, ordered by category,
/// instance index and id. Problem ids must be unique.
pub fn ingest_corpus(root: &Path) -> Result<Vec<ProblemInstance>, CorpusError> {
    let problems = root.join("problems");
    let mut out = Vec::new();
    for cat_dir in sorted_dirs(&problems)? {
        for dir in sorted_dirs(&cat_dir)? {
            out.push(load_instance(&dir)?);
        }
    }
    if out.is_empty() {
        return Err(corpus_err(&problems, "no problem instances"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for p in &out {
        if !seen.insert(p.id.as_str()) {
            return Err(corpus_err(&p.truth_path, format!("duplicate problem id `{}`", p.id)));
        }
    }
    out.sort_by(|a, b| (a.category, a.instance_index, &a.id).cmp(&(b.category, b.instance_index, &b.id)));
    Ok(out)
}
