//! Regenerates the replay fixtures and `expected.json`.
//!
//! Usage: `cargo run -p stochform --example make_fixtures [repo-root]`

use std::path::PathBuf;

use stochform::corpus::ingest_corpus;
use stochform::replay::write_demo;

fn main() {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    let corpus = ingest_corpus(&root.join("corpus")).unwrap_or_else(|e| panic!("{e}"));
    let dir = root.join("experiments/replay");
    for path in write_demo(&dir, &corpus).unwrap_or_else(|e| panic!("{e}")) {
        println!("{}", path.display());
    }
}
