//! Generate a synthetic corpus, validate it, split it and derive QA pairs.
//!
//! ```bash
//! cargo run --example dataset_corpus -- /tmp/charts-corpus
//! ```

use std::path::PathBuf;

use chartthinker::dataset::{
    generate_qa_pairs, generate_synthetic_corpus, split_dataset, validate_manifest, write_corpus, DEFAULT_RATIOS,
};
use chartthinker::generation::{GenerationParams, TemplateGenerator};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("chartthinker-corpus"));
    let (specs, manifest) = generate_synthetic_corpus(20, 7);
    write_corpus(&dir, &specs, &manifest).expect("write corpus");
    println!("wrote {} charts to {}", specs.len(), dir.display());

    let report = validate_manifest(&manifest, &dir);
    println!(
        "validation: {} of {} entries valid",
        report.entries.len() - report.failures().count(),
        report.entries.len()
    );

    let split = split_dataset(&manifest, &DEFAULT_RATIOS, 7).expect("split");
    let [train, val, test] = split.split_sizes();
    println!("split: train {train}, val {val}, test {test}");

    let generator = TemplateGenerator::new();
    let summary = &manifest.entries[0].summary;
    println!("\n{summary}\n");
    for qa in generate_qa_pairs(summary, &generator, 4, &GenerationParams::default()).expect("qa") {
        println!("Q: {}\nA: {}", qa.question, qa.answer);
    }
}
