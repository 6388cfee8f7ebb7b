//! Summarize many charts in parallel; output order follows input order.
//!
//! ```bash
//! cargo run --example batch_summaries -- 4
//! ```

use std::time::Instant;

use chartthinker::cot::{Pipeline, StagePlan};
use chartthinker::dataset::{generate_synthetic_corpus, library_entries};
use chartthinker::embedding::HashingEmbedder;
use chartthinker::generation::TemplateGenerator;
use chartthinker::parsing::ParsedChart;
use chartthinker::retrieval::build_library;
use chartthinker::rng::SplitMix64;

fn main() {
    let workers: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let embedder = HashingEmbedder::default();
    let (library_specs, _) = generate_synthetic_corpus(40, 1);
    let library = build_library(&library_entries(&library_specs), &embedder).expect("library");
    let plan = StagePlan::default();
    let generator = TemplateGenerator::new();
    let pipeline = Pipeline {
        library: &library,
        embedder: &embedder,
        plan: &plan,
        generator: &generator,
    };

    let (specs, _) = generate_synthetic_corpus(24, 5);
    let items: Vec<(ParsedChart, u64)> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            (
                ParsedChart::from_spec(s).with_chart_type(s.chart_type),
                SplitMix64::derive_seed(0, i as u64),
            )
        })
        .collect();

    let start = Instant::now();
    let results = pipeline.run_batch(&items, workers);
    println!(
        "{} charts with {workers} workers in {:?}",
        results.len(),
        start.elapsed()
    );
    for (spec, r) in specs.iter().zip(&results) {
        match r {
            Ok(res) => println!("{}: {}", spec.id, res.summary.split(". ").next().unwrap_or_default()),
            Err(e) => println!("{}: error {e}", spec.id),
        }
    }
}
