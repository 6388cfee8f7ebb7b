//! Run the staged summarization pipeline with the offline template generator.
//!
//! ```bash
//! cargo run --example summarize -- 7
//! ```

use chartthinker::cot::{run_pipeline, StagePlan};
use chartthinker::dataset::{generate_synthetic_corpus, library_entries};
use chartthinker::embedding::HashingEmbedder;
use chartthinker::generation::{GenerationParams, Generator, TemplateGenerator};
use chartthinker::parsing::ParsedChart;
use chartthinker::retrieval::build_library;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let (library_specs, _) = generate_synthetic_corpus(40, 1);
    let library = build_library(&library_entries(&library_specs), &HashingEmbedder::default()).expect("library");

    let (specs, _) = generate_synthetic_corpus(4, seed);
    let spec = &specs[0];
    let parsed = ParsedChart::from_spec(spec).with_chart_type(spec.chart_type);
    let generator = TemplateGenerator::new();
    let result = run_pipeline(&parsed, &library, &StagePlan::default(), &generator, seed).expect("pipeline");

    for t in &result.thoughts {
        println!("== {} (context: {})", t.stage, t.retrieved_ids.join(", "));
        println!("{}\n", t.prompt);
        let out = generator
            .generate(&t.prompt, &GenerationParams::default())
            .expect("generation");
        let trace = out.trace.expect("template generator traces its output");
        println!(
            "-> {}\n   {} tokens, log p = {:.3}\n",
            t.text,
            trace.tokens.len(),
            trace.total_logprob
        );
    }
    println!("SUMMARY: {}", result.summary);
}
