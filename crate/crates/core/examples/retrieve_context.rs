//! Build a stage-indexed example library and look up context for a chart.
//!
//! ```bash
//! cargo run --example retrieve_context -- 3
//! ```

use chartthinker::dataset::{generate_synthetic_corpus, library_entries};
use chartthinker::embedding::{normalize, ChartEmbedder, HashingEmbedder};
use chartthinker::parsing::ParsedChart;
use chartthinker::retrieval::{build_library, weighted_context, Stage};

fn main() {
    let k: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let embedder = HashingEmbedder::default();
    let (library_specs, _) = generate_synthetic_corpus(40, 1);
    let library = build_library(&library_entries(&library_specs), &embedder).expect("library");
    println!("library: {} examples, dim {}", library.len(), library.dim());

    let (queries, _) = generate_synthetic_corpus(1, 99);
    let spec = &queries[0];
    let parsed = ParsedChart::from_spec(spec).with_chart_type(spec.chart_type);
    let query = normalize(&embedder.embed_chart(&parsed, parsed.chart_type_hint)).expect("nonzero chart");
    println!("query: {} ({}) {:?}\n", spec.id, spec.chart_type, spec.title);

    for stage in Stage::ALL {
        let ranked = library.retrieve_top_k(stage, &query, k).expect("retrieval");
        let ctx = weighted_context(&ranked);
        println!("{stage}:");
        for (hit, ex) in ranked.iter().zip(&ctx.examples) {
            println!(
                "  #{} {:<18} cos {:.4} w {:.3}  {}",
                hit.rank,
                ex.id,
                hit.similarity,
                ex.weight,
                short(&ex.text)
            );
        }
    }
}

fn short(text: &str) -> String {
    let mut s: String = text.chars().take(60).collect();
    if s.len() < text.len() {
        s.push_str("...");
    }
    s
}
