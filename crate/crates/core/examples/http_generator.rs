//! Drive the pipeline with a chat-completions endpoint.
//!
//! ```bash
//! CHARTTHINKER_API_KEY=... cargo run --example http_generator -- http://localhost:8000/v1 my-model
//! ```

use std::time::Duration;

use chartthinker::cot::{run_pipeline, StagePlan};
use chartthinker::dataset::{generate_synthetic_corpus, library_entries};
use chartthinker::embedding::HashingEmbedder;
use chartthinker::http::{HttpConfig, HttpGenerator};
use chartthinker::parsing::ParsedChart;
use chartthinker::retrieval::build_library;

fn main() {
    let mut args = std::env::args().skip(1);
    let Some(base_url) = args.next() else {
        eprintln!("usage: http_generator <base-url> [model]");
        eprintln!("requests go to <base-url>/chat/completions; CHARTTHINKER_API_KEY is sent as a bearer token");
        return;
    };
    let model = args.next().unwrap_or_else(|| "default".into());

    let mut config = HttpConfig::new(base_url, model);
    config.timeout = Duration::from_secs(30);
    let generator = HttpGenerator::new(config).expect("http client");
    println!("endpoint: {}", generator.url());

    let (library_specs, _) = generate_synthetic_corpus(40, 1);
    let library = build_library(&library_entries(&library_specs), &HashingEmbedder::default()).expect("library");
    let (specs, _) = generate_synthetic_corpus(1, 3);
    let parsed = ParsedChart::from_spec(&specs[0]).with_chart_type(specs[0].chart_type);

    match run_pipeline(&parsed, &library, &StagePlan::default(), &generator, 0) {
        Ok(result) => {
            for t in &result.thoughts {
                println!("{}: {}", t.stage, t.text);
            }
            println!("\nSUMMARY: {}", result.summary);
        }
        Err(e) => {
            eprintln!("pipeline failed: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            std::process::exit(1);
        }
    }
}
