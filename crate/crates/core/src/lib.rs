//! Chart summarization toolkit.
//!
//! The pipeline turns a chart into a natural-language summary:
//!
//! 1. [`chart`] describes charts and simulates what OCR and chart-to-table
//!    extractors read off them.
//! 2. [`parsing`] fuses the two extractions into text-number pairs.
//! 3. [`embedding`] maps a parsed chart to a feature vector.
//! 4. [`retrieval`] keeps a library of example texts per reasoning stage and
//!    returns the most similar ones with rank weights.
//! 5. [`cot`] walks the stages (chart type, caption, axes, trend), prompting a
//!    [`generation::Generator`] at each step, and merges the thoughts.
//! 6. [`evaluation`] scores summaries; [`dataset`] builds and splits corpora.
//!
//! Each capability has a runnable example:
//!
//! ```bash
//! cargo run --example parse_chart       # render and fuse a chart
//! cargo run --example noisy_fusion      # repair corrupted table values
//! cargo run --example retrieve_context  # per-stage nearest examples
//! cargo run --example summarize         # staged pipeline with traces
//! cargo run --example batch_summaries   # parallel pipeline runs
//! cargo run --example http_generator -- <base-url> [model]
//! cargo run --example evaluate_metrics  # BLEU, CIDEr, CS, PPL
//! cargo run --example s_norm_table      # cross-system normalization
//! cargo run --example dataset_corpus    # corpus, split, QA pairs
//! cargo run --example seeded_rng        # the pinned generator
//! ```

pub mod chart;
pub mod cot;
pub mod dataset;
pub mod embedding;
pub mod evaluation;
pub mod generation;
pub mod http;
pub mod parsing;
pub mod prompt;
pub mod retrieval;
pub mod rng;
pub mod stats;
pub mod text;

pub use chart::{parse_chart_spec, ChartSpec, ChartType, NoiseConfig};
pub use cot::{run_pipeline, Pipeline, StagePlan, SummaryResult};
pub use generation::{GenerationParams, Generator, TemplateGenerator};
pub use parsing::{fuse_extractions, ParsedChart, TextNumberPair};
pub use retrieval::{build_library, ContextLibrary, Stage};
pub use rng::SplitMix64;
