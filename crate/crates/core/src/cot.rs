//! Staged chain-of-thought summarization.
//!
//! Each chart goes through the planned stages in order. Every stage embeds
//! the chart, retrieves the top-k examples of that stage from the library,
//! composes a prompt that also carries the earlier thoughts, and calls the
//! generator. The thoughts are then integrated into one summary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{normalize, ChartEmbedder, HashingEmbedder};
use crate::generation::{merge_sentences, GenerationError, GenerationParams, Generator, GeneratorKind};
use crate::parsing::{to_prompt_block, ParsedChart};
use crate::prompt;
use crate::retrieval::{weighted_context, ContextLibrary, RetrievalError, Stage, WeightedContext};
use crate::rng::SplitMix64;

pub const DEFAULT_TOP_K: usize = 3;
pub const INTEGRATE_TASK: &str = "integrate";
pub const INTEGRATE_INSTRUCTION: &str =
    "Combine the thoughts below into one fluent chart description. Keep every number and do not add facts.";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("generation failed at stage {stage}")]
    GenerationFailed {
        stage: String,
        #[source]
        source: GenerationError,
    },
    #[error("generator returned empty text at stage {0}")]
    EmptyOutput(String),
    #[error("library has no examples for stage {0} and the stage is not skippable")]
    EmptyStage(Stage),
    #[error("invalid stage plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

pub fn default_instruction(stage: Stage) -> &'static str {
    match stage {
        Stage::ChartType => "State the type of the chart.",
        Stage::Caption => "Give the overall caption of the chart.",
        Stage::Axes => "Explain what the horizontal and vertical axes represent.",
        Stage::Trend => "Describe the trend of the chart data with its key values.",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub stage: Stage,
    pub instruction: String,
    pub k: usize,
    pub params: GenerationParams,
    /// Run without context when the library has no examples for the stage.
    pub skippable: bool,
}

impl StageConfig {
    pub fn new(stage: Stage) -> Self {
        Self {
            stage,
            instruction: default_instruction(stage).to_string(),
            k: DEFAULT_TOP_K,
            params: GenerationParams::default(),
            skippable: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    stages: Vec<StageConfig>,
}

impl Default for StagePlan {
    fn default() -> Self {
        Self {
            stages: Stage::ALL.iter().map(|&s| StageConfig::new(s)).collect(),
        }
    }
}

impl StagePlan {
    pub fn new(stages: Vec<StageConfig>) -> Result<Self, PipelineError> {
        if stages.is_empty() {
            return Err(PipelineError::InvalidPlan("no stages".into()));
        }
        for (i, s) in stages.iter().enumerate() {
            if stages[..i].iter().any(|p| p.stage == s.stage) {
                return Err(PipelineError::InvalidPlan(format!("stage {} listed twice", s.stage)));
            }
        }
        Ok(Self { stages })
    }

    /// Default configs for `stages`, in the given order.
    pub fn for_stages(stages: &[Stage]) -> Result<Self, PipelineError> {
        Self::new(stages.iter().map(|&s| StageConfig::new(s)).collect())
    }

    pub fn stages(&self) -> &[StageConfig] {
        &self.stages
    }

    pub fn with_k(mut self, k: usize) -> Self {
        for s in &mut self.stages {
            s.k = k;
        }
        self
    }

    pub fn with_params(mut self, params: GenerationParams) -> Self {
        for s in &mut self.stages {
            s.params = params;
        }
        self
    }

    pub fn skippable(mut self, skippable: bool) -> Self {
        for s in &mut self.stages {
            s.skippable = skippable;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtOutput {
    pub stage: Stage,
    pub prompt: String,
    pub text: String,
    pub generator_id: String,
    pub retrieved_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryResult {
    pub summary: String,
    pub thoughts: Vec<ThoughtOutput>,
    pub trace_seed: u64,
    /// Prompt of the final generation call; absent when thoughts are merged
    /// locally.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration_prompt: Option<String>,
}

impl SummaryResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Prompt for one stage: stage marker, instruction, ranked examples, chart
/// block, then earlier thoughts.
pub fn compose_stage_prompt(
    stage: Stage,
    instruction: &str,
    parsed: &ParsedChart,
    ctx: &WeightedContext,
    prior_thoughts: &[ThoughtOutput],
) -> String {
    let mut lines = vec![
        format!("{}{}", prompt::STAGE, stage),
        format!("{}{}", prompt::INSTRUCTION, prompt::single_line(instruction)),
    ];
    for ex in &ctx.examples {
        lines.push(prompt::example_line(ex.rank, &ex.text));
    }
    if let Some(t) = parsed.chart_type_hint {
        lines.push(format!("{}{}", prompt::TYPE, t));
    }
    let block = to_prompt_block(parsed);
    if !block.is_empty() {
        lines.push(prompt::CHART.to_string());
        lines.push(block);
    }
    for t in prior_thoughts {
        lines.push(format!("{}{}", prompt::SO_FAR, prompt::single_line(&t.text)));
    }
    lines.join("\n")
}

pub fn integration_prompt(thoughts: &[ThoughtOutput]) -> String {
    let mut lines = vec![
        format!("{}{}", prompt::TASK, INTEGRATE_TASK),
        format!("{}{}", prompt::INSTRUCTION, INTEGRATE_INSTRUCTION),
    ];
    for t in thoughts {
        lines.push(format!("{}{}", prompt::THOUGHT, prompt::single_line(&t.text)));
    }
    lines.join("\n")
}

/// Merge the thoughts into the final summary. Returns the summary and, for
/// external generators, the prompt of the one extra call.
pub fn integrate(
    thoughts: &[ThoughtOutput],
    gen: &dyn Generator,
    params: &GenerationParams,
) -> Result<(String, Option<String>), PipelineError> {
    let (summary, prompt) = match gen.kind() {
        GeneratorKind::Template => (
            merge_sentences(&thoughts.iter().map(|t| t.text.as_str()).collect::<Vec<_>>()),
            None,
        ),
        GeneratorKind::External => {
            let p = integration_prompt(thoughts);
            let out = gen
                .generate(&p, params)
                .map_err(|source| PipelineError::GenerationFailed {
                    stage: INTEGRATE_TASK.to_string(),
                    source,
                })?;
            (out.text.trim().to_string(), Some(p))
        }
    };
    if summary.is_empty() {
        return Err(PipelineError::EmptyOutput(INTEGRATE_TASK.to_string()));
    }
    Ok((summary, prompt))
}

/// Library, embedder, plan and generator bundled for repeated use.
pub struct Pipeline<'a> {
    pub library: &'a ContextLibrary,
    pub embedder: &'a dyn ChartEmbedder,
    pub plan: &'a StagePlan,
    pub generator: &'a dyn Generator,
}

impl Pipeline<'_> {
    fn context_for(&self, config: &StageConfig, parsed: &ParsedChart) -> Result<WeightedContext, PipelineError> {
        if self.library.stage_len(config.stage) == 0 {
            return if config.skippable {
                Ok(WeightedContext::empty())
            } else {
                Err(PipelineError::EmptyStage(config.stage))
            };
        }
        if config.k == 0 {
            return Ok(WeightedContext::empty());
        }
        let raw = self.embedder.embed_chart(parsed, parsed.chart_type_hint);
        // nothing to compare an empty chart against
        let Ok(query) = normalize(&raw) else {
            return Ok(WeightedContext::empty());
        };
        let ranked = self.library.retrieve_top_k(config.stage, &query, config.k)?;
        Ok(weighted_context(&ranked))
    }

    pub fn run(&self, parsed: &ParsedChart, seed: u64) -> Result<SummaryResult, PipelineError> {
        let mut thoughts: Vec<ThoughtOutput> = Vec::with_capacity(self.plan.stages.len());
        for (i, config) in self.plan.stages.iter().enumerate() {
            let ctx = self.context_for(config, parsed)?;
            let prompt = compose_stage_prompt(config.stage, &config.instruction, parsed, &ctx, &thoughts);
            let params = config.params.with_seed(SplitMix64::derive_seed(seed, i as u64));
            let out = self
                .generator
                .generate(&prompt, &params)
                .map_err(|source| PipelineError::GenerationFailed {
                    stage: config.stage.to_string(),
                    source,
                })?;
            let text = out.text.trim().to_string();
            if text.is_empty() {
                return Err(PipelineError::EmptyOutput(config.stage.to_string()));
            }
            thoughts.push(ThoughtOutput {
                stage: config.stage,
                prompt,
                text,
                generator_id: self.generator.id().to_string(),
                retrieved_ids: ctx.examples.into_iter().map(|e| e.id).collect(),
            });
        }
        let params = self
            .plan
            .stages
            .last()
            .map_or_else(GenerationParams::default, |s| s.params)
            .with_seed(SplitMix64::derive_seed(seed, self.plan.stages.len() as u64));
        let (summary, integration_prompt) = integrate(&thoughts, self.generator, &params)?;
        Ok(SummaryResult {
            summary,
            thoughts,
            trace_seed: seed,
            integration_prompt,
        })
    }

    /// Summarize many charts, running up to `workers` at once (capped by the
    /// generator's declared concurrency). Results keep input order.
    pub fn run_batch(&self, items: &[(ParsedChart, u64)], workers: usize) -> Vec<Result<SummaryResult, PipelineError>> {
        let workers = self.generator.concurrency().workers(workers).min(items.len().max(1));
        if workers <= 1 {
            return items.iter().map(|(p, s)| self.run(p, *s)).collect();
        }
        let next = std::sync::atomic::AtomicUsize::new(0);
        let mut slots: Vec<Option<Result<SummaryResult, PipelineError>>> = (0..items.len()).map(|_| None).collect();
        let results = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some((parsed, seed)) = items.get(i) else { break };
                    let r = self.run(parsed, *seed);
                    results.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
                });
            }
        });
        slots.into_iter().map(|r| r.expect("every item processed")).collect()
    }
}

/// Run the plan with the default hashing embedder sized to the library.
pub fn run_pipeline(
    parsed: &ParsedChart,
    library: &ContextLibrary,
    plan: &StagePlan,
    generator: &dyn Generator,
    seed: u64,
) -> Result<SummaryResult, PipelineError> {
    let embedder = HashingEmbedder::new(library.dim()).unwrap_or_default();
    Pipeline {
        library,
        embedder: &embedder,
        plan,
        generator,
    }
    .run(parsed, seed)
}
