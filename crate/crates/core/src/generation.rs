//! Text generators.
//!
//! A [`Generator`] turns a prompt into text. [`TemplateGenerator`] is the
//! deterministic offline implementation: it reads the stage marker and chart
//! block back out of the prompt, fills a fixed sentence template, and scores
//! the emitted tokens under [`ContextUnigramModel`], so every generation comes
//! with a factorized trace `log p(y|x) = sum_l log p(y_l | y_<l, x)`.
//! [`crate::http::HttpGenerator`] talks to a chat-completions endpoint and
//! returns no trace.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::ChartType;
use crate::parsing::TextNumberPair;
use crate::prompt::PromptView;
use crate::retrieval::Stage;
use crate::stats;
use crate::text::{format_number, split_sentences, tokenize};

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("endpoint returned status {status}: {body}")]
    EndpointError { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            max_tokens: 512,
            temperature: 0.0,
            seed: 0,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.max_tokens == 0 {
            return Err(GenerationError::InvalidParams("max_tokens must be > 0".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GenerationError::InvalidParams(format!(
                "temperature must be finite and >= 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Per-token log-probabilities of a generated sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub tokens: Vec<String>,
    pub stepwise_logprobs: Vec<f64>,
    pub total_logprob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub text: String,
    pub trace: Option<GenerationTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Offline and deterministic; consolidation is a local merge.
    Template,
    /// Remote model; consolidation is one more generation call.
    External,
}

/// How many calls a generator accepts at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concurrency {
    Serial,
    Bounded(usize),
    Unbounded,
}

impl Concurrency {
    pub fn workers(self, requested: usize) -> usize {
        let requested = requested.max(1);
        match self {
            Concurrency::Serial => 1,
            Concurrency::Bounded(n) => requested.min(n.max(1)),
            Concurrency::Unbounded => requested,
        }
    }
}

pub trait Generator: Send + Sync {
    fn id(&self) -> &str;
    fn kind(&self) -> GeneratorKind;
    fn concurrency(&self) -> Concurrency;
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Generation, GenerationError>;
}

impl<G: Generator + ?Sized> Generator for &G {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn kind(&self) -> GeneratorKind {
        (**self).kind()
    }
    fn concurrency(&self) -> Concurrency {
        (**self).concurrency()
    }
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Generation, GenerationError> {
        (**self).generate(prompt, params)
    }
}

const UNK: &str = "<unk>";

/// Words every template can emit.
const TEMPLATE_WORDS: &str = "this is a an the chart . , bar line pie scatter shows data for its \
    x - axis y represents and slices represent measured as categories values of are in \
    overall increasing decreasing stable trend from to peaking at has value largest share \
    with only slice no visible lists positions";

/// Add-one unigram model over the prompt and the text generated so far.
///
/// For a context `C` (the prompt tokens followed by the tokens emitted so
/// far) the vocabulary is the template words, every token of `C`, and
/// `<unk>`; `p(w | C) = (1 + count_C(w)) / (|V_C| + |C|)`. Tokens outside
/// the vocabulary are scored as `<unk>`, so scoring never fails.
#[derive(Debug, Clone)]
pub struct ContextUnigramModel {
    base: BTreeSet<String>,
}

impl Default for ContextUnigramModel {
    fn default() -> Self {
        let mut base: BTreeSet<String> = tokenize(TEMPLATE_WORDS).into_iter().collect();
        base.insert(UNK.to_string());
        Self { base }
    }
}

struct ContextState<'a> {
    base: &'a BTreeSet<String>,
    counts: HashMap<String, u64>,
    extra_vocab: usize,
    len: u64,
}

impl<'a> ContextState<'a> {
    fn new(base: &'a BTreeSet<String>) -> Self {
        Self {
            base,
            counts: HashMap::new(),
            extra_vocab: 0,
            len: 0,
        }
    }

    fn push(&mut self, token: &str) {
        let c = self.counts.entry(token.to_string()).or_insert(0);
        if *c == 0 && !self.base.contains(token) {
            self.extra_vocab += 1;
        }
        *c += 1;
        self.len += 1;
    }

    fn vocab_size(&self) -> usize {
        self.base.len() + self.extra_vocab
    }

    fn log_prob(&self, token: &str) -> f64 {
        let in_vocab = self.base.contains(token) || self.counts.contains_key(token);
        let count = if in_vocab {
            self.counts.get(token).copied().unwrap_or(0)
        } else {
            0
        };
        let denom = self.vocab_size() as f64 + self.len as f64;
        ((1 + count) as f64 / denom).ln()
    }
}

impl ContextUnigramModel {
    fn state_for(&self, context: &[String]) -> ContextState<'_> {
        let mut st = ContextState::new(&self.base);
        for t in context {
            st.push(t);
        }
        st
    }

    /// Full distribution over the vocabulary for `context`, sorted by token.
    pub fn distribution(&self, context: &[String]) -> Vec<(String, f64)> {
        let st = self.state_for(context);
        let mut vocab: BTreeSet<&str> = self.base.iter().map(String::as_str).collect();
        vocab.extend(context.iter().map(String::as_str));
        vocab
            .into_iter()
            .map(|w| (w.to_string(), st.log_prob(w).exp()))
            .collect()
    }

    /// Stepwise log-probabilities of `tokens` after `prompt`.
    pub fn score_sequence(&self, tokens: &[String], prompt: &str) -> GenerationTrace {
        self.score_after(tokens, &tokenize(prompt))
    }

    /// Stepwise log-probabilities of `tokens` after the tokens of `context`.
    pub fn score_after(&self, tokens: &[String], context: &[String]) -> GenerationTrace {
        let mut st = self.state_for(context);
        let mut stepwise = Vec::with_capacity(tokens.len());
        for t in tokens {
            stepwise.push(st.log_prob(t));
            st.push(t);
        }
        GenerationTrace {
            tokens: tokens.to_vec(),
            total_logprob: stepwise.iter().sum(),
            stepwise_logprobs: stepwise,
        }
    }
}

/// Deterministic offline generator that writes chart descriptions from
/// fixed sentence templates.
///
/// Sampling parameters are validated but do not change the output.
#[derive(Debug, Clone, Default)]
pub struct TemplateGenerator {
    model: ContextUnigramModel,
}

impl TemplateGenerator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn model(&self) -> &ContextUnigramModel {
        &self.model
    }

    pub fn score_sequence(&self, tokens: &[String], prompt: &str) -> GenerationTrace {
        self.model.score_sequence(tokens, prompt)
    }
}

impl Generator for TemplateGenerator {
    fn id(&self) -> &str {
        "template"
    }

    fn kind(&self) -> GeneratorKind {
        GeneratorKind::Template
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Unbounded
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Generation, GenerationError> {
        if prompt.trim().is_empty() {
            return Err(GenerationError::EmptyPrompt);
        }
        params.validate()?;
        let view = PromptView::parse(prompt);
        let chart = ChartFacts::from_view(&view);
        let text = match view.stage {
            Some(stage) => stage_sentence(stage, &chart),
            None if !view.thoughts.is_empty() => merge_sentences(&view.thoughts),
            None => verbalize(&chart),
        };
        let tokens = tokenize(&text);
        let trace = self.model.score_sequence(&tokens, prompt);
        Ok(Generation {
            text,
            trace: Some(trace),
        })
    }
}

/// Chart content a template can draw on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChartFacts {
    pub chart_type: Option<ChartType>,
    pub title: Option<String>,
    pub x_label: Option<String>,
    pub y_label: Option<String>,
    pub legends: Vec<String>,
    pub pairs: Vec<TextNumberPair>,
}

impl ChartFacts {
    /// `TEXT` entries are read positionally: title, x-axis label, y-axis label.
    pub fn from_view(view: &PromptView) -> Self {
        Self {
            chart_type: view.resolved_chart_type(),
            title: view.text.first().cloned(),
            x_label: view.text.get(1).cloned(),
            y_label: view.text.get(2).cloned(),
            legends: view.legends.clone(),
            pairs: view.pairs.clone(),
        }
    }

    pub fn from_parsed(parsed: &crate::parsing::ParsedChart) -> Self {
        Self {
            chart_type: parsed.chart_type_hint,
            title: parsed.other_text.first().cloned(),
            x_label: parsed.other_text.get(1).cloned(),
            y_label: parsed.other_text.get(2).cloned(),
            legends: parsed.legends.clone(),
            pairs: parsed.pairs.clone(),
        }
    }

    fn series(&self) -> Vec<(String, Vec<(String, f64)>)> {
        crate::parsing::ParsedChart {
            pairs: self.pairs.clone(),
            ..Default::default()
        }
        .series()
    }
}

fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

/// Trend word for a value sequence, from the sign of its least-squares slope.
pub fn trend_word(values: &[f64]) -> &'static str {
    match stats::slope_sign(values) {
        1 => "increasing",
        -1 => "decreasing",
        _ => "stable",
    }
}

/// The sentence(s) the template generator emits for one stage.
pub fn stage_sentence(stage: Stage, chart: &ChartFacts) -> String {
    match stage {
        Stage::ChartType => match chart.chart_type {
            Some(t) => format!("This is a {t} chart."),
            None => "This is a chart.".to_string(),
        },
        Stage::Caption => match (&chart.title, chart.legends.is_empty()) {
            (Some(title), _) => format!("The chart shows {title}."),
            (None, false) => format!("The chart shows data for {}.", join_list(&chart.legends)),
            (None, true) => "The chart shows its data.".to_string(),
        },
        Stage::Axes => axes_sentence(chart),
        Stage::Trend => trend_sentences(chart),
    }
}

fn axes_sentence(chart: &ChartFacts) -> String {
    let pie = chart.chart_type == Some(ChartType::Pie);
    match (&chart.x_label, &chart.y_label, pie) {
        (Some(x), Some(y), false) => format!("The x-axis represents {x} and the y-axis represents {y}."),
        (Some(x), None, false) => format!("The x-axis represents {x}."),
        (Some(x), Some(y), true) => format!("The slices represent {x}, measured as {y}."),
        (Some(x), None, true) => format!("The slices represent {x}."),
        (None, _, _) => {
            let n = chart.series().first().map_or(0, |(_, p)| p.len());
            format!("The x-axis lists {n} positions.")
        }
    }
}

fn trend_sentences(chart: &ChartFacts) -> String {
    let series = chart.series();
    if series.is_empty() {
        return "No data values are visible.".to_string();
    }
    let mut out = Vec::new();
    if chart.chart_type == Some(ChartType::Pie) {
        let (_, points) = &series[0];
        let values: Vec<f64> = points.iter().map(|(_, v)| *v).collect();
        let (x, v) = &points[stats::argmax(&values)];
        if points.len() == 1 {
            out.push(format!("The only slice is {x} with {}.", format_number(*v)));
        } else {
            let parts: Vec<String> = points
                .iter()
                .map(|(x, v)| format!("{} for {x}", format_number(*v)))
                .collect();
            out.push(format!("The values are {}.", join_list(&parts)));
            out.push(format!("The largest share is {x} with {}.", format_number(*v)));
        }
        return out.join(" ");
    }
    for (name, points) in &series {
        let values: Vec<f64> = points.iter().map(|(_, v)| *v).collect();
        let fmt = |i: usize| (format_number(points[i].1), points[i].0.as_str());
        if points.len() == 1 {
            let (v, x) = fmt(0);
            out.push(format!("{name} has a value of {v} in {x}."));
            continue;
        }
        let (v0, x0) = fmt(0);
        let (vn, xn) = fmt(points.len() - 1);
        let (vm, xm) = fmt(stats::argmax(&values));
        out.push(format!(
            "{name} shows an overall {} trend, from {v0} in {x0} to {vn} in {xn}, peaking at {vm} in {xm}.",
            trend_word(&values)
        ));
        if points.len() > 2 {
            let parts: Vec<String> = points
                .iter()
                .map(|(x, v)| format!("{} in {x}", format_number(*v)))
                .collect();
            out.push(format!("The values of {name} are {}.", join_list(&parts)));
        }
    }
    out.join(" ")
}

/// Concatenate texts sentence by sentence, keeping the first occurrence of
/// each sentence (exact match after trimming).
pub fn merge_sentences<S: AsRef<str>>(texts: &[S]) -> String {
    let mut seen: Vec<String> = Vec::new();
    for t in texts {
        for s in split_sentences(t.as_ref()) {
            if !seen.contains(&s) {
                seen.push(s);
            }
        }
    }
    seen.join(" ")
}

/// Full description: every stage in order, merged.
pub fn verbalize(chart: &ChartFacts) -> String {
    let parts: Vec<String> = Stage::ALL.iter().map(|&s| stage_sentence(s, chart)).collect();
    merge_sentences(&parts)
}
