//! Corpus tooling: manifests, validation, splitting, QA pairs, and a
//! seeded synthetic corpus.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::{parse_chart_spec, ChartError, ChartSpec, ChartType, Series, XValue};
use crate::generation::{
    stage_sentence, verbalize, ChartFacts, GenerationError, GenerationParams, Generator, GeneratorKind,
};
use crate::parsing::ParsedChart;
use crate::retrieval::{LibraryEntry, Stage};
use crate::rng::SplitMix64;
use crate::text::split_sentences;

pub const DEFAULT_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("summary contains no extractable facts")]
    NoFacts,
    #[error("summary is empty")]
    EmptySummary,
    #[error("{0} must be at least 1")]
    InvalidCount(&'static str),
    #[error(transparent)]
    GenerationFailed(#[from] GenerationError),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub chart_path: String,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa: Option<Vec<QaPair>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, DatasetError> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| DatasetError::Format {
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(Self { entries })
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), DatasetError> {
        for e in &self.entries {
            let line = serde_json::to_string(e).expect("manifest entry serializes");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn split_sizes(&self) -> [usize; 3] {
        let mut sizes = [0; 3];
        for e in &self.entries {
            if let Some(s) = e.split {
                sizes[s as usize] += 1;
            }
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub index: usize,
    pub chart_path: String,
    pub reasons: Vec<String>,
}

impl EntryReport {
    pub fn passed(&self) -> bool {
        self.reasons.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub entries: Vec<EntryReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(EntryReport::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &EntryReport> {
        self.entries.iter().filter(|e| !e.passed())
    }
}

/// Validate entries, resolving each `chart_path` with `resolve`, which
/// returns a failure reason when the chart is unusable.
pub fn validate_with(manifest: &CorpusManifest, resolve: impl Fn(&str) -> Result<(), String>) -> ValidationReport {
    let entries = manifest
        .entries
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let mut reasons = Vec::new();
            if e.summary.trim().is_empty() {
                reasons.push("empty summary".to_string());
            }
            if let Err(r) = resolve(&e.chart_path) {
                reasons.push(r);
            }
            if let Some(qa) = &e.qa {
                if qa
                    .iter()
                    .any(|p| p.question.trim().is_empty() || p.answer.trim().is_empty())
                {
                    reasons.push("empty question or answer".to_string());
                }
            }
            EntryReport {
                index,
                chart_path: e.chart_path.clone(),
                reasons,
            }
        })
        .collect();
    ValidationReport { entries }
}

/// Validate against chart files; relative paths resolve under `base_dir`.
pub fn validate_manifest(manifest: &CorpusManifest, base_dir: &Path) -> ValidationReport {
    validate_with(manifest, |p| {
        let path = resolve_path(base_dir, p);
        let bytes = std::fs::read(&path).map_err(|_| "missing chart".to_string())?;
        parse_chart_spec(&bytes)
            .map(|_| ())
            .map_err(|e| format!("invalid chart: {e}"))
    })
}

/// Validate against in-memory specs, matched by [`chart_path_for`].
pub fn validate_against_specs(manifest: &CorpusManifest, specs: &[ChartSpec]) -> ValidationReport {
    validate_with(manifest, |p| {
        let spec = specs.iter().find(|s| chart_path_for(s) == p).ok_or("missing chart")?;
        spec.validate().map_err(|e| format!("invalid chart: {e}"))
    })
}

pub fn resolve_path(base_dir: &Path, chart_path: &str) -> PathBuf {
    let p = Path::new(chart_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

/// Largest-remainder allocation of `n` items over `ratios`. Leftover items
/// go to the largest fractional parts; ties go to the earlier split.
pub fn allocate(n: usize, ratios: &[f64; 3]) -> Result<[usize; 3], DatasetError> {
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(DatasetError::InvalidRatios(format!(
            "ratios must be positive, got {ratios:?}"
        )));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DatasetError::InvalidRatios(format!("ratios must sum to 1, got {sum}")));
    }
    let quotas: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    // absorb rounding so 0.7 * 10 floors to 7, not 6
    let floor = |q: f64| (q + 1e-9).floor();
    let mut sizes = [0usize; 3];
    for (s, q) in sizes.iter_mut().zip(&quotas) {
        *s = floor(*q) as usize;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let (fa, fb) = (quotas[a] - floor(quotas[a]), quotas[b] - floor(quotas[b]));
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let assigned: usize = sizes.iter().sum();
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    Ok(sizes)
}

/// Assign every entry to train/val/test: shuffle indices with `seed`, then
/// cut at the [`allocate`] sizes. Entry order is kept.
pub fn split_dataset(manifest: &CorpusManifest, ratios: &[f64; 3], seed: u64) -> Result<CorpusManifest, DatasetError> {
    let n = manifest.entries.len();
    let sizes = allocate(n, ratios)?;
    let mut idx: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut idx);
    let mut out = manifest.clone();
    let mut pos = 0;
    for (split, size) in Split::ALL.iter().zip(sizes) {
        for &i in &idx[pos..pos + size] {
            out.entries[i].split = Some(*split);
        }
        pos += size;
    }
    Ok(out)
}

fn fact_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(-?\d+(?:\.\d+)?) (?:in|for) ([^,.]+?)(?:,|\.\s|\.$| and | to |$)").expect("fact pattern")
    })
}

fn subject_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:The values of (.+?) are |(.+?) (?:shows an overall|has a value of) )")
            .expect("subject pattern")
    })
}

/// A value stated in a summary together with its position and, when the
/// sentence names one, its series.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryFact {
    pub label: Option<String>,
    pub x: String,
    pub value: String,
}

/// Facts phrased as "`value` in `x`" or "`value` for `x`", de-duplicated.
pub fn extract_facts(summary: &str) -> Vec<SummaryFact> {
    let mut out: Vec<SummaryFact> = Vec::new();
    for sentence in split_sentences(summary) {
        let label = subject_regex()
            .captures(&sentence)
            .and_then(|c| c.get(1).or(c.get(2)))
            .map(|m| m.as_str().to_string());
        // matches can share a delimiter (" and "), so rescan from each x
        let mut start = 0;
        while let Some(c) = fact_regex().captures_at(&sentence, start) {
            let x = c.get(2).expect("group");
            let fact = SummaryFact {
                label: label.clone(),
                x: x.as_str().trim().to_string(),
                value: c[1].to_string(),
            };
            if !out.contains(&fact) {
                out.push(fact);
            }
            start = x.end();
        }
    }
    out
}

pub fn question_for(fact: &SummaryFact) -> String {
    match &fact.label {
        Some(l) => format!("What is the value of {l} at {}?", fact.x),
        None => format!("What is the value for {}?", fact.x),
    }
}

pub const QA_INSTRUCTION: &str =
    "Write question-answer pairs that the summary below answers. Put each question on a line starting with 'Q:' and its answer on the next line starting with 'A:'.";

fn parse_qa_lines(text: &str) -> Vec<QaPair> {
    let mut out = Vec::new();
    let mut question: Option<String> = None;
    for line in text.lines().map(str::trim) {
        if let Some(q) = line.strip_prefix("Q:") {
            question = Some(q.trim().to_string());
        } else if let Some(a) = line.strip_prefix("A:") {
            if let Some(q) = question.take() {
                out.push(QaPair {
                    question: q,
                    answer: a.trim().to_string(),
                });
            }
        }
    }
    out
}

/// Drop pairs with an empty side and repeated questions.
pub fn default_qa_filter(pairs: Vec<QaPair>) -> Vec<QaPair> {
    filter_qa(pairs, |_| true)
}

/// [`default_qa_filter`] plus a caller predicate.
pub fn filter_qa(pairs: Vec<QaPair>, keep: impl Fn(&QaPair) -> bool) -> Vec<QaPair> {
    let mut seen = HashSet::new();
    pairs
        .into_iter()
        .filter(|p| !p.question.is_empty() && !p.answer.is_empty())
        .filter(|p| seen.insert(p.question.clone()))
        .filter(|p| keep(p))
        .collect()
}

/// Up to `n` question-answer pairs about `summary`.
///
/// Template generators get one question per extracted fact. External
/// generators get one call with [`QA_INSTRUCTION`] and their `Q:`/`A:` lines
/// are parsed.
pub fn generate_qa_pairs(
    summary: &str,
    gen: &dyn Generator,
    n: usize,
    params: &GenerationParams,
) -> Result<Vec<QaPair>, DatasetError> {
    if summary.trim().is_empty() {
        return Err(DatasetError::EmptySummary);
    }
    if n == 0 {
        return Err(DatasetError::InvalidCount("n"));
    }
    let pairs = match gen.kind() {
        GeneratorKind::Template => {
            let facts = extract_facts(summary);
            if facts.is_empty() {
                return Err(DatasetError::NoFacts);
            }
            facts
                .iter()
                .map(|f| QaPair {
                    question: question_for(f),
                    answer: f.value.clone(),
                })
                .collect()
        }
        GeneratorKind::External => {
            let prompt = format!(
                "TASK: qa\nINSTRUCTION: {QA_INSTRUCTION} Write at most {n} pairs.\nSUMMARY: {}",
                crate::prompt::single_line(summary)
            );
            parse_qa_lines(&gen.generate(&prompt, params)?.text)
        }
    };
    let mut pairs = default_qa_filter(pairs);
    pairs.truncate(n);
    Ok(pairs)
}

pub fn chart_path_for(spec: &ChartSpec) -> String {
    format!("charts/{}.json", spec.id)
}

/// The reference summary for a spec: the full template verbalization of
/// its zero-noise parse.
pub fn gold_summary(spec: &ChartSpec) -> String {
    verbalize(&ChartFacts::from_parsed(
        &ParsedChart::from_spec(spec).with_chart_type(spec.chart_type),
    ))
}

struct Topic {
    x_label: &'static str,
    categories: &'static [&'static str],
}

const BAR_TOPICS: &[Topic] = &[
    Topic {
        x_label: "Region",
        categories: &["North America", "Europe", "Asia", "Africa", "Oceania", "Latin America"],
    },
    Topic {
        x_label: "Department",
        categories: &["Sales", "Finance", "Engineering", "Support", "Legal", "Marketing"],
    },
    Topic {
        x_label: "Product",
        categories: &["Laptops", "Phones", "Tablets", "Monitors", "Printers", "Cameras"],
    },
    Topic {
        x_label: "Age group",
        categories: &["18-29", "30-49", "50-64", "65+", "Under 18", "All adults"],
    },
];

const PIE_TOPICS: &[Topic] = &[
    Topic {
        x_label: "Response",
        categories: &["Yes", "No", "Not sure", "Refused", "Depends"],
    },
    Topic {
        x_label: "Energy source",
        categories: &["Coal", "Gas", "Nuclear", "Wind", "Solar"],
    },
    Topic {
        x_label: "Browser",
        categories: &["Chrome", "Safari", "Edge", "Firefox", "Opera"],
    },
];

const SCATTER_X: &[&str] = &["Hours studied", "Temperature", "Price", "Distance"];
const Y_LABELS: &[&str] = &["Revenue", "Units sold", "Visitors", "Score", "Population", "Spending"];
const SERIES_NAMES: &[&str] = &["Alpha", "Beta", "Gamma", "Delta", "Omega"];
const SUBJECTS: &[&str] = &["Annual", "Quarterly", "Regional", "Average", "Total", "Estimated"];
const SCOPES: &[&str] = &["across markets", "by segment", "over time", "in the survey", "per site"];

/// `count` distinct values, pairwise at least 25% apart, rounded to one
/// decimal.
fn spaced_levels(rng: &mut SplitMix64, count: usize) -> Vec<f64> {
    let mut level = rng.uniform(5.0, 50.0);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push((level * 10.0).round() / 10.0);
        level *= rng.uniform(1.3, 1.5);
    }
    rng.shuffle(&mut out);
    out
}

fn pick<'a>(rng: &mut SplitMix64, items: &[&'a str]) -> &'a str {
    rng.choose(items)
}

fn pick_distinct<'a>(rng: &mut SplitMix64, items: &[&'a str], n: usize) -> Vec<&'a str> {
    let mut v = items.to_vec();
    rng.shuffle(&mut v);
    v.truncate(n);
    v
}

/// Arrange a series' values: sorted up, sorted down, or left shuffled.
fn shape(rng: &mut SplitMix64, values: &mut [f64]) {
    match rng.below(3) {
        0 => values.sort_by(f64::total_cmp),
        1 => values.sort_by(|a, b| b.total_cmp(a)),
        _ => {}
    }
}

/// One random valid chart of type `chart_type`.
pub fn synthetic_spec(id: String, chart_type: ChartType, rng: &mut SplitMix64) -> ChartSpec {
    let y_label = pick(rng, Y_LABELS).to_string();
    let title = format!(
        "{} {} {}",
        pick(rng, SUBJECTS),
        y_label.to_lowercase(),
        pick(rng, SCOPES)
    );
    let (x_label, xs, n_series): (String, Vec<XValue>, usize) = match chart_type {
        ChartType::Bar => {
            let topic = &BAR_TOPICS[rng.below(BAR_TOPICS.len())];
            let n = rng.range_inclusive(3, 6);
            let cats = pick_distinct(rng, topic.categories, n);
            (
                topic.x_label.into(),
                cats.into_iter().map(XValue::from).collect(),
                rng.range_inclusive(1, 3),
            )
        }
        ChartType::Line => {
            let start = rng.range_inclusive(1995, 2015) as f64;
            let n = rng.range_inclusive(4, 7);
            (
                "Year".into(),
                (0..n).map(|i| XValue::Number(start + i as f64)).collect(),
                rng.range_inclusive(1, 3),
            )
        }
        ChartType::Scatter => {
            let n = rng.range_inclusive(4, 7);
            let mut x = rng.range_inclusive(1, 10);
            let mut xs = Vec::with_capacity(n);
            for _ in 0..n {
                xs.push(XValue::Number(x as f64));
                x += rng.range_inclusive(1, 5);
            }
            (pick(rng, SCATTER_X).into(), xs, rng.range_inclusive(1, 2))
        }
        ChartType::Pie => {
            let topic = &PIE_TOPICS[rng.below(PIE_TOPICS.len())];
            let n = rng.range_inclusive(2, 5);
            let cats = pick_distinct(rng, topic.categories, n);
            (topic.x_label.into(), cats.into_iter().map(XValue::from).collect(), 1)
        }
    };
    let names: Vec<String> = if chart_type == ChartType::Pie {
        vec!["Share".to_string()]
    } else {
        pick_distinct(rng, SERIES_NAMES, n_series)
            .into_iter()
            .map(str::to_string)
            .collect()
    };
    let mut levels = spaced_levels(rng, xs.len() * names.len());
    let series: Vec<Series> = names
        .iter()
        .zip(levels.chunks_mut(xs.len()))
        .map(|(name, values)| {
            if chart_type != ChartType::Pie {
                shape(rng, values);
            }
            Series::new(name.clone(), xs.iter().cloned().zip(values.iter().copied()))
        })
        .collect();
    let legends = if chart_type == ChartType::Pie {
        xs.iter().map(XValue::label).collect()
    } else {
        names.clone()
    };
    ChartSpec {
        id,
        chart_type,
        title,
        x_label,
        y_label,
        series,
        legends,
    }
}

/// `count` charts cycling through bar, line, pie and scatter, each with its
/// gold summary. Chart `i` draws from its own stream of `seed`.
pub fn generate_synthetic_corpus(count: usize, seed: u64) -> (Vec<ChartSpec>, CorpusManifest) {
    let specs: Vec<ChartSpec> = (0..count)
        .map(|i| {
            let mut rng = SplitMix64::split(seed, i as u64);
            synthetic_spec(format!("chart-{i:04}"), ChartType::ALL[i % 4], &mut rng)
        })
        .collect();
    let entries = specs
        .iter()
        .map(|s| ManifestEntry {
            chart_path: chart_path_for(s),
            summary: gold_summary(s),
            split: None,
            qa: None,
        })
        .collect();
    (specs, CorpusManifest { entries })
}

/// Write `charts/<id>.json` for every spec and `manifest.jsonl` under `dir`.
pub fn write_corpus(dir: &Path, specs: &[ChartSpec], manifest: &CorpusManifest) -> Result<(), DatasetError> {
    std::fs::create_dir_all(dir.join("charts"))?;
    for s in specs {
        std::fs::write(dir.join(chart_path_for(s)), s.to_json())?;
    }
    let f = std::fs::File::create(dir.join("manifest.jsonl"))?;
    manifest.write_jsonl(std::io::BufWriter::new(f))
}

/// One library entry per (spec, stage) whose text is that stage's template
/// sentence for the spec.
pub fn library_entries(specs: &[ChartSpec]) -> Vec<LibraryEntry> {
    let mut out = Vec::with_capacity(specs.len() * Stage::ALL.len());
    for s in specs {
        let parsed = ParsedChart::from_spec(s).with_chart_type(s.chart_type);
        let facts = ChartFacts::from_parsed(&parsed);
        for stage in Stage::ALL {
            out.push(LibraryEntry {
                id: format!("{}-{}", s.id, stage),
                stage,
                text: stage_sentence(stage, &facts),
                chart: parsed.clone(),
                chart_ref: Some(chart_path_for(s)),
            });
        }
    }
    out
}

pub fn write_library_entries<W: Write>(entries: &[LibraryEntry], mut out: W) -> Result<(), DatasetError> {
    for e in entries {
        writeln!(out, "{}", serde_json::to_string(e).expect("library entry serializes"))?;
    }
    Ok(())
}

pub fn read_library_entries<R: BufRead>(input: R) -> Result<Vec<LibraryEntry>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DatasetError::Format {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
