//! Staged context-example library with exact cosine top-k retrieval and
//! rank-harmonic weighting.
//!
//! Examples are grouped by [`Stage`]. A query retrieves from one stage only,
//! by full scan, ordered by similarity descending with ties broken by
//! ascending id. The example at rank `i` (from 1) carries weight `1/i`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{normalize, ChartEmbedder, EmbeddingError, FeatureVector};
use crate::parsing::ParsedChart;

/// Loaded feature vectors must have a norm within this distance of 1.
pub const LOAD_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("duplicate example id '{0}'")]
    DuplicateId(String),
    #[error("entry '{0}' embeds to a zero vector")]
    Unembeddable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("example '{0}' has empty text")]
    EmptyText(String),
    #[error("example '{id}' is not unit-normalized (norm {norm})")]
    NotNormalized { id: String, norm: f64 },
    #[error("library line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    ChartType,
    Caption,
    Axes,
    Trend,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::ChartType, Stage::Caption, Stage::Axes, Stage::Trend];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::ChartType => "chart_type",
            Stage::Caption => "caption",
            Stage::Axes => "axes",
            Stage::Trend => "trend",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown stage '{s}' (expected chart_type, caption, axes or trend)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextExample {
    pub id: String,
    pub stage: Stage,
    pub feature: FeatureVector,
    pub example_text: String,
    #[serde(default)]
    pub chart_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedExample {
    pub example: ContextExample,
    pub similarity: f64,
    pub rank: usize,
    pub weight: f64,
}

pub fn cosine_similarity(a: &FeatureVector, b: &FeatureVector) -> Result<f64, RetrievalError> {
    if a.dim() != b.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}

/// `[1, 1/2, ..., 1/n]`.
pub fn rank_weights(n: usize) -> Vec<f64> {
    (1..=n).map(|i| 1.0 / i as f64).collect()
}

/// One input to [`build_library`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub id: String,
    pub stage: Stage,
    pub text: String,
    pub chart: ParsedChart,
    #[serde(default)]
    pub chart_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextLibrary {
    dim: usize,
    examples: Vec<ContextExample>,
    index: BTreeMap<Stage, Vec<usize>>,
}

impl ContextLibrary {
    pub fn new(dim: usize, examples: Vec<ContextExample>) -> Result<Self, RetrievalError> {
        let mut ids = HashSet::new();
        let mut index: BTreeMap<Stage, Vec<usize>> = Stage::ALL.iter().map(|&s| (s, Vec::new())).collect();
        for (i, ex) in examples.iter().enumerate() {
            if !ids.insert(ex.id.as_str()) {
                return Err(RetrievalError::DuplicateId(ex.id.clone()));
            }
            if ex.example_text.trim().is_empty() {
                return Err(RetrievalError::EmptyText(ex.id.clone()));
            }
            if ex.feature.dim() != dim {
                return Err(RetrievalError::DimensionMismatch {
                    expected: dim,
                    got: ex.feature.dim(),
                });
            }
            let norm = ex.feature.norm();
            if (norm - 1.0).abs() > LOAD_NORM_TOLERANCE {
                return Err(RetrievalError::NotNormalized {
                    id: ex.id.clone(),
                    norm,
                });
            }
            index.entry(ex.stage).or_default().push(i);
        }
        Ok(Self { dim, examples, index })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[ContextExample] {
        &self.examples
    }

    pub fn stage_examples(&self, stage: Stage) -> impl Iterator<Item = &ContextExample> {
        self.index.get(&stage).into_iter().flatten().map(|&i| &self.examples[i])
    }

    pub fn stage_len(&self, stage: Stage) -> usize {
        self.index.get(&stage).map_or(0, Vec::len)
    }

    /// The `k` most similar examples of `stage`, ranked from 1.
    pub fn retrieve_top_k(
        &self,
        stage: Stage,
        query: &FeatureVector,
        k: usize,
    ) -> Result<Vec<RankedExample>, RetrievalError> {
        if query.dim() != self.dim {
            return Err(RetrievalError::DimensionMismatch {
                expected: self.dim,
                got: query.dim(),
            });
        }
        if query.is_zero() {
            return Err(RetrievalError::ZeroVector);
        }
        let mut scored = self
            .stage_examples(stage)
            .map(|ex| cosine_similarity(query, &ex.feature).map(|s| (s, ex)))
            .collect::<Result<Vec<_>, _>>()?;
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
        Ok(scored
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (similarity, ex))| RankedExample {
                example: ex.clone(),
                similarity,
                rank: i + 1,
                weight: 1.0 / (i + 1) as f64,
            })
            .collect())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), RetrievalError> {
        for ex in &self.examples {
            serde_json::to_writer(&mut out, ex).map_err(|e| RetrievalError::Format {
                line: 0,
                message: e.to_string(),
            })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Load a JSON-lines library. Every feature must be within
    /// [`LOAD_NORM_TOLERANCE`] of unit norm; it is then renormalized exactly.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, RetrievalError> {
        let mut examples = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut ex: ContextExample = serde_json::from_str(&line).map_err(|e| RetrievalError::Format {
                line: i + 1,
                message: e.to_string(),
            })?;
            let norm = ex.feature.norm();
            if (norm - 1.0).abs() > LOAD_NORM_TOLERANCE {
                return Err(RetrievalError::NotNormalized { id: ex.id, norm });
            }
            ex.feature = normalize(&ex.feature).map_err(|_| RetrievalError::ZeroVector)?;
            examples.push(ex);
        }
        let dim = examples.first().map_or(0, |e| e.feature.dim());
        Self::new(dim, examples)
    }
}

/// Embed, normalize and index library entries.
pub fn build_library(entries: &[LibraryEntry], embedder: &dyn ChartEmbedder) -> Result<ContextLibrary, RetrievalError> {
    let mut examples = Vec::with_capacity(entries.len());
    for e in entries {
        let raw = embedder.embed_chart(&e.chart, None);
        let feature = match normalize(&raw) {
            Ok(f) => f,
            Err(EmbeddingError::ZeroVector) => return Err(RetrievalError::Unembeddable(e.id.clone())),
            Err(_) => return Err(RetrievalError::Unembeddable(e.id.clone())),
        };
        examples.push(ContextExample {
            id: e.id.clone(),
            stage: e.stage,
            feature,
            example_text: e.text.clone(),
            chart_ref: e.chart_ref.clone(),
        });
    }
    ContextLibrary::new(embedder.dim(), examples)
}

/// Retrieved examples in rank order with their weights, plus the
/// rank-weighted sum of their features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedContext {
    pub examples: Vec<WeightedExample>,
    pub aggregate: FeatureVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedExample {
    pub id: String,
    pub text: String,
    pub rank: usize,
    pub weight: f64,
}

impl WeightedContext {
    pub fn empty() -> Self {
        Self {
            examples: Vec::new(),
            aggregate: FeatureVector::zeros(0),
        }
    }
}

pub fn weighted_context(ranked: &[RankedExample]) -> WeightedContext {
    let dim = ranked.first().map_or(0, |r| r.example.feature.dim());
    let mut aggregate = FeatureVector::zeros(dim);
    let mut examples = Vec::with_capacity(ranked.len());
    for (i, r) in ranked.iter().enumerate() {
        let weight = 1.0 / (i + 1) as f64;
        aggregate.add_scaled(&r.example.feature, weight);
        examples.push(WeightedExample {
            id: r.example.id.clone(),
            text: r.example.example_text.clone(),
            rank: i + 1,
            weight,
        });
    }
    WeightedContext { examples, aggregate }
}
