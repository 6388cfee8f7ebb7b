//! Chart and prompt encoders.
//!
//! [`ChartEmbedder`] maps a parsed chart to a fixed-length [`FeatureVector`];
//! [`TextEncoder`] maps a prompt to a [`TokenSeq`]. [`HashingEmbedder`] is the
//! deterministic reference implementation of both. Any learned encoder can
//! stand in for it as long as it returns finite vectors of a fixed dimension.
//!
//! Reference chart layout (dimension `D`, default 256):
//!
//! | dims      | content                                                       |
//! |-----------|---------------------------------------------------------------|
//! | 0..4      | one-hot chart type (bar, line, pie, scatter), zeros if unknown |
//! | 4..20     | 4 stats for each of the first 4 series                        |
//! | 20..D     | FNV-1a hashed character 3-gram counts of text and legends     |
//!
//! The per-series stats are slope sign, normalized range, monotonicity
//! fraction, and relative position of the maximum. The hashed block is
//! scaled to unit length before the whole vector is normalized, so the
//! overall norm does not depend on how much text a chart carries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::ChartType;
use crate::parsing::ParsedChart;
use crate::stats;
use crate::text::tokenize;

pub const DEFAULT_DIM: usize = 256;
pub const TYPE_DIMS: usize = 4;
pub const SERIES_SLOTS: usize = 4;
pub const STATS_PER_SERIES: usize = 4;
pub const HASH_OFFSET: usize = TYPE_DIMS + SERIES_SLOTS * STATS_PER_SERIES;

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("vector has non-finite entries")]
    NonFinite,
    #[error("dimension {0} is too small; need more than {HASH_OFFSET}")]
    DimensionTooSmall(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { values: vec![0.0; dim] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Dot product over the shared prefix.
    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, factor: f64) -> FeatureVector {
        FeatureVector {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &FeatureVector, factor: f64) {
        if self.values.len() < other.values.len() {
            self.values.resize(other.values.len(), 0.0);
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
    }
}

/// Scale to unit L2 norm.
pub fn normalize(v: &FeatureVector) -> Result<FeatureVector, EmbeddingError> {
    if v.values.iter().any(|x| !x.is_finite()) {
        return Err(EmbeddingError::NonFinite);
    }
    let norm = v.norm();
    if norm == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok(v.scaled(1.0 / norm))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
}

pub trait ChartEmbedder: Send + Sync {
    fn dim(&self) -> usize;
    /// `chart_type` is the visual channel; `None` falls back to the parse's hint.
    fn embed_chart(&self, parsed: &ParsedChart, chart_type: Option<ChartType>) -> FeatureVector;
}

pub trait TextEncoder: Send + Sync {
    fn embed_text(&self, prompt: &str) -> Result<TokenSeq, EmbeddingError>;
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET_BASIS, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM }
    }
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Result<Self, EmbeddingError> {
        if dim <= HASH_OFFSET {
            return Err(EmbeddingError::DimensionTooSmall(dim));
        }
        Ok(Self { dim })
    }

    fn series_stats(values: &[f64]) -> [f64; STATS_PER_SERIES] {
        [
            stats::slope_sign(values) as f64,
            stats::normalized_range(values),
            stats::monotonicity(values),
            stats::argmax_position(values),
        ]
    }

    fn trigram_bucket(&self, gram: &str) -> usize {
        let buckets = (self.dim - HASH_OFFSET) as u64;
        HASH_OFFSET + (fnv1a64(gram.as_bytes()) % buckets) as usize
    }
}

impl ChartEmbedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_chart(&self, parsed: &ParsedChart, chart_type: Option<ChartType>) -> FeatureVector {
        let mut v = vec![0.0; self.dim];
        if let Some(t) = chart_type.or(parsed.chart_type_hint) {
            v[t.index()] = 1.0;
        }
        for (slot, (_, points)) in parsed.series().iter().take(SERIES_SLOTS).enumerate() {
            let ys: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
            let base = TYPE_DIMS + slot * STATS_PER_SERIES;
            v[base..base + STATS_PER_SERIES].copy_from_slice(&Self::series_stats(&ys));
        }
        for text in parsed.other_text.iter().chain(&parsed.legends) {
            let chars: Vec<char> = text.to_lowercase().chars().collect();
            if chars.is_empty() {
                continue;
            }
            if chars.len() < 3 {
                v[self.trigram_bucket(&chars.iter().collect::<String>())] += 1.0;
                continue;
            }
            for w in chars.windows(3) {
                v[self.trigram_bucket(&w.iter().collect::<String>())] += 1.0;
            }
        }
        let hashed_norm = v[HASH_OFFSET..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if hashed_norm > 0.0 {
            v[HASH_OFFSET..].iter_mut().for_each(|x| *x /= hashed_norm);
        }
        // the hashed block counts as exactly unit length, so the scale
        // depends only on the fixed dims
        let head_sq: f64 = v[..HASH_OFFSET].iter().map(|x| x * x).sum();
        let total_sq = head_sq + if hashed_norm > 0.0 { 1.0 } else { 0.0 };
        if total_sq > 0.0 {
            let scale = total_sq.sqrt().recip();
            v.iter_mut().for_each(|x| *x *= scale);
        }
        FeatureVector { values: v }
    }
}

impl TextEncoder for HashingEmbedder {
    fn embed_text(&self, prompt: &str) -> Result<TokenSeq, EmbeddingError> {
        embed_text(prompt)
    }
}

pub fn embed_text(prompt: &str) -> Result<TokenSeq, EmbeddingError> {
    let tokens = tokenize(prompt);
    if tokens.is_empty() {
        return Err(EmbeddingError::EmptyPrompt);
    }
    Ok(TokenSeq { tokens })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parsing::TextNumberPair;
    use proptest::prelude::*;

    fn chart(title: &str, ys: &[f64]) -> ParsedChart {
        ParsedChart {
            chart_type_hint: Some(ChartType::Line),
            legends: vec!["Sales".into()],
            pairs: ys
                .iter()
                .enumerate()
                .map(|(i, &y)| TextNumberPair {
                    label: "Sales".into(),
                    x: format!("{}", 2000 + i),
                    value: y,
                })
                .collect(),
            other_text: vec![title.into(), "Year".into(), "Revenue".into()],
        }
    }

    #[test]
    fn empty_chart_gives_zero_vector() {
        let v = HashingEmbedder::default().embed_chart(&ParsedChart::default(), None);
        assert_eq!(v.dim(), DEFAULT_DIM);
        assert!(v.is_zero());
        assert_eq!(normalize(&v), Err(EmbeddingError::ZeroVector));
    }

    #[test]
    fn title_change_touches_only_hashed_dims() {
        let e = HashingEmbedder::default();
        let a = e.embed_chart(&chart("Annual revenue of Acme", &[1.0, 3.0, 2.0, 5.0]), None);
        let b = e.embed_chart(&chart("Quarterly revenue of Zenith", &[1.0, 3.0, 2.0, 5.0]), None);
        assert_eq!(a.values()[..HASH_OFFSET], b.values()[..HASH_OFFSET]);
        assert_ne!(a.values()[HASH_OFFSET..], b.values()[HASH_OFFSET..]);
    }

    #[test]
    fn embedding_is_deterministic_and_unit() {
        let e = HashingEmbedder::default();
        let c = chart("Internet usage", &[14.0, 46.0, 66.0, 79.0, 87.0]);
        let a = e.embed_chart(&c, None);
        assert_eq!(a, e.embed_chart(&c, None));
        assert!((a.norm() - 1.0).abs() < 1e-9);
        assert!(a.values()[ChartType::Line.index()] > 0.0);
    }

    #[test]
    fn explicit_type_overrides_hint() {
        let e = HashingEmbedder::default();
        let v = e.embed_chart(&chart("t", &[1.0]), Some(ChartType::Pie));
        assert!(v.values()[ChartType::Pie.index()] > 0.0);
        assert_eq!(v.values()[ChartType::Line.index()], 0.0);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn embed_text_examples() {
        assert_eq!(
            embed_text("Summarize the chart.").unwrap().tokens,
            ["summarize", "the", "chart", "."]
        );
        assert_eq!(embed_text("A  B").unwrap().tokens, ["a", "b"]);
        assert_eq!(embed_text(""), Err(EmbeddingError::EmptyPrompt));
        assert_eq!(embed_text(" \n "), Err(EmbeddingError::EmptyPrompt));
    }

    #[test]
    fn normalize_examples() {
        let mut raw = vec![0.0; 8];
        raw[0] = 3.0;
        raw[1] = 4.0;
        let n = normalize(&FeatureVector::new(raw).unwrap()).unwrap();
        assert!((n.values()[0] - 0.6).abs() < 1e-15);
        assert!((n.values()[1] - 0.8).abs() < 1e-15);
        let again = normalize(&n).unwrap();
        for (a, b) in n.values().iter().zip(again.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(normalize(&FeatureVector::zeros(3)), Err(EmbeddingError::ZeroVector));
        assert_eq!(FeatureVector::new(vec![f64::NAN]), Err(EmbeddingError::NonFinite));
    }

    #[test]
    fn small_dimension_rejected() {
        assert_eq!(HashingEmbedder::new(20), Err(EmbeddingError::DimensionTooSmall(20)));
        assert!(HashingEmbedder::new(21).is_ok());
    }

    proptest! {
        #[test]
        fn positive_scaling_keeps_trend_dims(
            ys in proptest::collection::vec(-1e3f64..1e3, 1..12),
            k in 0.01f64..100.0,
        ) {
            let e = HashingEmbedder::default();
            let scaled: Vec<f64> = ys.iter().map(|y| y * k).collect();
            let a = e.embed_chart(&chart("t", &ys), None);
            let b = e.embed_chart(&chart("t", &scaled), None);
            // slope sign and monotonicity of the first series
            for d in [TYPE_DIMS, TYPE_DIMS + 2] {
                prop_assert!((a.values()[d] - b.values()[d]).abs() < 1e-9, "dim {}: {} vs {}", d, a.values()[d], b.values()[d]);
            }
        }

        #[test]
        fn normalize_is_idempotent(raw in proptest::collection::vec(-1e6f64..1e6, 1..64)) {
            let v = FeatureVector::new(raw).unwrap();
            prop_assume!(!v.is_zero());
            let once = normalize(&v).unwrap();
            let twice = normalize(&once).unwrap();
            prop_assert!((once.norm() - 1.0).abs() < 1e-9);
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
