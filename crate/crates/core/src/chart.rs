//! Chart data model, chart-spec documents, and simulated extractor outputs.
//!
//! A [`ChartSpec`] is the ground truth for one chart. The two renderers play
//! the role of the extractors a real system would run on the chart image: an
//! OCR pass that sees every printed string ([`render_token_stream`]) and a
//! chart-to-table model that recovers structure ([`render_linearized_table`]).
//! Both accept a [`NoiseConfig`] so fusion can be exercised against the kinds
//! of mistakes those extractors make.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::text::{format_number, is_decimal};

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("malformed chart spec: {0}")]
    MalformedSpec(String),
    #[error("invalid chart spec: {0}")]
    InvalidSpec(String),
    #[error("invalid noise config: {0}")]
    InvalidNoise(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartType {
    Bar,
    Line,
    Pie,
    Scatter,
}

impl ChartType {
    pub const ALL: [ChartType; 4] = [ChartType::Bar, ChartType::Line, ChartType::Pie, ChartType::Scatter];

    pub fn keyword(self) -> &'static str {
        match self {
            ChartType::Bar => "bar",
            ChartType::Line => "line",
            ChartType::Pie => "pie",
            ChartType::Scatter => "scatter",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.keyword().eq_ignore_ascii_case(word))
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ChartType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// An x position: a category name or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XValue {
    Number(f64),
    Text(String),
}

impl XValue {
    /// The printed form of the value, as it appears on an axis.
    pub fn label(&self) -> String {
        match self {
            XValue::Number(v) => format_number(*v),
            XValue::Text(s) => s.clone(),
        }
    }
}

impl From<&str> for XValue {
    fn from(s: &str) -> Self {
        XValue::Text(s.to_string())
    }
}

impl From<f64> for XValue {
    fn from(v: f64) -> Self {
        XValue::Number(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: XValue,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: impl IntoIterator<Item = (XValue, f64)>) -> Self {
        Self {
            name: name.into(),
            points: points.into_iter().map(|(x, y)| Point { x, y }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub id: String,
    pub chart_type: ChartType,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub legends: Vec<String>,
}

impl ChartSpec {
    pub fn validate(&self) -> Result<(), ChartError> {
        let invalid = |m: String| Err(ChartError::InvalidSpec(m));
        if self.id.trim().is_empty() {
            return invalid("id must be nonempty".into());
        }
        if self.series.is_empty() {
            return invalid("chart must have at least one series".into());
        }
        if self.chart_type == ChartType::Pie {
            if self.series.len() != 1 {
                return invalid(format!(
                    "pie chart must have exactly one series, found {}",
                    self.series.len()
                ));
            }
            if let Some(p) = self.series[0].points.iter().find(|p| p.y < 0.0) {
                return invalid(format!(
                    "pie chart values must be nonnegative, found {} at {}",
                    format_number(p.y),
                    p.x.label()
                ));
            }
        }
        for s in &self.series {
            if s.points.is_empty() {
                return invalid(format!("series '{}' must have at least one point", s.name));
            }
            let mut seen = HashSet::new();
            for p in &s.points {
                if !p.y.is_finite() {
                    return invalid(format!("series '{}' has a non-finite value", s.name));
                }
                if let XValue::Number(x) = p.x {
                    if !x.is_finite() {
                        return invalid(format!("series '{}' has a non-finite x value", s.name));
                    }
                }
                if !seen.insert(p.x.label()) {
                    return invalid(format!(
                        "x values within series '{}' must be distinct, '{}' repeats",
                        s.name,
                        p.x.label()
                    ));
                }
            }
        }
        Ok(())
    }

    /// Distinct x labels in first-appearance order across all series.
    pub fn x_labels(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for s in &self.series {
            for p in &s.points {
                let l = p.x.label();
                if seen.insert(l.clone()) {
                    out.push(l);
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chart spec serializes")
    }
}

/// Parse and validate a chart-spec document.
pub fn parse_chart_spec(bytes: &[u8]) -> Result<ChartSpec, ChartError> {
    let spec: ChartSpec = serde_json::from_slice(bytes).map_err(|e| ChartError::MalformedSpec(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Numeric,
    Word,
}

/// Axis-aligned box on the 1000x1000 abstract canvas; origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    fn centered(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        let w = w.max(1.0);
        let h = h.max(1.0);
        Self {
            x0: cx - w / 2.0,
            y0: cy - h / 2.0,
            x1: cx + w / 2.0,
            y1: cy + h / 2.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrToken {
    pub text: String,
    pub bbox: BBox,
    pub kind: TokenKind,
}

impl OcrToken {
    pub fn new(text: impl Into<String>, bbox: BBox) -> Self {
        let text = text.into();
        let kind = if is_decimal(&text) {
            TokenKind::Numeric
        } else {
            TokenKind::Word
        };
        Self { text, bbox, kind }
    }

    pub fn value(&self) -> Option<f64> {
        match self.kind {
            TokenKind::Numeric => self.text.parse().ok(),
            TokenKind::Word => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<OcrToken>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub cells: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTable {
    pub header: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl LinearTable {
    pub fn is_well_formed(&self) -> bool {
        !self.header.is_empty() && self.rows.iter().all(|r| r.cells.len() == self.header.len() - 1)
    }

    pub fn cell_count(&self) -> usize {
        self.rows.iter().map(|r| r.cells.iter().flatten().count()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub value_corruption_prob: f64,
    pub value_corruption_scale: f64,
    pub drop_token_prob: f64,
}

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig {
        value_corruption_prob: 0.0,
        value_corruption_scale: 0.0,
        drop_token_prob: 0.0,
    };

    pub fn new(
        value_corruption_prob: f64,
        value_corruption_scale: f64,
        drop_token_prob: f64,
    ) -> Result<Self, ChartError> {
        let cfg = Self {
            value_corruption_prob,
            value_corruption_scale,
            drop_token_prob,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ChartError> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(ChartError::InvalidNoise(format!("{name} must be in [0, 1], got {p}")))
            }
        };
        prob("value_corruption_prob", self.value_corruption_prob)?;
        prob("drop_token_prob", self.drop_token_prob)?;
        if !(self.value_corruption_scale >= 0.0 && self.value_corruption_scale.is_finite()) {
            return Err(ChartError::InvalidNoise(format!(
                "value_corruption_scale must be finite and >= 0, got {}",
                self.value_corruption_scale
            )));
        }
        Ok(())
    }

    fn corrupt(&self, value: f64, rng: &mut SplitMix64) -> f64 {
        if rng.bernoulli(self.value_corruption_prob) {
            let delta = rng.uniform(-self.value_corruption_scale, self.value_corruption_scale);
            value * (1.0 + delta)
        } else {
            value
        }
    }
}

// Stream tags keep the per-token noise draws independent between renderers.
const OCR_STREAM: u64 = 0x4f43_5200;
const TABLE_STREAM: u64 = 0x5441_4200;

const CANVAS: f64 = 1000.0;
const PLOT_LEFT: f64 = 100.0;
const PLOT_RIGHT: f64 = 950.0;
const PLOT_TOP: f64 = 100.0;
const PLOT_BOTTOM: f64 = 880.0;
const CHAR_W: f64 = 8.0;
const LINE_H: f64 = 20.0;

fn text_width(text: &str) -> f64 {
    (text.chars().count() as f64 * CHAR_W).clamp(CHAR_W, CANVAS - 20.0)
}

/// Render what an OCR pass would read off the chart.
///
/// Stream order: title, x-axis label, y-axis label, legends, x tick labels
/// (omitted for pie charts, whose categories are the legends), then one data
/// label per point, series by series.
pub fn render_token_stream(spec: &ChartSpec, noise: &NoiseConfig, seed: u64) -> TokenStream {
    struct Draft {
        text: String,
        bbox: BBox,
        droppable: bool,
        value: Option<f64>,
    }
    let mut drafts = Vec::new();
    let word = |text: &str, bbox: BBox, droppable: bool| Draft {
        text: text.to_string(),
        bbox,
        droppable,
        value: None,
    };

    drafts.push(word(
        &spec.title,
        BBox::centered(CANVAS / 2.0, 40.0, text_width(&spec.title), LINE_H),
        false,
    ));
    drafts.push(word(
        &spec.x_label,
        BBox::centered(CANVAS / 2.0, 970.0, text_width(&spec.x_label), LINE_H),
        true,
    ));
    // rotated: tall and narrow
    drafts.push(word(
        &spec.y_label,
        BBox::centered(30.0, CANVAS / 2.0, LINE_H, text_width(&spec.y_label)),
        true,
    ));
    for (i, legend) in spec.legends.iter().enumerate() {
        let w = text_width(legend).min(180.0);
        drafts.push(word(
            legend,
            BBox::centered(985.0 - w / 2.0, 80.0 + LINE_H * 1.5 * i as f64, w, LINE_H),
            true,
        ));
    }

    let xs = spec.x_labels();
    let slot = (PLOT_RIGHT - PLOT_LEFT) / xs.len().max(1) as f64;
    let x_center = |label: &str| {
        let j = xs.iter().position(|l| l == label).unwrap_or(0);
        PLOT_LEFT + slot * (j as f64 + 0.5)
    };
    if spec.chart_type != ChartType::Pie {
        for x in &xs {
            drafts.push(word(
                x,
                BBox::centered(x_center(x), 910.0, text_width(x).min(slot), LINE_H),
                true,
            ));
        }
    }

    let (lo, hi) = spec
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.y))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let n_series = spec.series.len() as f64;
    for (si, s) in spec.series.iter().enumerate() {
        for p in &s.points {
            let label = format_number(p.y);
            let cy = PLOT_BOTTOM - (PLOT_BOTTOM - PLOT_TOP) * (p.y - lo) / span;
            let dx = (si as f64 - (n_series - 1.0) / 2.0) * slot / n_series.max(1.0);
            drafts.push(Draft {
                bbox: BBox::centered(
                    x_center(&p.x.label()) + dx,
                    cy - 12.0,
                    text_width(&label).min(slot),
                    LINE_H,
                ),
                text: label,
                droppable: true,
                value: Some(p.y),
            });
        }
    }

    let tokens = drafts
        .into_iter()
        .enumerate()
        .filter_map(|(i, d)| {
            let mut rng = SplitMix64::split(seed ^ OCR_STREAM, i as u64);
            if d.droppable && rng.bernoulli(noise.drop_token_prob) {
                return None;
            }
            let text = match d.value {
                Some(v) => format_number(noise.corrupt(v, &mut rng)),
                None => d.text,
            };
            Some(OcrToken::new(text, d.bbox))
        })
        .collect();
    TokenStream { tokens }
}

/// Render what a chart-to-table model would produce: header
/// `[x_label, series names...]` and one row per distinct x value.
pub fn render_linearized_table(spec: &ChartSpec, noise: &NoiseConfig, seed: u64) -> LinearTable {
    let mut header = vec![spec.x_label.clone()];
    header.extend(spec.series.iter().map(|s| s.name.clone()));
    let rows = spec
        .x_labels()
        .into_iter()
        .enumerate()
        .map(|(ri, label)| {
            let cells = spec
                .series
                .iter()
                .enumerate()
                .map(|(si, s)| {
                    s.points.iter().find(|p| p.x.label() == label).map(|p| {
                        let stream = (ri as u64) << 32 | si as u64;
                        let mut rng = SplitMix64::split(seed ^ TABLE_STREAM, stream);
                        noise.corrupt(p.y, &mut rng)
                    })
                })
                .collect();
            TableRow { label, cells }
        })
        .collect();
    LinearTable { header, rows }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn tiny_bar() -> ChartSpec {
        ChartSpec {
            id: "b1".into(),
            chart_type: ChartType::Bar,
            title: "T".into(),
            x_label: "X".into(),
            y_label: "Y".into(),
            series: vec![Series::new("A", [("a".into(), 1.0), ("b".into(), 2.0)])],
            legends: vec!["A".into()],
        }
    }

    #[test]
    fn minimal_bar_document_parses() {
        let doc = br#"{"id":"m","chart_type":"bar","title":"t","x_label":"x","y_label":"y",
            "series":[{"name":"s","points":[{"x":"a","y":1}]}],"legends":[]}"#;
        let spec = parse_chart_spec(doc).unwrap();
        assert_eq!(spec.chart_type, ChartType::Bar);
        assert_eq!(spec.series[0].points[0].x, XValue::Text("a".into()));
    }

    #[test]
    fn negative_pie_value_is_invalid() {
        let doc = br#"{"id":"p","chart_type":"pie","title":"t","x_label":"x","y_label":"y",
            "series":[{"name":"s","points":[{"x":"a","y":3},{"x":"b","y":-1}]}],"legends":["a","b"]}"#;
        match parse_chart_spec(doc) {
            Err(ChartError::InvalidSpec(m)) => assert!(m.contains("nonnegative"), "{m}"),
            other => panic!("expected InvalidSpec, got {other:?}"),
        }
    }

    #[test]
    fn other_invariant_violations() {
        let mut s = tiny_bar();
        s.id = " ".into();
        assert!(matches!(s.validate(), Err(ChartError::InvalidSpec(m)) if m.contains("id")));
        let mut s = tiny_bar();
        s.series[0].points.clear();
        assert!(matches!(s.validate(), Err(ChartError::InvalidSpec(m)) if m.contains("at least one point")));
        let mut s = tiny_bar();
        s.series[0].points[1].x = XValue::Text("a".into());
        assert!(matches!(s.validate(), Err(ChartError::InvalidSpec(m)) if m.contains("distinct")));
        let mut s = tiny_bar();
        s.chart_type = ChartType::Pie;
        s.series.push(Series::new("B", [("a".into(), 1.0)]));
        assert!(matches!(s.validate(), Err(ChartError::InvalidSpec(m)) if m.contains("exactly one")));
    }

    #[test]
    fn malformed_and_unknown_fields() {
        assert!(matches!(
            parse_chart_spec(b"{not json"),
            Err(ChartError::MalformedSpec(_))
        ));
        let doc = br#"{"id":"m","chart_type":"bar","title":"t","x_label":"x","y_label":"y",
            "series":[{"name":"s","points":[{"x":"a","y":1}]}],"legends":[],"colour":"red"}"#;
        assert!(matches!(parse_chart_spec(doc), Err(ChartError::MalformedSpec(_))));
        let doc = br#"{"id":"m","chart_type":"area","title":"t","x_label":"x","y_label":"y",
            "series":[{"name":"s","points":[{"x":"a","y":1}]}],"legends":[]}"#;
        assert!(matches!(parse_chart_spec(doc), Err(ChartError::MalformedSpec(_))));
    }

    #[test]
    fn zero_noise_token_stream_contents() {
        let ts = render_token_stream(&tiny_bar(), &NoiseConfig::NONE, 1);
        let words: Vec<&str> = ts
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Word)
            .map(|t| t.text.as_str())
            .collect();
        let nums: Vec<&str> = ts
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Numeric)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(words, ["T", "X", "Y", "A", "a", "b"]);
        assert_eq!(nums, ["1", "2"]);
        assert!(ts.tokens.iter().all(|t| t.bbox.is_valid()));
    }

    #[test]
    fn renderers_are_deterministic() {
        let noise = NoiseConfig::new(0.5, 0.2, 0.3).unwrap();
        let spec = tiny_bar();
        assert_eq!(
            render_token_stream(&spec, &noise, 9),
            render_token_stream(&spec, &noise, 9)
        );
        assert_eq!(
            render_linearized_table(&spec, &noise, 9),
            render_linearized_table(&spec, &noise, 9)
        );
    }

    #[test]
    fn full_drop_keeps_only_title() {
        let noise = NoiseConfig::new(0.0, 0.0, 1.0).unwrap();
        let ts = render_token_stream(&tiny_bar(), &noise, 5);
        assert_eq!(ts.tokens.len(), 1);
        assert_eq!(ts.tokens[0].text, "T");
    }

    #[test]
    fn two_series_line_table() {
        let spec = ChartSpec {
            id: "l".into(),
            chart_type: ChartType::Line,
            title: "t".into(),
            x_label: "Year".into(),
            y_label: "v".into(),
            series: vec![
                Series::new("s1", [(2019.0.into(), 1.0), (2020.0.into(), 2.0)]),
                Series::new("s2", [(2019.0.into(), 3.0), (2020.0.into(), 4.0), (2021.0.into(), 5.0)]),
            ],
            legends: vec!["s1".into(), "s2".into()],
        };
        let t = render_linearized_table(&spec, &NoiseConfig::NONE, 0);
        assert_eq!(t.header, ["Year", "s1", "s2"]);
        let labels: Vec<&str> = t.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["2019", "2020", "2021"]);
        assert_eq!(t.rows[2].cells, [None, Some(5.0)]);
        assert!(t.is_well_formed());
    }

    #[test]
    fn pie_table_has_one_row_per_slice() {
        let spec = ChartSpec {
            id: "p".into(),
            chart_type: ChartType::Pie,
            title: "Shares".into(),
            x_label: "category".into(),
            y_label: "value".into(),
            series: vec![Series::new(
                "value",
                [("a".into(), 40.0), ("b".into(), 35.0), ("c".into(), 25.0)],
            )],
            legends: vec!["a".into(), "b".into(), "c".into()],
        };
        let t = render_linearized_table(&spec, &NoiseConfig::NONE, 0);
        assert_eq!(t.header, ["category", "value"]);
        assert_eq!(t.rows.len(), 3);
    }

    #[test]
    fn corruption_stays_within_scale() {
        let spec = crate::dataset::generate_synthetic_corpus(20, 3).0;
        let noise = NoiseConfig::new(1.0, 0.1, 0.0).unwrap();
        for s in &spec {
            let clean = render_linearized_table(s, &NoiseConfig::NONE, 4);
            let noisy = render_linearized_table(s, &noise, 4);
            for (c, n) in clean.rows.iter().zip(&noisy.rows) {
                for (a, b) in c.cells.iter().zip(&n.cells) {
                    if let (Some(a), Some(b)) = (a, b) {
                        assert!((b - a).abs() <= 0.1 * a.abs() + 1e-12, "{a} -> {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_noise_rejected() {
        assert!(NoiseConfig::new(1.5, 0.0, 0.0).is_err());
        assert!(NoiseConfig::new(0.0, -0.1, 0.0).is_err());
        assert!(NoiseConfig::new(0.0, 0.0, -0.1).is_err());
    }
}
