//! Fusion of the OCR token stream with the linearized table.
//!
//! The table decides structure: which series and x position each number
//! belongs to. OCR decides digits: when an OCR number lies within the
//! matching tolerance of a table cell, the OCR value replaces the cell value.
//! Matching is greedy over all (cell, token) candidates ordered by relative
//! distance, then token `y0`, then token `x0`, then table order, and each OCR
//! token is used at most once. Cells without OCR support keep their table
//! value.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::chart::{ChartSpec, ChartType, LinearTable, TokenKind, TokenStream};
use crate::text::{format_number, tokenize};

/// Relative tolerance for accepting an OCR number as the value of a cell.
pub const DEFAULT_MATCH_TOLERANCE: f64 = 0.15;

/// One value bound to its series and x position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextNumberPair {
    pub label: String,
    pub x: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParsedChart {
    pub chart_type_hint: Option<ChartType>,
    pub legends: Vec<String>,
    pub pairs: Vec<TextNumberPair>,
    pub other_text: Vec<String>,
}

impl ParsedChart {
    pub fn is_empty(&self) -> bool {
        self.chart_type_hint.is_none() && self.legends.is_empty() && self.pairs.is_empty() && self.other_text.is_empty()
    }

    /// Set the chart type from a visual channel that the text extractors
    /// cannot see.
    pub fn with_chart_type(mut self, chart_type: ChartType) -> Self {
        self.chart_type_hint = Some(chart_type);
        self
    }

    /// The parse a perfect extractor pair would produce for `spec`.
    pub fn from_spec(spec: &ChartSpec) -> Self {
        let table = crate::chart::render_linearized_table(spec, &crate::chart::NoiseConfig::NONE, 0);
        let tokens = crate::chart::render_token_stream(spec, &crate::chart::NoiseConfig::NONE, 0);
        fuse_extractions(&tokens, &table)
    }

    /// Series values grouped by label, in first-seen order.
    pub fn series(&self) -> Vec<(String, Vec<(String, f64)>)> {
        let mut out: Vec<(String, Vec<(String, f64)>)> = Vec::new();
        for p in &self.pairs {
            match out.iter_mut().find(|(l, _)| *l == p.label) {
                Some((_, pts)) => pts.push((p.x.clone(), p.value)),
                None => out.push((p.label.clone(), vec![(p.x.clone(), p.value)])),
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parsed chart serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub match_tolerance: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            match_tolerance: DEFAULT_MATCH_TOLERANCE,
        }
    }
}

pub fn fuse_extractions(tokens: &TokenStream, table: &LinearTable) -> ParsedChart {
    fuse_with(tokens, table, &FusionConfig::default())
}

fn relative_distance(cell: f64, ocr: f64) -> f64 {
    if cell == 0.0 {
        if ocr == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (ocr - cell).abs() / cell.abs()
    }
}

pub fn fuse_with(tokens: &TokenStream, table: &LinearTable, config: &FusionConfig) -> ParsedChart {
    let series_names: &[String] = table.header.get(1..).unwrap_or(&[]);
    let mut legends: Vec<String> = Vec::new();
    for name in series_names {
        if !legends.contains(name) {
            legends.push(name.clone());
        }
    }
    let row_labels: HashSet<&str> = table.rows.iter().map(|r| r.label.as_str()).collect();

    // Numeric tokens, minus one tick label per numeric row label. The tick
    // taken is the lowest on the canvas (largest y0), then leftmost.
    let mut numeric: Vec<(usize, f64)> = tokens
        .tokens
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.value().filter(|v| v.is_finite()).map(|v| (i, v)))
        .collect();
    for row in &table.rows {
        let candidates = numeric
            .iter()
            .enumerate()
            .filter(|(_, (ti, _))| tokens.tokens[*ti].text == row.label)
            .max_by(|(_, (a, _)), (_, (b, _))| {
                let (ba, bb) = (&tokens.tokens[*a].bbox, &tokens.tokens[*b].bbox);
                ba.y0.total_cmp(&bb.y0).then(bb.x0.total_cmp(&ba.x0))
            })
            .map(|(pos, _)| pos);
        if let Some(pos) = candidates {
            numeric.remove(pos);
        }
    }

    struct Cell {
        row: usize,
        col: usize,
        value: f64,
    }
    let cells: Vec<Cell> = table
        .rows
        .iter()
        .enumerate()
        .flat_map(|(ri, r)| {
            r.cells.iter().enumerate().filter_map(move |(ci, c)| {
                c.filter(|v| v.is_finite()).map(|value| Cell {
                    row: ri,
                    col: ci,
                    value,
                })
            })
        })
        .collect();

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        for (ni, &(_, v)) in numeric.iter().enumerate() {
            let d = relative_distance(cell.value, v);
            if d <= config.match_tolerance {
                candidates.push((d, ni, ci));
            }
        }
    }
    candidates.sort_by(|a, b| {
        let (ta, tb) = (&tokens.tokens[numeric[a.1].0].bbox, &tokens.tokens[numeric[b.1].0].bbox);
        a.0.total_cmp(&b.0)
            .then(ta.y0.total_cmp(&tb.y0))
            .then(ta.x0.total_cmp(&tb.x0))
            .then(a.2.cmp(&b.2))
            .then(a.1.cmp(&b.1))
    });
    let mut fused: Vec<f64> = cells.iter().map(|c| c.value).collect();
    let mut cell_done = vec![false; cells.len()];
    let mut token_used = vec![false; numeric.len()];
    for (_, ni, ci) in candidates {
        if cell_done[ci] || token_used[ni] {
            continue;
        }
        cell_done[ci] = true;
        token_used[ni] = true;
        fused[ci] = numeric[ni].1;
    }

    let pairs = cells
        .iter()
        .zip(fused)
        .map(|(c, value)| TextNumberPair {
            label: series_names[c.col].clone(),
            x: table.rows[c.row].label.clone(),
            value,
        })
        .collect();

    let mut chart_type_hint = None;
    let mut other_text: Vec<String> = Vec::new();
    for t in tokens.tokens.iter().filter(|t| t.kind == TokenKind::Word) {
        if chart_type_hint.is_none() {
            chart_type_hint = tokenize(&t.text).iter().find_map(|w| ChartType::from_keyword(w));
        }
        let text = t.text.trim();
        if text.is_empty()
            || legends.iter().any(|l| l == text)
            || row_labels.contains(text)
            || other_text.iter().any(|o| o == text)
        {
            continue;
        }
        other_text.push(text.to_string());
    }

    ParsedChart {
        chart_type_hint,
        legends,
        pairs,
        other_text,
    }
}

/// Line-oriented text form of a parse: `label | x | value` per pair, then
/// `LEGENDS:` and `TEXT:` lines with entries joined by ` | `.
pub fn to_prompt_block(parsed: &ParsedChart) -> String {
    if parsed.pairs.is_empty() && parsed.legends.is_empty() && parsed.other_text.is_empty() {
        return String::new();
    }
    let mut lines: Vec<String> = parsed
        .pairs
        .iter()
        .map(|p| format!("{} | {} | {}", p.label, p.x, format_number(p.value)))
        .collect();
    let list = |prefix: &str, items: &[String]| {
        if items.is_empty() {
            format!("{prefix}:")
        } else {
            format!("{prefix}: {}", items.join(" | "))
        }
    };
    lines.push(list("LEGENDS", &parsed.legends));
    lines.push(list("TEXT", &parsed.other_text));
    lines.join("\n")
}
