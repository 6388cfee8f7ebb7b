//! Line-oriented prompt layout shared by the orchestrator, which writes
//! prompts, and the template generator, which reads them back.
//!
//! ```text
//! STAGE: trend
//! INSTRUCTION: Describe the trend of the chart data with key values.
//! EXAMPLE (w=1): ...
//! EXAMPLE (w=1/2): ...
//! TYPE: line
//! CHART:
//! Sales | 2019 | 12.5
//! LEGENDS: Sales
//! TEXT: Annual sales | Year | Revenue
//! SO FAR: This is a line chart.
//! ```
//!
//! `TYPE:` appears only when the chart type is known; `CHART:` only when the
//! chart block is nonempty.

use crate::chart::ChartType;
use crate::parsing::TextNumberPair;
use crate::retrieval::Stage;
use crate::text::{parse_number, tokenize};

pub const STAGE: &str = "STAGE: ";
pub const INSTRUCTION: &str = "INSTRUCTION: ";
pub const EXAMPLE: &str = "EXAMPLE (";
pub const TYPE: &str = "TYPE: ";
pub const CHART: &str = "CHART:";
pub const SO_FAR: &str = "SO FAR: ";
pub const LEGENDS: &str = "LEGENDS:";
pub const TEXT: &str = "TEXT:";
pub const TASK: &str = "TASK: ";
pub const THOUGHT: &str = "THOUGHT: ";

/// `w=1` for rank 1, `w=1/i` otherwise.
pub fn weight_marker(rank: usize) -> String {
    if rank == 1 {
        "w=1".to_string()
    } else {
        format!("w=1/{rank}")
    }
}

pub fn example_line(rank: usize, text: &str) -> String {
    format!("{EXAMPLE}{}): {}", weight_marker(rank), single_line(text))
}

/// Collapse internal line breaks so one logical entry stays on one line.
pub fn single_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// What the template generator can recover from a prompt.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PromptView {
    pub stage: Option<Stage>,
    pub task: Option<String>,
    pub chart_type: Option<ChartType>,
    pub examples: Vec<String>,
    pub pairs: Vec<TextNumberPair>,
    pub legends: Vec<String>,
    pub text: Vec<String>,
    pub so_far: Vec<String>,
    pub thoughts: Vec<String>,
}

impl PromptView {
    pub fn parse(prompt: &str) -> Self {
        let mut view = PromptView::default();
        let mut in_chart = false;
        for line in prompt.lines() {
            if let Some(rest) = line.strip_prefix(STAGE) {
                view.stage = rest.trim().parse().ok();
            } else if let Some(rest) = line.strip_prefix(TASK) {
                view.task = Some(rest.trim().to_string());
            } else if let Some(rest) = line.strip_prefix(EXAMPLE) {
                if let Some((_, text)) = rest.split_once("): ") {
                    view.examples.push(text.to_string());
                }
            } else if let Some(rest) = line.strip_prefix(TYPE) {
                view.chart_type = ChartType::from_keyword(rest.trim());
            } else if line == CHART {
                in_chart = true;
            } else if let Some(rest) = line.strip_prefix(SO_FAR) {
                in_chart = false;
                view.so_far.push(rest.to_string());
            } else if let Some(rest) = line.strip_prefix(THOUGHT) {
                view.thoughts.push(rest.to_string());
            } else if in_chart {
                if let Some(rest) = line.strip_prefix(LEGENDS) {
                    view.legends = split_list(rest);
                } else if let Some(rest) = line.strip_prefix(TEXT) {
                    view.text = split_list(rest);
                    in_chart = false;
                } else if let Some(pair) = parse_pair(line) {
                    view.pairs.push(pair);
                }
            }
        }
        view
    }

    /// Chart type stated in the prompt; else the type named by an earlier
    /// thought; else the first type named by a retrieved example, in rank
    /// order.
    pub fn resolved_chart_type(&self) -> Option<ChartType> {
        self.chart_type
            .or_else(|| self.so_far.iter().find_map(|t| type_mention(t)))
            .or_else(|| self.examples.iter().find_map(|e| type_mention(e)))
    }
}

/// First "`<type>` chart" phrase in `text`.
pub fn type_mention(text: &str) -> Option<ChartType> {
    tokenize(text).windows(2).find_map(|w| {
        if w[1] == "chart" {
            ChartType::from_keyword(&w[0])
        } else {
            None
        }
    })
}

fn split_list(rest: &str) -> Vec<String> {
    let rest = rest.trim();
    if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(" | ").map(str::to_string).collect()
    }
}

fn parse_pair(line: &str) -> Option<TextNumberPair> {
    let mut parts = line.rsplitn(3, " | ");
    let value = parse_number(parts.next()?.trim())?;
    let x = parts.next()?.to_string();
    let label = parts.next()?.to_string();
    Some(TextNumberPair { label, x, value })
}
