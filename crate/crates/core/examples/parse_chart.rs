//! Render a chart into its two text views and fuse them back into pairs.
//!
//! ```bash
//! cargo run --example parse_chart
//! ```

use chartthinker::chart::{render_linearized_table, render_token_stream, ChartSpec, ChartType, NoiseConfig, Series};
use chartthinker::parsing::fuse_extractions;

fn main() {
    let spec = ChartSpec {
        id: "energy".into(),
        chart_type: ChartType::Line,
        title: "Renewable share of electricity".into(),
        x_label: "Year".into(),
        y_label: "Share (%)".into(),
        series: vec![
            Series::new(
                "Wind",
                [(2019.0.into(), 5.3), (2020.0.into(), 6.1), (2021.0.into(), 6.6)],
            ),
            Series::new(
                "Solar",
                [(2019.0.into(), 2.7), (2020.0.into(), 3.2), (2021.0.into(), 3.7)],
            ),
        ],
        legends: vec!["Wind".into(), "Solar".into()],
    };
    spec.validate().expect("valid spec");

    let tokens = render_token_stream(&spec, &NoiseConfig::NONE, 0);
    println!("OCR tokens:");
    for t in &tokens.tokens {
        println!("  {:<32} {:?} ({:.0},{:.0})", t.text, t.kind, t.bbox.x0, t.bbox.y0);
    }

    let table = render_linearized_table(&spec, &NoiseConfig::NONE, 0);
    println!("\ntable header: {}", table.header.join(" | "));
    for row in &table.rows {
        println!("  {} -> {:?}", row.label, row.cells);
    }

    let parsed = fuse_extractions(&tokens, &table);
    println!("\nchart type hint: {:?}", parsed.chart_type_hint);
    println!("legends: {:?}", parsed.legends);
    println!("other text: {:?}", parsed.other_text);
    for p in &parsed.pairs {
        println!("  {} @ {} = {}", p.label, p.x, p.value);
    }
}
