//! Score candidate summaries with BLEU, CIDEr, content selection and perplexity.
//!
//! ```bash
//! cargo run --example evaluate_metrics
//! ```

use chartthinker::evaluation::{cider, content_selection, corpus_bleu, evaluate, perplexity, train_lm, EvalItem};
use chartthinker::parsing::TextNumberPair;

fn main() {
    let references = [
        "This is a line chart. Wind shows an overall increasing trend, from 5.3 in 2019 to 6.6 in 2021.",
        "This is a bar chart. Sales peaked at 48 in 2020 before falling to 31 in 2022.",
        "This is a pie chart. Rent has the largest share with 42.",
    ];
    let hypotheses = [
        "This is a line chart. Wind rises from 5.3 in 2019 to 6.6 in 2021.",
        "This is a bar chart. Sales peaked at 48 in 2020.",
        "This is a pie chart. Rent has the largest share with 42.",
    ];

    let refs: Vec<Vec<&str>> = references.iter().map(|r| vec![*r]).collect();
    let b = corpus_bleu(&hypotheses, &refs, 4).expect("bleu");
    println!(
        "BLEU {:.2}  (precisions {:?}, BP {:.3})",
        b.score, b.precisions, b.brevity_penalty
    );
    println!("CIDEr {:.3}", cider(&hypotheses, &references).expect("cider"));

    let gold = vec![
        TextNumberPair {
            label: "Sales".into(),
            x: "2020".into(),
            value: 48.0,
        },
        TextNumberPair {
            label: "Sales".into(),
            x: "2022".into(),
            value: 31.0,
        },
    ];
    let cs = content_selection(hypotheses[1], &gold);
    println!("CS {:.1}% ({}/{})", cs.percent, cs.matched, cs.total);

    let lm = train_lm(&references, 3).expect("language model");
    println!("PPL {:.2}", perplexity(&hypotheses, &lm).expect("perplexity"));

    let items: Vec<EvalItem> = hypotheses
        .iter()
        .zip(references)
        .enumerate()
        .map(|(i, (h, r))| EvalItem {
            id: format!("item-{i}"),
            hypothesis: h.to_string(),
            references: vec![r.to_string()],
            gold_facts: if i == 1 { gold.clone() } else { Vec::new() },
            system: None,
        })
        .collect();
    let report = evaluate(&items).expect("report");
    println!("\nreport: {}", serde_json::to_string_pretty(&report).expect("json"));
}
