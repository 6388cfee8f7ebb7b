//! Put several systems on one scale by min-max normalizing each metric column.
//!
//! ```bash
//! cargo run --example s_norm_table
//! ```

use chartthinker::evaluation::{s_norm, s_norm_aggregate, MetricColumn, Orientation};

fn main() {
    let systems: Vec<String> = ["baseline", "retrieval", "staged"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let column = |name: &str, scores: [f64; 3], orientation| MetricColumn {
        name: name.into(),
        system_names: systems.clone(),
        scores: scores.to_vec(),
        orientation,
    };
    let columns = [
        column("BLEU", [21.4, 30.2, 35.9], Orientation::HigherBetter),
        column("CIDEr", [1.9, 2.8, 3.4], Orientation::HigherBetter),
        column("CS", [61.0, 72.5, 70.1], Orientation::HigherBetter),
        column("PPL", [18.2, 12.7, 9.9], Orientation::LowerBetter),
    ];

    print!("{:<10}", "system");
    for c in &columns {
        print!("{:>8}", c.name);
    }
    println!("{:>8}", "S_norm");
    let normalized: Vec<Vec<f64>> = columns.iter().map(|c| s_norm(c).expect("distinct scores")).collect();
    let aggregate = s_norm_aggregate(&columns).expect("aggregate");
    for (i, name) in systems.iter().enumerate() {
        print!("{name:<10}");
        for col in &normalized {
            print!("{:>8.3}", col[i]);
        }
        println!("{:>8.3}", aggregate[i]);
    }
}
