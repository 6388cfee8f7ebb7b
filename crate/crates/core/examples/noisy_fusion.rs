//! Corrupt the table view and let the OCR numbers repair it.
//!
//! ```bash
//! cargo run --example noisy_fusion -- 0.15
//! ```

use chartthinker::chart::{render_linearized_table, render_token_stream, NoiseConfig};
use chartthinker::dataset::generate_synthetic_corpus;
use chartthinker::parsing::fuse_extractions;

fn main() {
    let scale: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let noise = NoiseConfig::new(1.0, scale, 0.0).expect("noise settings in range");
    let (specs, _) = generate_synthetic_corpus(8, 42);

    let (mut total, mut repaired) = (0, 0);
    for (i, spec) in specs.iter().enumerate() {
        let seed = i as u64;
        let tokens = render_token_stream(spec, &NoiseConfig::NONE, seed);
        let table = render_linearized_table(spec, &noise, seed);
        let parsed = fuse_extractions(&tokens, &table);
        for s in &spec.series {
            for (j, p) in s.points.iter().enumerate() {
                total += 1;
                let x = p.x.label();
                let got = parsed
                    .pairs
                    .iter()
                    .find(|q| q.label == s.name && q.x == x)
                    .map(|q| q.value);
                let noisy = table.rows.iter().find(|r| r.label == s.name).and_then(|r| r.cells[j]);
                if got == Some(p.y) {
                    repaired += 1;
                } else {
                    println!(
                        "{} {} @ {}: truth {} table {:?} fused {:?}",
                        spec.id, s.name, x, p.y, noisy, got
                    );
                }
            }
        }
    }
    println!("corruption scale {scale}: {repaired}/{total} values recovered exactly");
}
