//! The pinned SplitMix64 generator and its per-stream seed derivation.
//!
//! ```bash
//! cargo run --example seeded_rng -- 1234567
//! ```

use chartthinker::rng::SplitMix64;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1234567);
    let mut rng = SplitMix64::new(seed);
    println!("first outputs for seed {seed}:");
    for _ in 0..5 {
        println!("  {:#018x}", rng.next_u64());
    }
    for stream in 0..3 {
        let mut s = SplitMix64::split(seed, stream);
        println!(
            "stream {stream}: seed {:#018x}, first {:.6}",
            SplitMix64::derive_seed(seed, stream),
            s.next_f64()
        );
    }
    let mut items: Vec<u32> = (1..=10).collect();
    SplitMix64::new(seed).shuffle(&mut items);
    println!("shuffle: {items:?}");
}
