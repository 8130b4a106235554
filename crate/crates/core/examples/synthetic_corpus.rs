//! Generate the bundled synthetic LETOR corpus and write it to disk.
//!
//!     cargo run --example synthetic_corpus -- out.txt

use ebrank::synth::{generate, SynthConfig};

fn main() -> ebrank::Result<()> {
    let cfg = SynthConfig::default();
    let ds = generate(&cfg)?;
    let mut hist = [0usize; 3];
    for item in ds.queries.iter().flat_map(|q| &q.items) {
        hist[item.label as usize] += 1;
    }
    println!(
        "{} queries × {} items, {} features, label counts {hist:?}",
        cfg.queries, cfg.items_per_query, cfg.feature_count
    );
    match std::env::args().nth(1) {
        Some(path) => {
            ds.write_letor(&path)?;
            println!("wrote {path}");
        }
        None => {
            for line in ds.to_letor_string().lines().take(3) {
                println!("{line}");
            }
        }
    }
    Ok(())
}
