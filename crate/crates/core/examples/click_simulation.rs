//! Position-biased clicks and their inverse-propensity correction.
//!
//!     cargo run --example click_simulation

use ebrank::bayes::ClickCounts;
use ebrank::click::{relevance_probability, sample_clicks, ExaminationModel};
use ebrank::letor::ItemId;
use ebrank::policy::RankedList;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ebrank::Result<()> {
    let exam = ExaminationModel::default();
    println!("examination curve: {:?}", exam.curve(7));

    // eight items, labels 0..=2, presented in a fixed order
    let labels = [0, 2, 1, 0, 2, 1, 0, 0];
    let rel: Vec<f64> = labels
        .iter()
        .map(|&y| relevance_probability(y, 2))
        .collect::<ebrank::Result<_>>()?;
    let ranked = RankedList::new((0..8).map(ItemId).collect(), &exam);

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut counts = [ClickCounts::default(); 8];
    let mut raw = [0u32; 8];
    for _ in 0..50_000 {
        let clicks = sample_clicks(&ranked, &rel, &mut rng);
        for ((id, p), c) in ranked.examined().zip(clicks) {
            counts[id.index()].record(c, p)?;
            raw[id.index()] += u32::from(c);
        }
    }
    println!("rank  label  true R  raw CTR  IPS estimate");
    for (i, c) in counts.iter().enumerate() {
        let ctr = f64::from(raw[i]) / 50_000.0;
        let ips = c.ips_rate().map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("{:>4}  {:>5}  {:>6.3}  {ctr:>7.4}  {ips:>12}", i + 1, labels[i], rel[i]);
    }
    Ok(())
}
