//! How the Beta posterior and the EBRank score evolve as one item is shown.
//!
//!     cargo run --example posterior_exploration

use ebrank::bayes::BehaviorStats;
use ebrank::click::examination_probability;
use ebrank::policy::score_ebrank;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ebrank::Result<()> {
    let (alpha, beta) = (1.2, 5.0);
    let true_rate = 0.6;
    let epsilon = 10.0;
    let mut stats = BehaviorStats::prior(alpha, beta);
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    println!("  n   clicks   mean     var bound  certainty  score(eps={epsilon})");
    for t in 0..=200u32 {
        if matches!(t, 0 | 1 | 2 | 5 | 10 | 20 | 50 | 100 | 200) {
            let s = stats.summary();
            println!(
                "{:>3}  {:>7.2}  {:.4}  {:.6}   {:.6}   {:.4}",
                stats.n,
                stats.clicks,
                s.mean,
                s.variance_bound,
                s.mc,
                score_ebrank(&stats, epsilon)
            );
        }
        // alternate between rank 1 and rank 3
        let p = examination_probability(if t % 2 == 0 { 1 } else { 3 }, 5);
        let clicked = rng.random::<f64>() < p * true_rate;
        stats = stats.updated(clicked, p)?;
    }

    // the exploration bonus is large for a fresh item and negligible for a well-known one
    let known = BehaviorStats::new(2.0, 5.0, stats.counts());
    let fresh = BehaviorStats::prior(3.0, 5.0);
    println!(
        "known item: mean {:.3} score {:.3}; fresh item: mean {:.3} score {:.3}",
        known.posterior_mean(),
        score_ebrank(&known, epsilon),
        fresh.posterior_mean(),
        score_ebrank(&fresh, epsilon)
    );
    Ok(())
}
