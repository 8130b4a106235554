//! NDCG with examination-weighted gains, the discounted cumulative NDCG and
//! exploitation ratios.
//!
//!     cargo run --example ranking_metrics

use ebrank::metrics::{cum_ndcg, dcg_at_k, exploitation_ratio, ndcg_at_k, CumNdcg};

fn main() -> ebrank::Result<()> {
    let candidates = [0.1, 1.0, 0.55, 0.1, 0.1, 1.0];
    let shown = [0.55, 1.0, 0.1, 0.1, 1.0];
    println!("DCG@5 = {:.4}", dcg_at_k(&shown, 5));
    for k in 1..=5 {
        println!("NDCG@{k} = {:.4}", ndcg_at_k(&shown, &candidates, k));
    }

    let series = [0.4, 0.6, 0.8, 0.9, 0.95];
    let mut online = CumNdcg::new(0.995);
    for x in series {
        online.push(x);
    }
    println!("cumulative NDCG {:.4} (direct sum {:.4})", online.value(), cum_ndcg(&series, 0.995));

    let weights = [0.4, -0.1, 0.05, 2.3];
    let ratios = exploitation_ratio(&weights)?;
    println!("exploitation ratios {ratios:.3?}; last weight takes {:.1}%", 100.0 * ratios[3]);
    Ok(())
}
