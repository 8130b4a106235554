//! Five-trial comparison of EBRank against top-k counterfactual ranking, with
//! and without the behavior feature, on the synthetic corpus.
//!
//!     cargo run --release --example compare_policies [trials]

use ebrank::harness::{aggregate_trials, paired_sign_test, run_sweep, ExperimentConfig, RunReport};
use ebrank::policy::{PolicyKind, PolicySpec};

fn column(reports: &[RunReport], f: impl Fn(&RunReport) -> f64) -> Vec<f64> {
    reports.iter().map(f).collect()
}

fn main() -> ebrank::Result<()> {
    env_logger::init();
    let trials = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("trial count"))
        .unwrap_or(5);
    let base = ExperimentConfig::default();
    let policies = [
        base.policy,
        PolicySpec::counterfactual(PolicyKind::CfTopk, true),
        PolicySpec::counterfactual(PolicyKind::CfTopk, false),
    ];
    let runs = run_sweep(&base, &policies, trials)?;
    let reports: Vec<Vec<RunReport>> = runs
        .into_iter()
        .map(|v| v.into_iter().map(|o| o.report).collect())
        .collect();

    println!("{:<16} {:>16} {:>16} {:>18}", "policy", "cold", "warm", "cum");
    for r in &reports {
        let s = aggregate_trials(r)?;
        println!(
            "{:<16} {:>8.4} ±{:.4} {:>8.4} ±{:.4} {:>10.2} ±{:.2}",
            s.policy, s.cold_ndcg.mean, s.cold_ndcg.std, s.warm_ndcg.mean, s.warm_ndcg.std,
            s.cum_ndcg.mean, s.cum_ndcg.std
        );
        if let (Some(b), Some(m)) = (s.behavior_ratio, s.max_static_ratio) {
            println!("{:<16} behavior ratio {:.3}, max static ratio {:.3}", "", b.mean, m.mean);
        }
    }

    let (eb, behav, plain) = (&reports[0], &reports[1], &reports[2]);
    let ratio = |r: &RunReport, f: fn(&ebrank::harness::ExploitationSummary) -> f64| {
        r.exploitation.as_ref().map_or(f64::NAN, f)
    };
    let checks = [
        ("ebrank warm > cold", column(eb, |r| r.warm_ndcg), column(eb, |r| r.cold_ndcg)),
        ("ebrank cum > cf_topk+behav cum", column(eb, |r| r.cum_ndcg), column(behav, |r| r.cum_ndcg)),
        ("cf_topk cold > cf_topk+behav cold", column(plain, |r| r.cold_ndcg), column(behav, |r| r.cold_ndcg)),
        (
            "behavior ratio > max static ratio",
            column(behav, |r| ratio(r, |e| e.behavior_ratio)),
            column(behav, |r| ratio(r, |e| e.max_static_ratio)),
        ),
    ];
    println!();
    for (name, a, b) in checks {
        let t = paired_sign_test(&a, &b);
        println!("{name:<36} {}/{} wins, p = {:.5}", t.wins, a.len(), t.p_value);
    }
    Ok(())
}
