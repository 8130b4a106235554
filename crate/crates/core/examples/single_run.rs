//! One full trial of a chosen policy, with outputs written to a directory.
//!
//!     cargo run --release --example single_run -- ucbrank /tmp/ucb

use ebrank::harness::{run_experiment, ExperimentConfig};
use ebrank::policy::PolicySpec;

fn main() -> ebrank::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let kind = args.next().unwrap_or_else(|| "ebrank".into()).parse()?;
    let mut cfg = ExperimentConfig {
        output_dir: args.next().map(Into::into),
        ..ExperimentConfig::default()
    };
    cfg.policy = PolicySpec {
        kind,
        ..cfg.policy
    };
    let report = run_experiment(&cfg)?;
    println!(
        "{}: cold {:.4}, warm {:.4}, cum {:.2} over {} test sessions ({:.1}s)",
        report.policy, report.cold_ndcg, report.warm_ndcg, report.cum_ndcg, report.test_sessions, report.wall_clock_secs
    );
    for c in &report.checkpoints {
        println!("step {:>5}: cold {:.4} warm {:.4}", c.step, c.cold_ndcg, c.warm_ndcg);
    }
    if let Some(dir) = &cfg.output_dir {
        println!("outputs in {}", dir.display());
    }
    Ok(())
}
