use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ebrank::harness::{self, aggregate_trials, ExperimentConfig, ExploitationSummary};
use ebrank::policy::{CfModel, PolicyKind, PolicySpec};
use ebrank::{Error, Result};

#[derive(Parser)]
#[command(name = "ebrank", version, about = "Online learning-to-rank simulation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and print its report.
    Run {
        #[command(flatten)]
        opts: ConfigOpts,
        /// Policy label, e.g. `ebrank`, `cf_topk+behav`, `ucbrank`.
        #[arg(long)]
        policy: Option<String>,
    },
    /// Run several policies over consecutive trial seeds and summarize.
    Sweep {
        #[command(flatten)]
        opts: ConfigOpts,
        /// Comma-separated policy labels.
        #[arg(long, value_delimiter = ',', default_value = "ebrank,cf_topk+behav,cf_topk")]
        policies: Vec<String>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
    /// Recompute metrics from a step CSV.
    Eval {
        steps: PathBuf,
        #[arg(long, default_value_t = ebrank::metrics::DEFAULT_GAMMA)]
        gamma: f64,
    },
    /// Exploitation ratios of a counterfactual model checkpoint.
    Inspect {
        checkpoint: PathBuf,
        /// The last weight is the behavior feature.
        #[arg(long)]
        behavior: bool,
    },
}

#[derive(Args)]
struct ConfigOpts {
    /// TOML config file; unset fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    bm25_index: Option<usize>,
    #[arg(long)]
    trial_seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Online sessions instead of the derived count.
    #[arg(long)]
    sessions: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl ConfigOpts {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.dataset {
            cfg.dataset_path = Some(p.clone());
        }
        if let Some(i) = self.bm25_index {
            cfg.bm25_index = i;
        }
        if let Some(s) = self.trial_seed {
            cfg.trial_seed = s;
        }
        if let Some(e) = self.epsilon {
            cfg.policy.epsilon = e;
        }
        if let Some(e) = self.eta {
            cfg.eta = e;
        }
        if let Some(n) = self.sessions {
            cfg.session_override = Some(n);
        }
        if let Some(o) = &self.output {
            cfg.output_dir = Some(o.clone());
        }
        Ok(cfg)
    }
}

fn parse_policy(label: &str, epsilon: f64) -> Result<PolicySpec> {
    let (kind, behav) = match label.strip_suffix("+behav") {
        Some(k) => (k, true),
        None => (label, false),
    };
    let kind: PolicyKind = kind.parse()?;
    if behav && !kind.is_counterfactual() {
        return Err(Error::UnknownPolicy(label.to_owned()));
    }
    Ok(PolicySpec {
        kind,
        epsilon: if kind == PolicyKind::Ebrank { epsilon } else { 0.0 },
        use_behavior: behav,
    })
}

fn print_ratios(e: &ExploitationSummary) {
    for (j, r) in e.ratios.iter().enumerate() {
        println!("w{j}\t{r:.6}");
    }
    println!("behavior\t{:.6}", e.behavior_ratio);
    println!("max_static\t{:.6}", e.max_static_ratio);
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { opts, policy } => {
            let mut cfg = opts.resolve()?;
            if let Some(label) = policy {
                let eps = opts.epsilon.unwrap_or(harness::DEFAULT_EPSILON);
                cfg.policy = parse_policy(&label, eps)?;
            }
            let report = harness::run_experiment(&cfg)?;
            print!("{}", report.to_toml());
        }
        Command::Sweep { opts, policies, trials } => {
            let base = opts.resolve()?;
            let eps = opts.epsilon.unwrap_or(harness::DEFAULT_EPSILON);
            let specs = policies
                .iter()
                .map(|p| parse_policy(p, eps))
                .collect::<Result<Vec<_>>>()?;
            let runs = harness::run_sweep(&base, &specs, trials)?;
            let mut csv = String::from("policy,metric,mean,std\n");
            for outputs in &runs {
                let reports: Vec<_> = outputs.iter().map(|o| o.report.clone()).collect();
                let s = aggregate_trials(&reports)?;
                let mut rows = vec![("cold_ndcg", s.cold_ndcg), ("warm_ndcg", s.warm_ndcg), ("cum_ndcg", s.cum_ndcg)];
                rows.extend(s.behavior_ratio.map(|m| ("behavior_ratio", m)));
                rows.extend(s.max_static_ratio.map(|m| ("max_static_ratio", m)));
                for (metric, m) in rows {
                    csv.push_str(&format!("{},{metric},{},{}\n", s.policy, m.mean, m.std));
                }
            }
            print!("{csv}");
            if let Some(dir) = &base.output_dir {
                let path = dir.join("summary.csv");
                fs::write(&path, csv).map_err(|e| Error::Io { path, source: e })?;
            }
        }
        Command::Eval { steps, gamma } => {
            let text = fs::read_to_string(&steps).map_err(|e| Error::Io { path: steps.clone(), source: e })?;
            let r = harness::replay_step_csv(&text, gamma)?;
            println!("online_sessions = {}", r.online_sessions);
            println!("test_sessions = {}", r.test_sessions);
            println!("checkpoints = {}", r.checkpoints);
            println!("cum_ndcg = {}", r.cum_ndcg);
            if let (Some(c), Some(w)) = (r.cold_ndcg, r.warm_ndcg) {
                println!("cold_ndcg = {c}");
                println!("warm_ndcg = {w}");
            }
        }
        Command::Inspect { checkpoint, behavior } => {
            let text = fs::read_to_string(&checkpoint)
                .map_err(|e| Error::Io { path: checkpoint.clone(), source: e })?;
            let model = CfModel::from_checkpoint(&text, behavior)?;
            let summary = ExploitationSummary::from_cf(&model)
                .ok_or_else(|| Error::InvalidArgument("all weights are zero".into()))?;
            print_ratios(&summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
