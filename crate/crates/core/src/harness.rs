//! End-to-end experiments.
//!
//! One trial:
//!
//! 1. load the dataset (or generate the synthetic corpus), mask columns, split
//!    queries 60/20/20 and min–max normalize with training statistics;
//! 2. draw the initial 5–10 candidates of every query and mask the rest;
//! 3. warm up with 20 BM25-ranked sessions per query;
//! 4. train the policy's models on training-partition behavior;
//! 5. run the online loop: pick a query uniformly over all partitions, let a
//!    masked item arrive with probability `eta`, rank, sample clicks, update
//!    statistics; retrain at evenly spaced checkpoints and evaluate cold/warm
//!    NDCG on the test partition there.
//!
//! Outputs are a step CSV (`step,partition,query_id,policy,ndcg,cum_ndcg`) and
//! a TOML report. Session rows carry the online NDCG of the presented list;
//! `cum_ndcg` only advances on test-partition sessions. Checkpoint rows use the
//! partition values `eval_cold` / `eval_warm`, query id `-`, and carry the
//! offline NDCG in the `ndcg` column.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::StatsMap;
use crate::click::{sample_clicks, session_count, ArrivalProcess, ExaminationModel, RelevanceModel};
use crate::letor::{self, Dataset, QueryId, QueryRecord};
use crate::metrics::{evaluate_offline, exploitation_ratio, ndcg_at_k, CumNdcg, EvalMode, MetricConfig};
use crate::policy::{self, policy_rank, CfExample, CfModel, Models, PolicyKind, PolicySpec, QueryView, RankedList};
use crate::prior::{train_prior, PriorModel, TrainConfig, TrainExample};
use crate::synth::{self, SynthConfig};
use crate::{Error, Result};

/// Name of the random number generator behind every stream.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64";

pub const STEP_CSV_HEADER: &str = "step,partition,query_id,policy,ndcg,cum_ndcg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Valid,
    Test,
}

impl Partition {
    pub fn name(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Valid => "valid",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Declarative parameters of one trial. Every field has a default, so a
/// config file only needs the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// LETOR file; the bundled synthetic corpus when absent.
    pub dataset_path: Option<PathBuf>,
    /// 0-based BM25 column.
    pub bm25_index: usize,
    /// 0-based columns zeroed before the experiment, e.g. behavior features
    /// shipped inside the dataset.
    pub masked_features: Vec<usize>,
    pub partition_ratios: (f64, f64, f64),
    pub partition_seed: u64,
    pub trial_seed: u64,
    pub policy: PolicySpec,
    pub eta: f64,
    pub beta_fixed: f64,
    pub k_s: usize,
    pub k_c: usize,
    pub gamma: f64,
    pub warmup_sessions_per_query: usize,
    pub n_model_updates: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub session_override: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset_path: None,
            bm25_index: SynthConfig::default().bm25_feature_index,
            masked_features: Vec::new(),
            partition_ratios: (0.6, 0.2, 0.2),
            partition_seed: 0,
            trial_seed: 0,
            policy: PolicySpec::ebrank(DEFAULT_EPSILON),
            eta: 1.0,
            beta_fixed: crate::prior::DEFAULT_BETA,
            k_s: crate::click::DEFAULT_CUTOFF,
            k_c: crate::metrics::DEFAULT_K_C,
            gamma: crate::metrics::DEFAULT_GAMMA,
            warmup_sessions_per_query: 20,
            n_model_updates: 20,
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: DEFAULT_EPOCHS,
            session_override: None,
            output_dir: None,
        }
    }
}

/// Default EBRank exploration coefficient.
pub const DEFAULT_EPSILON: f64 = 10.0;
/// Learning rate of every retrain in an experiment.
pub const DEFAULT_LEARNING_RATE: f64 = 0.5;
/// Gradient steps per retrain; each retrain starts from the previous model.
pub const DEFAULT_EPOCHS: usize = 200;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid("eta must lie in (0, 1]"));
        }
        if !(self.beta_fixed > 0.0) {
            return Err(Error::invalid("beta_fixed must be positive"));
        }
        ExaminationModel::new(self.k_s)?;
        self.metric_config().validate(self.k_s)?;
        if self.n_model_updates == 0 {
            return Err(Error::invalid("n_model_updates must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        Ok(())
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            k_c: self.k_c,
            gamma: self.gamma,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
        }
    }

    /// Reads the configured dataset, or generates the synthetic corpus.
    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset_path {
            Some(path) => letor::load_dataset(path, self.bm25_index),
            None => synth::generate(&SynthConfig {
                bm25_feature_index: self.bm25_index,
                ..SynthConfig::default()
            }),
        }
    }
}

/// The partitioned, normalized dataset every trial of a configuration shares.
#[derive(Debug, Clone)]
pub struct Environment {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
    /// Simulation slots: `(partition, index within that partition)`.
    pub slots: Vec<(Partition, usize)>,
}

impl Environment {
    pub fn prepare(dataset: &Dataset, config: &ExperimentConfig) -> Result<Self> {
        let mut dataset = dataset.clone();
        if dataset.bm25_feature_index >= dataset.feature_count {
            return Err(Error::invalid("missing BM25 column"));
        }
        dataset.mask_features(&config.masked_features)?;
        let (train, valid, test) =
            letor::partition(&dataset, config.partition_ratios, config.partition_seed)?;
        let (train, mut rest, _) = letor::normalize_features(&train, &[valid, test])?;
        let test = rest.pop().expect("two partitions");
        let valid = rest.pop().expect("two partitions");
        let slots = [(Partition::Train, &train), (Partition::Valid, &valid), (Partition::Test, &test)]
            .iter()
            .flat_map(|(p, d)| (0..d.queries.len()).map(move |i| (*p, i)))
            .collect();
        Ok(Environment {
            train,
            valid,
            test,
            slots,
        })
    }

    pub fn partition(&self, p: Partition) -> &Dataset {
        match p {
            Partition::Train => &self.train,
            Partition::Valid => &self.valid,
            Partition::Test => &self.test,
        }
    }

    pub fn query(&self, slot: usize) -> &QueryRecord {
        let (p, i) = self.slots[slot];
        &self.partition(p).queries[i]
    }

    pub fn queries(&self) -> impl Iterator<Item = &QueryRecord> + '_ {
        (0..self.slots.len()).map(|s| self.query(s))
    }

    pub fn num_queries(&self) -> usize {
        self.slots.len()
    }

    pub fn average_items(&self) -> f64 {
        let items: usize = self.queries().map(|q| q.items.len()).sum();
        items as f64 / self.num_queries() as f64
    }

    pub fn y_max(&self) -> u32 {
        self.train.y_max
    }

    pub fn feature_count(&self) -> usize {
        self.train.feature_count
    }

    pub fn bm25_feature_index(&self) -> usize {
        self.train.bm25_feature_index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Warmup,
    Online,
}

/// One served session: the query, the list shown, and the clicks received.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub phase: Phase,
    /// 1-based within its phase.
    pub step: usize,
    pub slot: usize,
    pub query_id: QueryId,
    pub ranked: RankedList,
    pub clicks: Vec<bool>,
}

/// Presents `ranked`, samples clicks and folds the examined prefix into `stats`.
fn serve<R: Rng + ?Sized>(
    query: &QueryRecord,
    ranked: &RankedList,
    relevance: &[f64],
    stats: &mut StatsMap,
    rng: &mut R,
) -> Result<Vec<bool>> {
    let rel: Vec<f64> = ranked.items.iter().map(|id| relevance[id.index()]).collect();
    let clicks = sample_clicks(ranked, &rel, rng);
    for ((id, p), &c) in ranked.items.iter().zip(&ranked.exam_probs).zip(&clicks) {
        if *p > 0.0 {
            stats.record(&query.query_id, *id, c, *p)?;
        }
    }
    Ok(clicks)
}

/// Runs `sessions_per_query` BM25-ranked sessions on every query's initial
/// candidate set, in slot order.
pub fn run_warmup<R: Rng + ?Sized>(
    env: &Environment,
    arrival: &ArrivalProcess,
    config: &ExperimentConfig,
    stats: &mut StatsMap,
    rng: &mut R,
) -> Result<Vec<SessionLog>> {
    let exam = ExaminationModel::new(config.k_s)?;
    let relevance = RelevanceModel::new(env.y_max())?;
    let models = Models {
        prior: PriorModel::new(env.feature_count(), config.beta_fixed)?,
        cf: CfModel::new(env.feature_count(), false),
        bm25_feature_index: env.bm25_feature_index(),
    };
    let bm25 = PolicySpec::new(PolicyKind::Bm25);
    let mut logs = Vec::with_capacity(env.num_queries() * config.warmup_sessions_per_query);
    for slot in 0..env.num_queries() {
        let query = env.query(slot);
        let rel = relevance.for_query(query)?;
        for _ in 0..config.warmup_sessions_per_query {
            let view = QueryView {
                query,
                active: arrival.active(slot),
                stats,
                sessions_served: 0,
            };
            let ranked = policy_rank(&bm25, &view, &models, &exam, rng)?;
            let clicks = serve(query, &ranked, &rel, stats, rng)?;
            logs.push(SessionLog {
                phase: Phase::Warmup,
                step: logs.len() + 1,
                slot,
                query_id: query.query_id.clone(),
                ranked,
                clicks,
            });
        }
    }
    Ok(logs)
}

/// Retrain steps `⌊i·T/n⌋` for `i = 1..=n`.
pub fn checkpoint_steps(total: usize, n_updates: usize) -> Vec<usize> {
    (1..=n_updates).map(|i| i * total / n_updates).collect()
}

/// Prior and counterfactual training sets from the training partition.
/// Training queries only ever receive training-partition sessions, so their
/// statistics are exactly the aggregates of the training logs.
fn training_sets(env: &Environment, stats: &StatsMap, use_behavior: bool) -> (Vec<TrainExample>, Vec<CfExample>) {
    let mut prior = Vec::new();
    let mut cf = Vec::new();
    for q in &env.train.queries {
        for item in &q.items {
            let counts = stats.get(&q.query_id, item.item_id);
            if counts.n == 0 {
                continue;
            }
            prior.push(TrainExample {
                features: item.features.clone(),
                n: counts.n,
                clicks: counts.clicks,
            });
            cf.push(CfExample {
                features: item.features.clone(),
                behavior: if use_behavior { CfModel::behavior_feature(&counts) } else { 0.0 },
                n: counts.n,
                clicks: counts.clicks,
            });
        }
    }
    (prior, cf)
}

/// Exploitation ratios of a linear model whose last weight is the behavior one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploitationSummary {
    pub behavior_ratio: f64,
    pub max_static_ratio: f64,
    pub ratios: Vec<f64>,
}

impl ExploitationSummary {
    pub fn from_cf(model: &CfModel) -> Option<Self> {
        let ratios = exploitation_ratio(&model.weights).ok()?;
        let (behavior, statics) = ratios.split_last()?;
        Some(ExploitationSummary {
            behavior_ratio: *behavior,
            max_static_ratio: statics.iter().copied().fold(0.0, f64::max),
            ratios,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEval {
    pub step: usize,
    pub cold_ndcg: f64,
    pub warm_ndcg: f64,
}

/// Outcome of one trial. Everything except `wall_clock_secs` is a
/// deterministic function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub policy: String,
    pub rng: String,
    pub sessions_scheduled: usize,
    pub warmup_sessions: usize,
    pub online_sessions: usize,
    pub test_sessions: usize,
    pub cold_ndcg: f64,
    pub warm_ndcg: f64,
    pub cum_ndcg: f64,
    pub degenerate_posteriors: usize,
    pub cum_ndcg_scope: String,
    pub exploitation: Option<ExploitationSummary>,
    pub wall_clock_secs: f64,
    pub checkpoints: Vec<CheckpointEval>,
    pub config: ExperimentConfig,
}

impl RunReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Everything a trial produced.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub report: RunReport,
    pub step_csv: String,
    pub logs: Vec<SessionLog>,
    pub stats: StatsMap,
    pub models: Models,
}

struct Trainer<'a> {
    env: &'a Environment,
    config: &'a ExperimentConfig,
    degenerate: usize,
}

impl Trainer<'_> {
    fn retrain(&mut self, models: &mut Models, stats: &StatsMap) -> Result<()> {
        let spec = &self.config.policy;
        let train_cfg = self.config.train_config();
        let (prior_set, cf_set) = training_sets(self.env, stats, spec.cf_reads_behavior());
        match spec.kind {
            PolicyKind::Ebrank => {
                let out = train_prior(&models.prior, &prior_set, &train_cfg)?;
                self.degenerate += out.degenerate;
                models.prior = out.model;
            }
            PolicyKind::CfTopk | PolicyKind::CfRandomk | PolicyKind::CfEpsilon | PolicyKind::Ucbrank => {
                models.cf = policy::train_cf(&models.cf, &cf_set, &train_cfg)?;
            }
            PolicyKind::Bm25 => {}
        }
        Ok(())
    }
}

fn csv_row(out: &mut String, step: usize, partition: &str, query: &str, policy: &str, ndcg: f64, cum: f64) {
    let _ = writeln!(out, "{step},{partition},{query},{policy},{ndcg},{cum}");
}

/// Runs one trial on an already prepared environment.
pub fn run_trial(env: &Environment, config: &ExperimentConfig) -> Result<TrialOutput> {
    config.validate()?;
    let started = Instant::now();
    let exam = ExaminationModel::new(config.k_s)?;
    let relevance = RelevanceModel::new(env.y_max())?;
    let rel: Vec<Vec<f64>> = env
        .queries()
        .map(|q| relevance.for_query(q))
        .collect::<Result<_>>()?;
    let spec = config.policy;
    let label = spec.label();
    let mut rng = ChaCha8Rng::seed_from_u64(config.trial_seed);

    let mut arrival = ArrivalProcess::new(config.eta, env.queries(), &mut rng)?;
    let mut stats = StatsMap::new();
    let mut logs = run_warmup(env, &arrival, config, &mut stats, &mut rng)?;
    let warmup_sessions = logs.len();

    let mut models = Models {
        prior: PriorModel::new(env.feature_count(), config.beta_fixed)?,
        cf: CfModel::new(
            env.feature_count(),
            spec.cf_reads_behavior(),
        ),
        bm25_feature_index: env.bm25_feature_index(),
    };
    let mut trainer = Trainer {
        env,
        config,
        degenerate: 0,
    };
    trainer.retrain(&mut models, &stats)?;

    let total = match config.session_override {
        Some(n) => n,
        None => session_count(env.num_queries(), env.average_items(), config.eta)?,
    };
    let checkpoints = checkpoint_steps(total, config.n_model_updates);
    let mut next_checkpoint = 0;
    let mut evals = Vec::with_capacity(checkpoints.len());
    let mut csv = String::new();
    csv.push_str(STEP_CSV_HEADER);
    csv.push('\n');
    let mut cum = CumNdcg::new(config.gamma);
    let mut served = vec![0u64; env.num_queries()];
    let k_c = config.k_c;

    let mut run_checkpoints = |step: usize,
                               next: &mut usize,
                               models: &mut Models,
                               stats: &StatsMap,
                               trainer: &mut Trainer<'_>,
                               csv: &mut String,
                               cum: f64|
     -> Result<()> {
        while *next < checkpoints.len() && checkpoints[*next] == step {
            // The initial fit after warm-up already covers step 0.
            if step > 0 {
                trainer.retrain(models, stats)?;
            }
            let cold = evaluate_offline(&spec, models, &env.test, EvalMode::Cold, stats, k_c)?;
            let warm = evaluate_offline(&spec, models, &env.test, EvalMode::Warm, stats, k_c)?;
            csv_row(csv, step, "eval_cold", "-", &label, cold, cum);
            csv_row(csv, step, "eval_warm", "-", &label, warm, cum);
            evals.push(CheckpointEval {
                step,
                cold_ndcg: cold,
                warm_ndcg: warm,
            });
            *next += 1;
        }
        Ok(())
    };

    run_checkpoints(0, &mut next_checkpoint, &mut models, &stats, &mut trainer, &mut csv, 0.0)?;

    let mut test_sessions = 0;
    for step in 1..=total {
        let at_step = |e: Error| Error::AtStep {
            step,
            source: Box::new(e),
        };
        let slot = rng.random_range(0..env.num_queries());
        let (partition, _) = env.slots[slot];
        let query = env.query(slot);
        arrival.step_arrival(slot, &mut rng);
        served[slot] += 1;

        let view = QueryView {
            query,
            active: arrival.active(slot),
            stats: &stats,
            sessions_served: served[slot],
        };
        let ranked = policy_rank(&spec, &view, &models, &exam, &mut rng).map_err(at_step)?;
        let clicks = serve(query, &ranked, &rel[slot], &mut stats, &mut rng).map_err(at_step)?;

        let shown: Vec<f64> = ranked.items.iter().take(k_c).map(|id| rel[slot][id.index()]).collect();
        let ndcg = ndcg_at_k(&shown, &rel[slot], k_c);
        if partition == Partition::Test {
            cum.push(ndcg);
            test_sessions += 1;
        }
        csv_row(&mut csv, step, partition.name(), &query.query_id.0, &label, ndcg, cum.value());
        logs.push(SessionLog {
            phase: Phase::Online,
            step,
            slot,
            query_id: query.query_id.clone(),
            ranked,
            clicks,
        });

        run_checkpoints(step, &mut next_checkpoint, &mut models, &stats, &mut trainer, &mut csv, cum.value())
            .map_err(at_step)?;
    }

    let last = *evals.last().expect("at least one checkpoint");
    let exploitation = match spec.kind {
        k if k.is_counterfactual() || k == PolicyKind::Ucbrank => ExploitationSummary::from_cf(&models.cf),
        _ => None,
    };
    let report = RunReport {
        policy: label,
        rng: RNG_NAME.to_owned(),
        sessions_scheduled: warmup_sessions + total,
        warmup_sessions,
        online_sessions: logs.len() - warmup_sessions,
        test_sessions,
        cold_ndcg: last.cold_ndcg,
        warm_ndcg: last.warm_ndcg,
        cum_ndcg: cum.value(),
        degenerate_posteriors: trainer.degenerate,
        cum_ndcg_scope: "online test-partition sessions; warm-up excluded".to_owned(),
        exploitation,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        checkpoints: evals,
        config: config.clone(),
    };
    Ok(TrialOutput {
        report,
        step_csv: csv,
        logs,
        stats,
        models,
    })
}

/// Writes the step CSV, report, model checkpoints and statistics dump.
pub fn write_outputs(output: &TrialOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("steps.csv", output.step_csv.clone()),
        ("report.toml", output.report.to_toml()),
        ("prior.ckpt", output.models.prior.to_checkpoint()),
        ("cf.ckpt", output.models.cf.to_checkpoint()),
        ("stats.tsv", output.stats.to_text()),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Loads the dataset, runs one trial and writes its outputs when
/// `output_dir` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let dataset = config.load_dataset()?;
    let env = Environment::prepare(&dataset, config)?;
    let output = run_trial(&env, config)?;
    if let Some(dir) = &config.output_dir {
        write_outputs(&output, dir)?;
    }
    Ok(output.report)
}

/// Runs `trials` seeds (`trial_seed + i`) for each policy in parallel.
/// Reports come back grouped by policy, in trial order.
pub fn run_sweep(
    base: &ExperimentConfig,
    policies: &[PolicySpec],
    trials: usize,
) -> Result<Vec<Vec<TrialOutput>>> {
    base.validate()?;
    let dataset = base.load_dataset()?;
    let env = Environment::prepare(&dataset, base)?;
    let jobs: Vec<(usize, usize)> = (0..policies.len())
        .flat_map(|p| (0..trials).map(move |t| (p, t)))
        .collect();
    let mut outputs = jobs
        .par_iter()
        .map(|&(p, t)| {
            let mut cfg = base.clone();
            cfg.policy = policies[p];
            cfg.trial_seed = base.trial_seed + t as u64;
            cfg.output_dir = base
                .output_dir
                .as_ref()
                .map(|d| d.join(policies[p].label()).join(format!("trial-{t}")));
            let out = run_trial(&env, &cfg)?;
            if let Some(dir) = &cfg.output_dir {
                write_outputs(&out, dir)?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    Ok(policies
        .iter()
        .map(|_| outputs.by_ref().take(trials).collect())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub policy: String,
    pub trials: usize,
    pub cold_ndcg: MeanStd,
    pub warm_ndcg: MeanStd,
    pub cum_ndcg: MeanStd,
    pub behavior_ratio: Option<MeanStd>,
    pub max_static_ratio: Option<MeanStd>,
}

/// Mean and sample standard deviation of every metric across trials that
/// differ only in `trial_seed` (and output directory).
pub fn aggregate_trials(reports: &[RunReport]) -> Result<TrialSummary> {
    let first = reports
        .first()
        .ok_or_else(|| Error::invalid("no reports to aggregate"))?;
    let canon = |r: &RunReport| ExperimentConfig {
        trial_seed: 0,
        output_dir: None,
        ..r.config.clone()
    };
    let reference = canon(first);
    if let Some(bad) = reports.iter().find(|r| canon(r) != reference) {
        return Err(Error::MismatchedConfigs(format!(
            "{} (seed {}) vs {} (seed {})",
            first.policy, first.config.trial_seed, bad.policy, bad.config.trial_seed
        )));
    }
    let col = |f: &dyn Fn(&RunReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
    let ratios: Option<Vec<&ExploitationSummary>> = reports.iter().map(|r| r.exploitation.as_ref()).collect();
    Ok(TrialSummary {
        policy: first.policy.clone(),
        trials: reports.len(),
        cold_ndcg: col(&|r| r.cold_ndcg),
        warm_ndcg: col(&|r| r.warm_ndcg),
        cum_ndcg: col(&|r| r.cum_ndcg),
        behavior_ratio: ratios
            .as_ref()
            .map(|v| MeanStd::of(&v.iter().map(|e| e.behavior_ratio).collect::<Vec<_>>())),
        max_static_ratio: ratios
            .as_ref()
            .map(|v| MeanStd::of(&v.iter().map(|e| e.max_static_ratio).collect::<Vec<_>>())),
    })
}

/// One-sided paired sign test of `a > b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// `P(X >= wins)` for `X ~ Binomial(wins + losses, 1/2)`.
    pub p_value: f64,
}

pub fn paired_sign_test(a: &[f64], b: &[f64]) -> SignTest {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let wins = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let losses = a.iter().zip(b).filter(|(x, y)| x < y).count();
    let ties = a.len() - wins - losses;
    let m = wins + losses;
    let mut p = 0.0;
    let mut binom = 1.0f64; // C(m, 0)
    for k in 0..=m {
        if k >= wins {
            p += binom;
        }
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    SignTest {
        wins,
        losses,
        ties,
        p_value: if m == 0 { 1.0 } else { p / 2f64.powi(m as i32) },
    }
}

/// Metrics recomputed from a step CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replay {
    pub cum_ndcg: f64,
    pub test_sessions: usize,
    pub online_sessions: usize,
    pub checkpoints: usize,
    pub cold_ndcg: Option<f64>,
    pub warm_ndcg: Option<f64>,
}

/// Replays the discounted cumulative NDCG over the test-partition rows and
/// picks up the last checkpoint evaluation.
pub fn replay_step_csv(text: &str, gamma: f64) -> Result<Replay> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == STEP_CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{STEP_CSV_HEADER}`"),
            })
        }
    }
    let mut cum = CumNdcg::new(gamma);
    let mut replay = Replay {
        cum_ndcg: 0.0,
        test_sessions: 0,
        online_sessions: 0,
        checkpoints: 0,
        cold_ndcg: None,
        warm_ndcg: None,
    };
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: i + 1,
                message: "expected 6 fields".into(),
            });
        }
        let ndcg: f64 = fields[4].parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("bad ndcg `{}`", fields[4]),
        })?;
        match fields[1] {
            "test" => {
                cum.push(ndcg);
                replay.test_sessions += 1;
                replay.online_sessions += 1;
            }
            "train" | "valid" => replay.online_sessions += 1,
            "eval_cold" => {
                replay.cold_ndcg = Some(ndcg);
                replay.checkpoints += 1;
            }
            "eval_warm" => replay.warm_ndcg = Some(ndcg),
            other => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("unknown partition `{other}`"),
                })
            }
        }
    }
    replay.cum_ndcg = cum.value();
    Ok(replay)
}
