use std::fs;
use std::process::Command;

use ebrank::harness::{self, aggregate_trials, replay_step_csv, ExperimentConfig, RunReport};
use ebrank::letor::parse_dataset;
use ebrank::policy::{PolicyKind, PolicySpec};
use ebrank::synth::{generate, SynthConfig};

fn small_corpus() -> String {
    generate(&SynthConfig {
        queries: 12,
        items_per_query: 14,
        feature_count: 5,
        ..SynthConfig::default()
    })
    .unwrap()
    .to_letor_string()
}

#[test]
fn config_file_with_dataset_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.txt");
    fs::write(&data, small_corpus()).unwrap();
    let out = dir.path().join("out");
    let config = format!(
        "dataset_path = {:?}\nsession_override = 240\nn_model_updates = 6\noutput_dir = {:?}\n\n[policy]\nkind = \"cf_epsilon\"\nuse_behavior = true\n",
        data, out
    );
    let cfg = ExperimentConfig::from_toml(&config).unwrap();
    let report = harness::run_experiment(&cfg).unwrap();

    assert_eq!(report.policy, "cf_epsilon+behav");
    assert_eq!(report.warmup_sessions, 12 * 20);
    assert_eq!(report.online_sessions, 240);
    assert_eq!(report.checkpoints.len(), 6);

    let back = RunReport::from_toml(&fs::read_to_string(out.join("report.toml")).unwrap()).unwrap();
    assert_eq!(back.config, cfg);
    let steps = fs::read_to_string(out.join("steps.csv")).unwrap();
    let replay = replay_step_csv(&steps, cfg.gamma).unwrap();
    assert!((replay.cum_ndcg - report.cum_ndcg).abs() < 1e-9);
    assert_eq!(steps.lines().count(), 1 + 240 + 2 * 6);
}

#[test]
fn different_trial_seeds_give_different_runs() {
    let ds = parse_dataset(&small_corpus(), 0).unwrap();
    let cfg = ExperimentConfig {
        session_override: Some(100),
        n_model_updates: 2,
        ..ExperimentConfig::default()
    };
    let env = harness::Environment::prepare(&ds, &cfg).unwrap();
    let a = harness::run_trial(&env, &cfg).unwrap();
    let b = harness::run_trial(&env, &ExperimentConfig { trial_seed: 1, ..cfg.clone() }).unwrap();
    let a2 = harness::run_trial(&env, &cfg).unwrap();
    assert_ne!(a.step_csv, b.step_csv);
    assert_eq!(a.step_csv, a2.step_csv);
}

#[test]
fn sweep_groups_trials_by_policy() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.txt");
    fs::write(&data, small_corpus()).unwrap();
    let base = ExperimentConfig {
        dataset_path: Some(data),
        session_override: Some(80),
        n_model_updates: 2,
        trial_seed: 100,
        ..ExperimentConfig::default()
    };
    let policies = [PolicySpec::new(PolicyKind::Bm25), PolicySpec::new(PolicyKind::Ucbrank)];
    let runs = harness::run_sweep(&base, &policies, 3).unwrap();
    assert_eq!(runs.len(), 2);
    for (spec, outputs) in policies.iter().zip(&runs) {
        let seeds: Vec<u64> = outputs.iter().map(|o| o.report.config.trial_seed).collect();
        assert_eq!(seeds, vec![100, 101, 102]);
        let reports: Vec<RunReport> = outputs.iter().map(|o| o.report.clone()).collect();
        let summary = aggregate_trials(&reports).unwrap();
        assert_eq!(summary.policy, spec.label());
        assert_eq!(summary.trials, 3);
    }
    let mixed = [runs[0][0].report.clone(), runs[1][0].report.clone()];
    assert!(aggregate_trials(&mixed).is_err());
}

#[test]
fn cli_subcommands() {
    let bin = env!("CARGO_BIN_EXE_ebrank");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.txt");
    fs::write(&data, small_corpus()).unwrap();
    let out = dir.path().join("run");

    let run = Command::new(bin)
        .args(["run", "--policy", "cf_topk+behav", "--sessions", "60", "--dataset"])
        .arg(&data)
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = RunReport::from_toml(&String::from_utf8(run.stdout).unwrap()).unwrap();
    assert_eq!(report.online_sessions, 60);

    let eval = Command::new(bin).arg("eval").arg(out.join("steps.csv")).output().unwrap();
    assert!(eval.status.success());
    let text = String::from_utf8(eval.stdout).unwrap();
    assert!(text.contains(&format!("cum_ndcg = {}", report.cum_ndcg)), "{text}");

    let inspect = Command::new(bin)
        .args(["inspect", "--behavior"])
        .arg(out.join("cf.ckpt"))
        .output()
        .unwrap();
    assert!(inspect.status.success());
    let text = String::from_utf8(inspect.stdout).unwrap();
    let behavior = report.exploitation.unwrap().behavior_ratio;
    assert!(text.contains(&format!("behavior\t{behavior:.6}")), "{text}");

    let sweep = Command::new(bin)
        .args(["sweep", "--policies", "bm25,ebrank", "--trials", "2", "--sessions", "40", "--dataset"])
        .arg(&data)
        .output()
        .unwrap();
    assert!(sweep.status.success(), "{}", String::from_utf8_lossy(&sweep.stderr));
    let text = String::from_utf8(sweep.stdout).unwrap();
    assert!(text.starts_with("policy,metric,mean,std\n"));
    assert!(text.contains("ebrank,cum_ndcg,"));

    for bad in [vec!["run", "--policy", "bm25+behav"], vec!["run", "--eta", "0"], vec!["eval", "/no/such/file"]] {
        let st = Command::new(bin).args(&bad).output().unwrap();
        assert!(!st.status.success(), "{bad:?}");
        assert!(String::from_utf8_lossy(&st.stderr).starts_with("error:"));
    }
}
