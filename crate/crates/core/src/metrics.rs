//! Ranking-quality metrics.
//!
//! DCG weights rank `i` by its examination probability `1/log2(i + 1)`, so the
//! gains are relevance probabilities rather than `2^y − 1`.

use std::str::FromStr;

use crate::bayes::StatsMap;
use crate::click::RelevanceModel;
use crate::letor::{Dataset, ItemId};
use crate::policy::{offline_scores, Models, PolicySpec, QueryView};
use crate::{Error, Result};

/// Default evaluation cutoff.
pub const DEFAULT_K_C: usize = 5;
/// Default discount of the cumulative NDCG.
pub const DEFAULT_GAMMA: f64 = 0.995;

fn rank_weight(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// `Σ_{i ≤ k_c} R_i / log2(i + 1)` over relevances given in rank order.
pub fn dcg_at_k(relevances: &[f64], k_c: usize) -> f64 {
    relevances
        .iter()
        .take(k_c)
        .enumerate()
        .map(|(i, r)| r * rank_weight(i + 1))
        .sum()
}

/// DCG of `ranked` over the DCG of the ideal ordering of `all` candidates.
/// Returns 0 when the ideal DCG is 0.
pub fn ndcg_at_k(ranked: &[f64], all: &[f64], k_c: usize) -> f64 {
    let mut ideal = all.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg_at_k(&ideal, k_c);
    if idcg > 0.0 {
        dcg_at_k(ranked, k_c) / idcg
    } else {
        0.0
    }
}

/// `Σ_τ γ^{t−τ} · series[τ]` evaluated at the last step.
pub fn cum_ndcg(series: &[f64], gamma: f64) -> f64 {
    let t = series.len();
    series
        .iter()
        .enumerate()
        .map(|(tau, x)| gamma.powi((t - 1 - tau) as i32) * x)
        .sum()
}

/// Streaming form of [`cum_ndcg`]: `A_t = γ·A_{t−1} + NDCG_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumNdcg {
    gamma: f64,
    value: f64,
    steps: usize,
}

impl CumNdcg {
    pub fn new(gamma: f64) -> Self {
        CumNdcg {
            gamma,
            value: 0.0,
            steps: 0,
        }
    }

    pub fn push(&mut self, ndcg: f64) -> f64 {
        self.value = self.gamma * self.value + ndcg;
        self.steps += 1;
        self.value
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// `|w_j| / Σ_i |w_i|` for every weight.
pub fn exploitation_ratio(weights: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().map(|w| w.abs()).sum();
    if !(total > 0.0) {
        return Err(Error::invalid(
            "exploitation ratio undefined for all-zero weights",
        ));
    }
    Ok(weights.iter().map(|w| w.abs() / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Behavior statistics hidden: every item scored as never shown.
    Cold,
    /// Accumulated behavior statistics visible.
    Warm,
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cold" => Ok(EvalMode::Cold),
            "warm" => Ok(EvalMode::Warm),
            other => Err(Error::invalid(format!("unknown evaluation mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub k_c: usize,
    pub gamma: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            k_c: DEFAULT_K_C,
            gamma: DEFAULT_GAMMA,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self, k_s: usize) -> Result<()> {
        if self.k_c == 0 || self.k_c > k_s {
            return Err(Error::invalid(format!(
                "evaluation cutoff {} must lie in 1..={k_s}",
                self.k_c
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Mean NDCG@k_c over the queries of `dataset`, ranking every item of each
/// query with the policy's exploration-free score.
pub fn evaluate_offline(
    spec: &PolicySpec,
    models: &Models,
    dataset: &Dataset,
    mode: EvalMode,
    stats: &StatsMap,
    k_c: usize,
) -> Result<f64> {
    if dataset.queries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let relevance = RelevanceModel::new(dataset.y_max)?;
    let mut total = 0.0;
    for query in &dataset.queries {
        let rel = relevance.for_query(query)?;
        let all: Vec<ItemId> = query.items.iter().map(|i| i.item_id).collect();
        let view = QueryView {
            query,
            active: &all,
            stats,
            sessions_served: 0,
        };
        let mut scores = offline_scores(spec, &view, models, mode == EvalMode::Warm)?;
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let ranked: Vec<f64> = scores.iter().take(k_c).map(|(id, _)| rel[id.index()]).collect();
        total += ndcg_at_k(&ranked, &rel, k_c);
    }
    Ok(total / dataset.queries.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::letor::{parse_dataset, QueryId};
    use crate::policy::CfModel;
    use crate::prior::PriorModel;
    use proptest::prelude::*;

    #[test]
    fn dcg_examples() {
        assert_eq!(dcg_at_k(&[1.0], 1), 1.0);
        assert!((dcg_at_k(&[1.0, 0.5], 2) - 1.315_464_876_785_729).abs() < 1e-12);
        assert_eq!(dcg_at_k(&[], 5), 0.0);
        assert_eq!(dcg_at_k(&[0.3, 0.9], 1), 0.3);
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_k(&[1.0, 0.5, 0.1], &[0.1, 1.0, 0.5], 3), 1.0);
        assert_eq!(ndcg_at_k(&[0.0, 0.0], &[0.0, 0.0], 2), 0.0);
        let rev = ndcg_at_k(&[0.5, 1.0], &[1.0, 0.5], 2);
        assert!((rev - 0.859_718_699_852_197_2).abs() < 1e-12, "{rev}");
        // ideal over every candidate, not just the shown ones
        assert!(ndcg_at_k(&[0.5], &[0.5, 1.0], 1) < 1.0);
    }

    #[test]
    fn cum_ndcg_examples() {
        assert!((cum_ndcg(&[1.0, 1.0, 1.0], 0.995) - 2.985025).abs() < 1e-12);
        assert_eq!(cum_ndcg(&[0.3, 0.8, 0.4], 0.0), 0.4);
        let ones = vec![1.0; 59148];
        let closed = (1.0 - 0.995f64.powi(59148)) / 0.005;
        assert!((cum_ndcg(&ones, 0.995) - closed).abs() < 1e-9);
        assert!((closed - 200.0).abs() < 1e-9);
    }

    #[test]
    fn streaming_matches_direct_sum() {
        let series: Vec<f64> = (0..100_000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
        let mut s = CumNdcg::new(0.995);
        for &x in &series {
            s.push(x);
        }
        assert!((s.value() - cum_ndcg(&series, 0.995)).abs() < 1e-9);
        assert_eq!(s.steps(), 100_000);
    }

    #[test]
    fn exploitation_ratio_examples() {
        assert_eq!(exploitation_ratio(&[1.0, -1.0, 2.0]).unwrap(), vec![0.25, 0.25, 0.5]);
        assert_eq!(exploitation_ratio(&[7.0]).unwrap(), vec![1.0]);
        assert!(exploitation_ratio(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn metric_config_validation() {
        assert!(MetricConfig::default().validate(5).is_ok());
        assert!(MetricConfig { k_c: 6, gamma: 0.9 }.validate(5).is_err());
        assert!(MetricConfig { k_c: 5, gamma: 1.1 }.validate(5).is_err());
        assert!("tepid".parse::<EvalMode>().is_err());
    }

    fn three_item_dataset() -> Dataset {
        // labels 2, 1, 0 in reverse feature order
        parse_dataset("0 qid:1 1:0.9\n1 qid:1 1:0.5\n2 qid:1 1:0.1\n", 0).unwrap()
    }

    #[test]
    fn warm_evaluation_with_accurate_stats_is_ideal() {
        let ds = three_item_dataset();
        let relevance = RelevanceModel::new(ds.y_max).unwrap();
        let q = &ds.queries[0];
        let mut stats = StatsMap::new();
        for item in &q.items {
            let r = relevance.probability(item.label).unwrap();
            let clicks = (r * 1000.0).round() as usize;
            for s in 0..1000 {
                stats.record(&q.query_id, item.item_id, s < clicks, 1.0).unwrap();
            }
        }
        let models = Models {
            prior: PriorModel::new(1, 5.0).unwrap(),
            cf: CfModel::new(1, true),
            bm25_feature_index: 0,
        };
        let spec = PolicySpec::ebrank(1.0);
        let warm = evaluate_offline(&spec, &models, &ds, EvalMode::Warm, &stats, 5).unwrap();
        assert!((warm - 1.0).abs() < 1e-12);

        // BM25 ranks exactly backwards here and never sees behavior.
        let bm25 = PolicySpec::new(crate::policy::PolicyKind::Bm25);
        let cold = evaluate_offline(&bm25, &models, &ds, EvalMode::Cold, &stats, 5).unwrap();
        let warm = evaluate_offline(&bm25, &models, &ds, EvalMode::Warm, &stats, 5).unwrap();
        assert_eq!(cold, warm);
        assert!(cold < 1.0);
    }

    #[test]
    fn cold_ebrank_follows_prior_mean() {
        let ds = three_item_dataset();
        let mut models = Models {
            prior: PriorModel::new(1, 5.0).unwrap(),
            cf: CfModel::new(1, false),
            bm25_feature_index: 0,
        };
        // prior mean increasing in the feature, i.e. opposite to relevance
        models.prior.weights = vec![4.0];
        let stats = StatsMap::new();
        let spec = PolicySpec::ebrank(0.0);
        let cold = evaluate_offline(&spec, &models, &ds, EvalMode::Cold, &stats, 5).unwrap();
        let q = QueryId("1".into());
        assert!(stats.get(&q, ItemId(0)).n == 0);
        let bm25 = PolicySpec::new(crate::policy::PolicyKind::Bm25);
        let by_feature = evaluate_offline(&bm25, &models, &ds, EvalMode::Cold, &stats, 5).unwrap();
        assert_eq!(cold, by_feature);
    }

    proptest! {
        #[test]
        fn ndcg_is_bounded(rels in prop::collection::vec(0.0f64..1.0, 1..12), k in 1usize..8) {
            let v = ndcg_at_k(&rels, &rels, k);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }

        #[test]
        fn ratios_sum_to_one(w in prop::collection::vec(-10.0f64..10.0, 1..30)) {
            prop_assume!(w.iter().any(|x| *x != 0.0));
            let r = exploitation_ratio(&w).unwrap();
            prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
