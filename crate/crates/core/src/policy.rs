//! Ranking policies.
//!
//! EBRank sorts candidates by `posterior_mean + epsilon * marginal_certainty`.
//! The baselines are BM25, three counterfactual (IPS-trained) linear rankers
//! that differ only in how they build lists, and a UCB ranker.
//!
//! Counterfactual models optionally take one behavior feature, the click-rate
//! estimate `C/n`, concatenated after the static features; it defaults to 0
//! for items never shown.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{BehaviorStats, ClickCounts, StatsMap};
use crate::click::ExaminationModel;
use crate::letor::{FeatureVector, ItemId, QueryRecord};
use crate::numeric::{sigmoid, CompensatedSum};
use crate::prior::{self, PriorModel, TrainConfig};
use crate::{Error, Result};

/// Clamp applied to predicted probabilities inside the counterfactual loss.
pub const PROB_CLAMP: f64 = 1e-7;

/// An ordered presentation with the examination probability of every rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub items: Vec<ItemId>,
    pub exam_probs: Vec<f64>,
    pub cutoff: usize,
}

impl RankedList {
    pub fn new(items: Vec<ItemId>, exam: &ExaminationModel) -> Self {
        let exam_probs = exam.curve(items.len());
        RankedList {
            items,
            exam_probs,
            cutoff: exam.cutoff(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `(item, examination probability)` for ranks users can examine.
    pub fn examined(&self) -> impl Iterator<Item = (ItemId, f64)> + '_ {
        self.items
            .iter()
            .copied()
            .zip(self.exam_probs.iter().copied())
            .filter(|&(_, p)| p > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Ebrank,
    Bm25,
    CfTopk,
    CfRandomk,
    CfEpsilon,
    Ucbrank,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Ebrank,
        PolicyKind::Bm25,
        PolicyKind::CfTopk,
        PolicyKind::CfRandomk,
        PolicyKind::CfEpsilon,
        PolicyKind::Ucbrank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ebrank => "ebrank",
            PolicyKind::Bm25 => "bm25",
            PolicyKind::CfTopk => "cf_topk",
            PolicyKind::CfRandomk => "cf_randomk",
            PolicyKind::CfEpsilon => "cf_epsilon",
            PolicyKind::Ucbrank => "ucbrank",
        }
    }

    pub fn is_counterfactual(self) -> bool {
        matches!(
            self,
            PolicyKind::CfTopk | PolicyKind::CfRandomk | PolicyKind::CfEpsilon
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPolicy(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// EBRank exploration coefficient.
    #[serde(default)]
    pub epsilon: f64,
    /// Counterfactual policies: concatenate the `C/n` behavior feature.
    #[serde(default)]
    pub use_behavior: bool,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        PolicySpec {
            kind,
            epsilon: 0.0,
            use_behavior: false,
        }
    }

    pub fn ebrank(epsilon: f64) -> Self {
        PolicySpec {
            epsilon,
            ..Self::new(PolicyKind::Ebrank)
        }
    }

    pub fn counterfactual(kind: PolicyKind, use_behavior: bool) -> Self {
        PolicySpec {
            use_behavior,
            ..Self::new(kind)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon must be a nonnegative number"));
        }
        Ok(())
    }

    /// Short name used in CSV output, e.g. `cf_topk+behav`.
    pub fn label(&self) -> String {
        if self.kind.is_counterfactual() && self.use_behavior {
            format!("{}+behav", self.kind)
        } else {
            self.kind.to_string()
        }
    }

    /// Whether the counterfactual model of this policy reads the behavior feature.
    pub fn cf_reads_behavior(&self) -> bool {
        self.kind.is_counterfactual() && self.use_behavior
    }
}

/// EBRank ranking score.
pub fn score_ebrank(stats: &BehaviorStats, epsilon: f64) -> f64 {
    stats.posterior_mean() + epsilon * stats.marginal_certainty()
}

/// Sorts by descending score, ties by ascending item id, and keeps the top `k`.
pub fn rank_items(mut scores: Vec<(ItemId, f64)>, k: usize, exam: &ExaminationModel) -> Result<RankedList> {
    if k == 0 {
        return Err(Error::invalid("ranked list length must be positive"));
    }
    if let Some((id, s)) = scores.iter().find(|(_, s)| !s.is_finite()) {
        return Err(Error::invalid(format!("non-finite score {s} for item {id}")));
    }
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scores.truncate(k);
    Ok(RankedList::new(
        scores.into_iter().map(|(id, _)| id).collect(),
        exam,
    ))
}

/// Linear click model over `[static features ‖ C/n]`, trained with an
/// IPS-weighted pointwise cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct CfModel {
    /// `feature_count + 1` weights; the last one multiplies the behavior feature.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub use_behavior: bool,
}

impl CfModel {
    pub fn new(feature_count: usize, use_behavior: bool) -> Self {
        CfModel {
            weights: vec![0.0; feature_count + 1],
            bias: 0.0,
            use_behavior,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.weights.len() - 1
    }

    /// Behavior feature for an item: `C/n`, or 0 when never shown.
    pub fn behavior_feature(counts: &ClickCounts) -> f64 {
        counts.ips_rate().unwrap_or(0.0)
    }

    pub fn logit(&self, x: &FeatureVector, behavior: f64) -> Result<f64> {
        let fc = self.feature_count();
        if x.len() != fc {
            return Err(Error::DimensionMismatch {
                expected: fc,
                got: x.len(),
            });
        }
        let b = if self.use_behavior { behavior } else { 0.0 };
        Ok(x.dot(&self.weights[..fc]) + self.weights[fc] * b + self.bias)
    }

    /// Predicted click-relevance probability `σ(w·[x ‖ b] + bias)`.
    pub fn predict(&self, x: &FeatureVector, behavior: f64) -> Result<f64> {
        Ok(sigmoid(self.logit(x, behavior)?))
    }

    pub fn to_checkpoint(&self) -> String {
        PriorModel {
            weights: self.weights.clone(),
            bias: self.bias,
            beta_fixed: 1.0,
        }
        .to_checkpoint()
    }

    pub fn from_checkpoint(text: &str, use_behavior: bool) -> Result<Self> {
        let (bias, weights) = prior::parse_linear_checkpoint(text)?;
        if weights.is_empty() {
            return Err(Error::invalid("counterfactual checkpoint has no weights"));
        }
        Ok(CfModel {
            weights,
            bias,
            use_behavior,
        })
    }
}

/// IPS cross-entropy of one impression at logit `score`:
/// `(c/p)·(−ln σ) + (1 − c/p)·(−ln(1 − σ))`, `σ` clamped to `[1e-7, 1 − 1e-7]`.
pub fn cf_pointwise_loss(score: f64, clicked: bool, p_rank: f64) -> f64 {
    let w = if clicked { 1.0 / p_rank } else { 0.0 };
    let s = sigmoid(score).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -w * s.ln() - (1.0 - w) * (1.0 - s).ln()
}

/// Derivative of [`cf_pointwise_loss`] in the logit: `σ − c/p`.
pub fn cf_pointwise_grad(score: f64, clicked: bool, p_rank: f64) -> f64 {
    let w = if clicked { 1.0 / p_rank } else { 0.0 };
    sigmoid(score) - w
}

/// One logged impression within the examined prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct CfImpression {
    pub features: FeatureVector,
    pub behavior: f64,
    pub clicked: bool,
    pub p_rank: f64,
}

/// Summed IPS loss over impressions.
pub fn cf_loss(model: &CfModel, impressions: &[CfImpression]) -> Result<f64> {
    let mut total = CompensatedSum::default();
    for imp in impressions {
        if !(imp.p_rank > 0.0) {
            return Err(Error::invalid("impression with zero examination probability"));
        }
        total.add(cf_pointwise_loss(
            model.logit(&imp.features, imp.behavior)?,
            imp.clicked,
            imp.p_rank,
        ));
    }
    Ok(total.value())
}

/// Impressions of one (query, item) pair folded together. The IPS loss is
/// linear in `c/p`, so `n` impressions with click sum `C` contribute
/// `C·(−ln σ) + (n − C)·(−ln(1 − σ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfExample {
    pub features: FeatureVector,
    pub behavior: f64,
    pub n: u64,
    pub clicks: f64,
}

/// Loss of aggregated examples, summed. Equals [`cf_loss`] on the impressions
/// they were built from.
pub fn cf_aggregate_loss(model: &CfModel, examples: &[CfExample]) -> Result<f64> {
    let mut total = CompensatedSum::default();
    for ex in examples {
        let s = sigmoid(model.logit(&ex.features, ex.behavior)?).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        total.add(-ex.clicks * s.ln() - (ex.n as f64 - ex.clicks) * (1.0 - s).ln());
    }
    Ok(total.value())
}

/// Mean loss per impression and its gradient `(d/dw, d/dbias)`.
pub fn cf_objective(model: &CfModel, examples: &[CfExample]) -> Result<(f64, Vec<f64>, f64)> {
    let fc = model.feature_count();
    let mut grad_w = vec![CompensatedSum::default(); fc + 1];
    let mut grad_b = CompensatedSum::default();
    let mut impressions = 0u64;
    for ex in examples {
        let s = sigmoid(model.logit(&ex.features, ex.behavior)?);
        let g = ex.n as f64 * s - ex.clicks;
        for (acc, x) in grad_w.iter_mut().zip(ex.features.as_slice()) {
            acc.add(g * x);
        }
        if model.use_behavior {
            grad_w[fc].add(g * ex.behavior);
        }
        grad_b.add(g);
        impressions += ex.n;
    }
    if impressions == 0 {
        return Ok((0.0, vec![0.0; fc + 1], 0.0));
    }
    let scale = 1.0 / impressions as f64;
    let loss = cf_aggregate_loss(model, examples)? * scale;
    Ok((
        loss,
        grad_w.iter().map(|g| g.value() * scale).collect(),
        grad_b.value() * scale,
    ))
}

/// Full-batch gradient descent on [`cf_objective`], keeping the best iterate.
pub fn train_cf(model: &CfModel, examples: &[CfExample], config: &TrainConfig) -> Result<CfModel> {
    if !(config.learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    if examples.iter().all(|e| e.n == 0) {
        log::warn!("counterfactual training skipped: no impressions");
        return Ok(model.clone());
    }
    let mut current = model.clone();
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    for epoch in 0..=config.epochs {
        let (loss, gw, gb) = cf_objective(&current, examples)?;
        if loss < best_loss {
            best_loss = loss;
            best = current.clone();
        }
        if epoch == config.epochs {
            break;
        }
        for (w, g) in current.weights.iter_mut().zip(&gw) {
            *w -= config.learning_rate * g;
        }
        current.bias -= config.learning_rate * gb;
    }
    Ok(best)
}

/// Everything a policy may consult when ranking one query.
#[derive(Debug, Clone, Copy)]
pub struct QueryView<'a> {
    pub query: &'a QueryRecord,
    pub active: &'a [ItemId],
    pub stats: &'a StatsMap,
    /// Sessions served for this query so far, including the current one.
    pub sessions_served: u64,
}

/// Trained models shared by all policies; each policy reads what it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    pub prior: PriorModel,
    pub cf: CfModel,
    pub bm25_feature_index: usize,
}

impl Models {
    fn bm25(&self, x: &FeatureVector) -> Result<f64> {
        x.get(self.bm25_feature_index)
            .ok_or_else(|| Error::invalid("BM25 column missing from features"))
    }

    fn ebrank_stats(&self, view: &QueryView<'_>, id: ItemId, warm: bool) -> Result<BehaviorStats> {
        let (alpha, beta) = self.prior.forward(&view.query.item(id).features)?;
        Ok(if warm {
            view.stats.stats(&view.query.query_id, id, alpha, beta)
        } else {
            BehaviorStats::prior(alpha, beta)
        })
    }

    fn cf_score(&self, view: &QueryView<'_>, id: ItemId, warm: bool) -> Result<f64> {
        let behavior = if warm {
            CfModel::behavior_feature(&view.stats.get(&view.query.query_id, id))
        } else {
            0.0
        };
        self.cf.predict(&view.query.item(id).features, behavior)
    }

    fn ucb_estimate(&self, view: &QueryView<'_>, id: ItemId, warm: bool) -> Result<f64> {
        let counts = view.stats.get(&view.query.query_id, id);
        match counts.ips_rate() {
            Some(rate) if warm => Ok(rate),
            _ => self.cf.predict(&view.query.item(id).features, 0.0),
        }
    }
}

/// UCB1 exploration bonus `sqrt(2 ln t / max(n, 1))`.
pub fn ucb_bonus(sessions_served: u64, n: u64) -> f64 {
    let t = sessions_served.max(1) as f64;
    (2.0 * t.ln() / n.max(1) as f64).sqrt()
}

/// Builds the list shown to the user. Every active candidate is ranked.
pub fn policy_rank<R: Rng + ?Sized>(
    spec: &PolicySpec,
    view: &QueryView<'_>,
    models: &Models,
    exam: &ExaminationModel,
    rng: &mut R,
) -> Result<RankedList> {
    if view.active.is_empty() {
        return Err(Error::invalid(format!(
            "query {} has no active candidates",
            view.query.query_id
        )));
    }
    let k = view.active.len();
    let scored = |f: &dyn Fn(ItemId) -> Result<f64>| -> Result<Vec<(ItemId, f64)>> {
        view.active.iter().map(|&id| Ok((id, f(id)?))).collect()
    };

    let scores = match spec.kind {
        PolicyKind::Ebrank => scored(&|id| {
            Ok(score_ebrank(&models.ebrank_stats(view, id, true)?, spec.epsilon))
        })?,
        PolicyKind::Bm25 => scored(&|id| models.bm25(&view.query.item(id).features))?,
        PolicyKind::CfTopk => scored(&|id| models.cf_score(view, id, true))?,
        PolicyKind::CfRandomk => {
            let mut items = view.active.to_vec();
            items.sort_unstable();
            items.shuffle(rng);
            return Ok(RankedList::new(items, exam));
        }
        PolicyKind::CfEpsilon => {
            let mut out = scored(&|id| models.cf_score(view, id, true))?;
            for (_, s) in out.iter_mut() {
                *s += rng.random::<f64>();
            }
            out
        }
        PolicyKind::Ucbrank => scored(&|id| {
            let n = view.stats.get(&view.query.query_id, id).n;
            Ok(models.ucb_estimate(view, id, true)? + ucb_bonus(view.sessions_served, n))
        })?,
    };
    rank_items(scores, k, exam)
}

/// Exploration-free scores for offline evaluation. `warm` selects whether the
/// accumulated behavior statistics are visible.
pub fn offline_scores(
    spec: &PolicySpec,
    view: &QueryView<'_>,
    models: &Models,
    warm: bool,
) -> Result<Vec<(ItemId, f64)>> {
    view.active
        .iter()
        .map(|&id| {
            let s = match spec.kind {
                PolicyKind::Ebrank => models.ebrank_stats(view, id, warm)?.posterior_mean(),
                PolicyKind::Bm25 => models.bm25(&view.query.item(id).features)?,
                PolicyKind::CfTopk | PolicyKind::CfRandomk | PolicyKind::CfEpsilon => {
                    models.cf_score(view, id, warm)?
                }
                PolicyKind::Ucbrank => models.ucb_estimate(view, id, warm)?,
            };
            Ok((id, s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::letor::{ItemRecord, QueryId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exam() -> ExaminationModel {
        ExaminationModel::default()
    }

    fn ids(list: &RankedList) -> Vec<u32> {
        list.items.iter().map(|i| i.0).collect()
    }

    fn query(features: &[Vec<f64>]) -> QueryRecord {
        QueryRecord {
            query_id: QueryId("q".into()),
            items: features
                .iter()
                .enumerate()
                .map(|(i, f)| ItemRecord {
                    item_id: ItemId(i as u32),
                    label: 0,
                    features: FeatureVector::new(f.clone()),
                    comment: None,
                })
                .collect(),
        }
    }

    fn models(fc: usize) -> Models {
        Models {
            prior: PriorModel::new(fc, 5.0).unwrap(),
            cf: CfModel::new(fc, true),
            bm25_feature_index: 0,
        }
    }

    #[test]
    fn ebrank_score_examples() {
        let s = BehaviorStats {
            alpha: 1.0,
            beta: 5.0,
            n: 4,
            clicks: 2.0,
            exposure: 2.0,
        };
        assert_eq!(score_ebrank(&s, 0.0), s.posterior_mean());
        assert!((score_ebrank(&s, 2.0) - 0.309375).abs() < 1e-15);
        let fresh = BehaviorStats::prior(1.0, 5.0);
        assert!((score_ebrank(&fresh, 1.0) - (1.0 / 6.0 + 1.0 / 216.0)).abs() < 1e-15);
    }

    #[test]
    fn rank_items_sorts_and_truncates() {
        let scores = vec![(ItemId(0), 0.2), (ItemId(1), 0.9), (ItemId(2), 0.5)];
        assert_eq!(ids(&rank_items(scores.clone(), 2, &exam()).unwrap()), vec![1, 2]);
        let tied = vec![(ItemId(1), 0.5), (ItemId(0), 0.5)];
        assert_eq!(ids(&rank_items(tied, 2, &exam()).unwrap()), vec![0, 1]);
        let full = rank_items(scores.clone(), 10, &exam()).unwrap();
        assert_eq!(ids(&full), vec![1, 2, 0]);
        assert_eq!(full.exam_probs, exam().curve(3));
        assert!(rank_items(scores, 0, &exam()).is_err());
        assert!(rank_items(vec![(ItemId(0), f64::NAN)], 1, &exam()).is_err());
    }

    #[test]
    fn policy_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert!(matches!("dbgd".parse::<PolicyKind>(), Err(Error::UnknownPolicy(_))));
        assert_eq!(PolicySpec::counterfactual(PolicyKind::CfTopk, true).label(), "cf_topk+behav");
        assert_eq!(PolicySpec::ebrank(3.0).label(), "ebrank");
    }

    #[test]
    fn pointwise_loss_values() {
        let ln2 = std::f64::consts::LN_2;
        assert!((cf_pointwise_loss(0.0, true, 1.0) - ln2).abs() < 1e-12);
        assert!((cf_pointwise_loss(0.0, false, 0.5) - ln2).abs() < 1e-12);
        for &(s, c, p) in &[(0.3, true, 0.63), (-1.2, false, 1.0), (2.0, true, 0.387)] {
            let h = 1e-6;
            let fd = (cf_pointwise_loss(s + h, c, p) - cf_pointwise_loss(s - h, c, p)) / (2.0 * h);
            assert!((fd - cf_pointwise_grad(s, c, p)).abs() < 1e-6);
        }
    }

    #[test]
    fn ips_gradient_is_unbiased_for_full_information_gradient() {
        // Full-information loss with label R has logit gradient σ(s) − R.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let score = (0.2f64 / 0.8).ln(); // σ = 0.2
        let rel = 0.9;
        let ps = [1.0, 1.0 / 3f64.log2()];
        let n = 100_000;
        let mut acc = 0.0;
        for i in 0..n {
            let p = ps[i % 2];
            let clicked = rng.random::<f64>() < p * rel;
            acc += cf_pointwise_grad(score, clicked, p);
        }
        let mc = acc / n as f64;
        let full = sigmoid(score) - rel;
        assert!(((mc - full) / full).abs() < 0.01, "mc {mc} full {full}");
    }

    #[test]
    fn aggregated_loss_equals_impression_loss() {
        let model = CfModel {
            weights: vec![0.4, -0.3, 1.5],
            bias: 0.1,
            use_behavior: true,
        };
        let x = FeatureVector::new(vec![0.2, 0.7]);
        let log = [(true, 1.0), (false, 0.63), (true, 0.5), (false, 0.387), (true, 0.387)];
        let mut counts = ClickCounts::default();
        for &(c, p) in &log {
            counts.record(c, p).unwrap();
        }
        let behavior = counts.ips_rate().unwrap();
        let impressions: Vec<CfImpression> = log
            .iter()
            .map(|&(clicked, p_rank)| CfImpression {
                features: x.clone(),
                behavior,
                clicked,
                p_rank,
            })
            .collect();
        let agg = [CfExample {
            features: x,
            behavior,
            n: counts.n,
            clicks: counts.clicks,
        }];
        let a = cf_loss(&model, &impressions).unwrap();
        let b = cf_aggregate_loss(&model, &agg).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn cf_objective_gradient_matches_finite_differences() {
        let examples = vec![
            CfExample { features: FeatureVector::new(vec![0.1, 0.9]), behavior: 0.4, n: 10, clicks: 3.0 },
            CfExample { features: FeatureVector::new(vec![0.8, 0.3]), behavior: 1.3, n: 4, clicks: 5.2 },
            CfExample { features: FeatureVector::new(vec![0.5, 0.5]), behavior: 0.0, n: 7, clicks: 0.0 },
        ];
        let model = CfModel { weights: vec![0.3, -0.5, 0.8], bias: -0.1, use_behavior: true };
        let (_, gw, gb) = cf_objective(&model, &examples).unwrap();
        let h = 1e-6;
        for j in 0..4 {
            let (mut up, mut down) = (model.clone(), model.clone());
            if j < 3 {
                up.weights[j] += h;
                down.weights[j] -= h;
            } else {
                up.bias += h;
                down.bias -= h;
            }
            let fd = (cf_objective(&up, &examples).unwrap().0 - cf_objective(&down, &examples).unwrap().0) / (2.0 * h);
            let an = if j < 3 { gw[j] } else { gb };
            assert!((fd - an).abs() < 1e-6, "j={j}: {fd} vs {an}");
        }
    }

    #[test]
    fn behavior_weight_stays_zero_without_behavior() {
        let examples = vec![CfExample {
            features: FeatureVector::new(vec![1.0]),
            behavior: 0.9,
            n: 10,
            clicks: 9.0,
        }];
        let out = train_cf(&CfModel::new(1, false), &examples, &TrainConfig::default()).unwrap();
        assert_eq!(out.weights[1], 0.0);
        assert!(out.weights[0] > 0.0);
    }

    #[test]
    fn bm25_policy_sorts_by_bm25_column() {
        let q = query(&[vec![0.3, 9.0], vec![0.9, 0.0], vec![0.1, 5.0]]);
        let active = [ItemId(0), ItemId(1), ItemId(2)];
        let stats = StatsMap::new();
        let view = QueryView { query: &q, active: &active, stats: &stats, sessions_served: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let list = policy_rank(&PolicySpec::new(PolicyKind::Bm25), &view, &models(2), &exam(), &mut rng).unwrap();
        assert_eq!(ids(&list), vec![1, 0, 2]);
    }

    #[test]
    fn ebrank_without_exploration_orders_by_clicks() {
        let q = query(&[vec![0.5], vec![0.5], vec![0.5]]);
        let active = [ItemId(0), ItemId(1), ItemId(2)];
        let mut stats = StatsMap::new();
        let qid = q.query_id.clone();
        for (item, clicks) in [(0u32, 1), (1, 4), (2, 2)] {
            for s in 0..6 {
                stats.record(&qid, ItemId(item), s < clicks, 1.0).unwrap();
            }
        }
        let view = QueryView { query: &q, active: &active, stats: &stats, sessions_served: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let list = policy_rank(&PolicySpec::ebrank(0.0), &view, &models(1), &exam(), &mut rng).unwrap();
        assert_eq!(ids(&list), vec![1, 2, 0]);
    }

    #[test]
    fn random_policy_is_uniform_at_the_top() {
        let q = query(&vec![vec![0.0]; 5]);
        let active: Vec<ItemId> = (0..5).map(ItemId).collect();
        let stats = StatsMap::new();
        let view = QueryView { query: &q, active: &active, stats: &stats, sessions_served: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut top = [0usize; 5];
        let n = 10_000;
        for _ in 0..n {
            let list = policy_rank(&PolicySpec::new(PolicyKind::CfRandomk), &view, &models(1), &exam(), &mut rng).unwrap();
            top[list.items[0].index()] += 1;
        }
        for c in top {
            assert!((c as f64 / n as f64 - 0.2).abs() < 0.015);
        }
    }

    #[test]
    fn deterministic_policies_are_repeatable() {
        let q = query(&[vec![0.3, 0.1], vec![0.6, 0.2], vec![0.2, 0.9], vec![0.4, 0.4]]);
        let active: Vec<ItemId> = (0..4).map(ItemId).collect();
        let stats = StatsMap::new();
        let view = QueryView { query: &q, active: &active, stats: &stats, sessions_served: 3 };
        let mut m = models(2);
        m.prior.weights = vec![1.0, -0.5];
        m.cf.weights = vec![0.2, 0.7, 1.0];
        for kind in [PolicyKind::Ebrank, PolicyKind::Bm25, PolicyKind::CfTopk, PolicyKind::Ucbrank] {
            let spec = PolicySpec { kind, epsilon: 1.0, use_behavior: true };
            let a = policy_rank(&spec, &view, &m, &exam(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            let b = policy_rank(&spec, &view, &m, &exam(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }

    #[test]
    fn empty_candidate_set_is_an_error() {
        let q = query(&[vec![0.0]]);
        let stats = StatsMap::new();
        let view = QueryView { query: &q, active: &[], stats: &stats, sessions_served: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(policy_rank(&PolicySpec::ebrank(1.0), &view, &models(1), &exam(), &mut rng).is_err());
    }

    #[test]
    fn ucb_bonus_shrinks_with_presentations() {
        assert_eq!(ucb_bonus(1, 0), 0.0);
        assert!(ucb_bonus(100, 1) > ucb_bonus(100, 10));
        assert!((ucb_bonus(100, 4) - (2.0 * 100f64.ln() / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cold_scores_ignore_behavior() {
        let q = query(&[vec![0.5], vec![0.5]]);
        let active = [ItemId(0), ItemId(1)];
        let mut stats = StatsMap::new();
        for _ in 0..10 {
            stats.record(&q.query_id, ItemId(1), true, 1.0).unwrap();
        }
        let view = QueryView { query: &q, active: &active, stats: &stats, sessions_served: 1 };
        let mut m = models(1);
        m.cf.weights = vec![0.0, 3.0];
        for kind in [PolicyKind::Ebrank, PolicyKind::CfTopk, PolicyKind::Ucbrank] {
            let spec = PolicySpec { kind, epsilon: 0.0, use_behavior: true };
            let cold = offline_scores(&spec, &view, &m, false).unwrap();
            assert_eq!(cold[0].1, cold[1].1, "{kind}");
            let warm = offline_scores(&spec, &view, &m, true).unwrap();
            assert!(warm[1].1 > warm[0].1, "{kind}");
        }
        // prior mean at zero weights: ln2 / (ln2 + 5)
        let cold = offline_scores(&PolicySpec::ebrank(0.0), &view, &m, false).unwrap();
        let a = std::f64::consts::LN_2 + 1e-6;
        assert!((cold[0].1 - a / (a + 5.0)).abs() < 1e-12);
    }
}
