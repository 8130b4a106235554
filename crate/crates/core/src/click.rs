//! Simulated users: biased clicks and the cold-start item-arrival process.
//!
//! A user examines rank `i` with probability `1 / log2(i + 1)` when `i <= k_s`
//! and never below the cutoff. An examined item is clicked with its relevance
//! probability, independently of the other ranks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::letor::{ItemId, QueryRecord};
use crate::policy::RankedList;
use crate::{Error, Result};

/// Default lowest rank users examine.
pub const DEFAULT_CUTOFF: usize = 5;

/// Floor of the label-to-relevance mapping.
pub const NOISE_FLOOR: f64 = 0.1;

/// `1/log2(rank + 1)` for `1 <= rank <= k_s`, zero otherwise.
pub fn examination_probability(rank: usize, k_s: usize) -> f64 {
    if rank == 0 || rank > k_s {
        0.0
    } else {
        1.0 / ((rank + 1) as f64).log2()
    }
}

/// Maps a graded label to a click-relevance probability in `[0.1, 1]`.
pub fn relevance_probability(y: u32, y_max: u32) -> Result<f64> {
    if y_max == 0 {
        return Err(Error::invalid("y_max must be at least 1"));
    }
    if y > y_max {
        return Err(Error::invalid(format!("label {y} exceeds y_max {y_max}")));
    }
    let gain = (2f64.powi(y as i32) - 1.0) / (2f64.powi(y_max as i32) - 1.0);
    Ok(NOISE_FLOOR + (1.0 - NOISE_FLOOR) * gain)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExaminationModel {
    k_s: usize,
}

impl ExaminationModel {
    pub fn new(k_s: usize) -> Result<Self> {
        if k_s == 0 {
            return Err(Error::invalid("examination cutoff must be at least 1"));
        }
        Ok(ExaminationModel { k_s })
    }

    pub fn cutoff(&self) -> usize {
        self.k_s
    }

    /// Examination probability at a 1-based rank.
    pub fn probability(&self, rank: usize) -> f64 {
        examination_probability(rank, self.k_s)
    }

    /// Probabilities for ranks `1..=len`.
    pub fn curve(&self, len: usize) -> Vec<f64> {
        (1..=len).map(|r| self.probability(r)).collect()
    }

    /// Smallest nonzero examination probability.
    pub fn p_min(&self) -> f64 {
        self.probability(self.k_s)
    }
}

impl Default for ExaminationModel {
    fn default() -> Self {
        ExaminationModel { k_s: DEFAULT_CUTOFF }
    }
}

/// Label-to-probability mapping bound to a dataset's `y_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelevanceModel {
    pub y_max: u32,
}

impl RelevanceModel {
    pub fn new(y_max: u32) -> Result<Self> {
        relevance_probability(0, y_max)?;
        Ok(RelevanceModel { y_max })
    }

    pub fn probability(&self, y: u32) -> Result<f64> {
        relevance_probability(y, self.y_max)
    }

    pub fn for_query(&self, query: &QueryRecord) -> Result<Vec<f64>> {
        query.items.iter().map(|i| self.probability(i.label)).collect()
    }
}

/// Samples one click per rank. `rel_probs[i]` is the relevance of the item
/// shown at rank `i + 1`. Ranks with zero examination probability never draw.
pub fn sample_clicks<R: Rng + ?Sized>(
    ranked: &RankedList,
    rel_probs: &[f64],
    rng: &mut R,
) -> Vec<bool> {
    debug_assert_eq!(ranked.items.len(), rel_probs.len());
    ranked
        .exam_probs
        .iter()
        .zip(rel_probs)
        .map(|(&p, &r)| p > 0.0 && rng.random::<f64>() < p * r)
        .collect()
}

/// Active and masked candidates of one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePool {
    pub active: Vec<ItemId>,
    pub masked: Vec<ItemId>,
}

impl CandidatePool {
    /// Every item of the query active, nothing masked.
    pub fn all_active(query: &QueryRecord) -> Self {
        CandidatePool {
            active: query.items.iter().map(|i| i.item_id).collect(),
            masked: Vec::new(),
        }
    }
}

/// Draws the initial candidate set: `min(|items|, U{lo..=hi})` random items.
pub fn init_candidates<R: Rng + ?Sized>(
    query: &QueryRecord,
    initial_min: usize,
    initial_max: usize,
    rng: &mut R,
) -> CandidatePool {
    let target = rng.random_range(initial_min..=initial_max);
    let mut ids: Vec<ItemId> = query.items.iter().map(|i| i.item_id).collect();
    ids.shuffle(rng);
    let masked = ids.split_off(target.min(ids.len()));
    ids.sort_unstable();
    CandidatePool {
        active: ids,
        masked,
    }
}

/// Per-query candidate pools plus the entry probability `eta`.
#[derive(Debug, Clone)]
pub struct ArrivalProcess {
    eta: f64,
    pools: Vec<CandidatePool>,
}

impl ArrivalProcess {
    pub const INITIAL_MIN: usize = 5;
    pub const INITIAL_MAX: usize = 10;

    /// Initializes one pool per query, in the order given.
    pub fn new<'a, R, I>(eta: f64, queries: I, rng: &mut R) -> Result<Self>
    where
        R: Rng + ?Sized,
        I: IntoIterator<Item = &'a QueryRecord>,
    {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}")));
        }
        let pools = queries
            .into_iter()
            .map(|q| init_candidates(q, Self::INITIAL_MIN, Self::INITIAL_MAX, rng))
            .collect();
        Ok(ArrivalProcess { eta, pools })
    }

    pub fn from_pools(eta: f64, pools: Vec<CandidatePool>) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}")));
        }
        Ok(ArrivalProcess { eta, pools })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn pool(&self, slot: usize) -> &CandidatePool {
        &self.pools[slot]
    }

    pub fn active(&self, slot: usize) -> &[ItemId] {
        &self.pools[slot].active
    }

    /// With probability `eta`, moves one uniformly chosen masked item of the
    /// query in `slot` into its active set.
    pub fn step_arrival<R: Rng + ?Sized>(&mut self, slot: usize, rng: &mut R) -> Option<ItemId> {
        let pool = &mut self.pools[slot];
        if pool.masked.is_empty() {
            return None;
        }
        if rng.random::<f64>() >= self.eta {
            return None;
        }
        let pick = rng.random_range(0..pool.masked.len());
        let item = pool.masked.swap_remove(pick);
        pool.active.push(item);
        Some(item)
    }
}

/// Number of simulated sessions: `⌊queries · (avg_docs − 5) / eta⌋`, never negative.
pub fn session_count(num_queries: usize, avg_docs: f64, eta: f64) -> Result<usize> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta must be positive"));
    }
    let raw = num_queries as f64 * (avg_docs - ArrivalProcess::INITIAL_MIN as f64) / eta;
    // Tolerance absorbs representation error in eta, e.g. 0.1.
    Ok((raw + 1e-9).floor().max(0.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::letor::{FeatureVector, ItemRecord, QueryId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn query(n: usize) -> QueryRecord {
        QueryRecord {
            query_id: QueryId("q".into()),
            items: (0..n)
                .map(|i| ItemRecord {
                    item_id: ItemId(i as u32),
                    label: 0,
                    features: FeatureVector::new(vec![0.0]),
                    comment: None,
                })
                .collect(),
        }
    }

    fn ranked(n: usize, k_s: usize) -> RankedList {
        let exam = ExaminationModel::new(k_s).unwrap();
        RankedList::new((0..n as u32).map(ItemId).collect(), &exam)
    }

    #[test]
    fn relevance_mapping() {
        assert_eq!(relevance_probability(0, 4).unwrap(), 0.1);
        assert_eq!(relevance_probability(2, 2).unwrap(), 1.0);
        assert!((relevance_probability(2, 4).unwrap() - 0.28).abs() < 1e-12);
        assert!(relevance_probability(3, 2).is_err());
        assert!(relevance_probability(0, 0).is_err());
    }

    #[test]
    fn examination_curve() {
        assert_eq!(examination_probability(1, 5), 1.0);
        assert_eq!(examination_probability(3, 5), 0.5);
        assert_eq!(examination_probability(6, 5), 0.0);
        let curve = ExaminationModel::default().curve(8);
        assert!(curve[..5].windows(2).all(|w| w[0] > w[1]));
        assert!(curve[5..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn certain_click_and_cutoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let list = ranked(6, 5);
        for _ in 0..100 {
            let clicks = sample_clicks(&list, &[1.0; 6], &mut rng);
            assert!(clicks[0]);
            assert!(!clicks[5]);
        }
    }

    #[test]
    fn click_rate_matches_product_of_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let list = ranked(3, 5);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_clicks(&list, &[0.5, 0.5, 0.5], &mut rng)[2])
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.25).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn click_frequencies_per_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let list = ranked(5, 5);
        let rel = [0.9, 0.7, 0.5, 0.3, 0.2];
        let n = 20_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            for (c, hit) in counts.iter_mut().zip(sample_clicks(&list, &rel, &mut rng)) {
                *c += hit as usize;
            }
        }
        for i in 0..5 {
            let expected = list.exam_probs[i] * rel[i];
            let freq = counts[i] as f64 / n as f64;
            assert!((freq - expected).abs() <= 4.0 * (expected / n as f64).sqrt());
        }
    }

    #[test]
    fn initial_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let pool = init_candidates(&query(41), 5, 10, &mut rng);
            assert!((5..=10).contains(&pool.active.len()));
            assert_eq!(pool.active.len() + pool.masked.len(), 41);
        }
        let small = init_candidates(&query(3), 5, 10, &mut rng);
        assert_eq!(small.active.len(), 3);
        assert!(small.masked.is_empty());

        let a = init_candidates(&query(41), 5, 10, &mut ChaCha8Rng::seed_from_u64(9));
        let b = init_candidates(&query(41), 5, 10, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn arrival_with_certain_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = query(20);
        let mut proc = ArrivalProcess::new(1.0, [&q], &mut rng).unwrap();
        let before = proc.active(0).len();
        let entered = proc.step_arrival(0, &mut rng).unwrap();
        assert_eq!(proc.active(0).len(), before + 1);
        assert!(!proc.pool(0).masked.contains(&entered));

        let mut all = ArrivalProcess::from_pools(1.0, vec![CandidatePool::all_active(&q)]).unwrap();
        assert_eq!(all.step_arrival(0, &mut rng), None);
    }

    #[test]
    fn arrival_rate_is_binomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let q = query(20_000);
        let pool = CandidatePool {
            active: vec![],
            masked: q.items.iter().map(|i| i.item_id).collect(),
        };
        let mut proc = ArrivalProcess::from_pools(0.5, vec![pool]).unwrap();
        let entered = (0..10_000)
            .filter(|_| proc.step_arrival(0, &mut rng).is_some())
            .count();
        assert!((entered as i64 - 5000).abs() <= 150, "entered {entered}");
        let mut seen = proc.active(0).to_vec();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), entered);
    }

    #[test]
    fn bad_eta_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(ArrivalProcess::new(0.0, [&query(3)], &mut rng).is_err());
        assert!(ArrivalProcess::new(1.5, [&query(3)], &mut rng).is_err());
    }

    #[test]
    fn session_counts() {
        assert_eq!(session_count(1643, 41.0, 1.0).unwrap(), 59148);
        assert_eq!(session_count(9835, 122.0, 1.0).unwrap(), 1_150_695);
        assert_eq!(session_count(100, 5.0, 1.0).unwrap(), 0);
        assert_eq!(session_count(1643, 41.0, 0.1).unwrap(), 591_480);
        assert!(session_count(10, 10.0, 0.0).is_err());
    }
}
