//! Behavior statistics and the Beta posterior built on them.
//!
//! For every (query, item) pair we keep the presentation count `n`, the
//! inverse-propensity weighted click sum `C` and the accumulated examination
//! probability (exposure) `E`. Combined with a Beta(`alpha`, `beta`) prior from
//! the prior model they give the posterior mean `(C + α) / (n + α + β)` and the
//! marginal-certainty exploration bonus `mean / (E + α + β)²`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::letor::{ItemId, QueryId};
use crate::{Error, Result};

/// Lower bound applied to the second posterior Beta parameter `n − C + β`.
/// IPS weighting lets `C` exceed `n`, which would otherwise make it negative.
pub const BETA_PARAM_FLOOR: f64 = 1e-3;

/// Raw behavior aggregates of one (query, item) pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClickCounts {
    pub n: u64,
    pub clicks: f64,
    pub exposure: f64,
}

impl ClickCounts {
    /// Records one presentation at a rank examined with probability `p_rank`.
    pub fn record(&mut self, clicked: bool, p_rank: f64) -> Result<()> {
        if !(p_rank > 0.0 && p_rank <= 1.0) {
            return Err(Error::invalid(format!(
                "examination probability must lie in (0, 1], got {p_rank}"
            )));
        }
        self.n += 1;
        if clicked {
            self.clicks += 1.0 / p_rank;
        }
        self.exposure += p_rank;
        Ok(())
    }

    /// The unbiased click-rate estimate `C / n`, if the item was ever shown.
    pub fn ips_rate(&self) -> Option<f64> {
        (self.n > 0).then(|| self.clicks / self.n as f64)
    }
}

/// Prior parameters together with the behavior aggregates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorStats {
    pub alpha: f64,
    pub beta: f64,
    pub n: u64,
    pub clicks: f64,
    pub exposure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub variance_bound: f64,
    pub mc: f64,
}

impl BehaviorStats {
    pub fn new(alpha: f64, beta: f64, counts: ClickCounts) -> Self {
        debug_assert!(alpha > 0.0 && beta > 0.0);
        BehaviorStats {
            alpha,
            beta,
            n: counts.n,
            clicks: counts.clicks,
            exposure: counts.exposure,
        }
    }

    /// Prior only, no behavior observed.
    pub fn prior(alpha: f64, beta: f64) -> Self {
        Self::new(alpha, beta, ClickCounts::default())
    }

    pub fn counts(&self) -> ClickCounts {
        ClickCounts {
            n: self.n,
            clicks: self.clicks,
            exposure: self.exposure,
        }
    }

    /// Returns the statistics after one more presentation.
    pub fn updated(&self, clicked: bool, p_rank: f64) -> Result<Self> {
        let mut counts = self.counts();
        counts.record(clicked, p_rank)?;
        Ok(Self::new(self.alpha, self.beta, counts))
    }

    /// `(C + α) / (n + α + β)`, clamped to `[0, 1]`.
    pub fn posterior_mean(&self) -> f64 {
        let raw = (self.clicks + self.alpha) / (self.n as f64 + self.alpha + self.beta);
        raw.clamp(0.0, 1.0)
    }

    /// Upper-bound surrogate of the posterior-mean variance, `mean / (E + α + β)`.
    pub fn variance_bound(&self) -> f64 {
        self.posterior_mean() / (self.exposure + self.alpha + self.beta)
    }

    /// Marginal certainty, `mean / (E + α + β)²`: the decrease of
    /// [`variance_bound`](Self::variance_bound) per unit of added exposure.
    pub fn marginal_certainty(&self) -> f64 {
        let denom = self.exposure + self.alpha + self.beta;
        self.posterior_mean() / (denom * denom)
    }

    pub fn summary(&self) -> PosteriorSummary {
        PosteriorSummary {
            mean: self.posterior_mean(),
            variance_bound: self.variance_bound(),
            mc: self.marginal_certainty(),
        }
    }

    /// Parameters of the posterior Beta(C + α, n − C + β). The second one is
    /// floored at [`BETA_PARAM_FLOOR`]; the flag reports whether that happened.
    pub fn posterior_params(&self) -> (f64, f64, bool) {
        let b = self.n as f64 - self.clicks + self.beta;
        if b > BETA_PARAM_FLOOR {
            (self.clicks + self.alpha, b, false)
        } else {
            (self.clicks + self.alpha, BETA_PARAM_FLOOR, true)
        }
    }
}

/// Behavior statistics for every (query, item) pair seen so far. Missing pairs
/// read as zero counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsMap {
    entries: HashMap<QueryId, BTreeMap<ItemId, ClickCounts>>,
}

impl StatsMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, query: &QueryId, item: ItemId) -> ClickCounts {
        self.entries
            .get(query)
            .and_then(|m| m.get(&item))
            .copied()
            .unwrap_or_default()
    }

    pub fn record(&mut self, query: &QueryId, item: ItemId, clicked: bool, p_rank: f64) -> Result<()> {
        let per_query = match self.entries.get_mut(query) {
            Some(m) => m,
            None => self.entries.entry(query.clone()).or_default(),
        };
        per_query.entry(item).or_default().record(clicked, p_rank)
    }

    pub fn stats(&self, query: &QueryId, item: ItemId, alpha: f64, beta: f64) -> BehaviorStats {
        BehaviorStats::new(alpha, beta, self.get(query, item))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All entries, sorted by (query, item).
    pub fn iter_sorted(&self) -> Vec<(&QueryId, ItemId, ClickCounts)> {
        let mut queries: Vec<_> = self.entries.iter().collect();
        queries.sort_by(|a, b| a.0.cmp(b.0));
        queries
            .into_iter()
            .flat_map(|(q, m)| m.iter().map(move |(d, c)| (q, *d, *c)))
            .collect()
    }

    /// Line-oriented checkpoint: `query_id<TAB>item_id<TAB>n<TAB>C<TAB>E`.
    /// Prior parameters are not stored; they come from the prior model.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (q, d, c) in self.iter_sorted() {
            let _ = writeln!(out, "{q}\t{d}\t{}\t{}\t{}", c.n, c.clicks, c.exposure);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut map = StatsMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |m: &str| Error::Parse {
                line: i + 1,
                message: m.to_owned(),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let [q, d, n, c, e] = fields[..] else {
                return Err(err("expected 5 tab-separated fields"));
            };
            let counts = ClickCounts {
                n: n.parse().map_err(|_| err("bad n"))?,
                clicks: c.parse().map_err(|_| err("bad C"))?,
                exposure: e.parse().map_err(|_| err("bad E"))?,
            };
            let item = ItemId(d.parse().map_err(|_| err("bad item id"))?);
            map.entries
                .entry(QueryId(q.to_owned()))
                .or_default()
                .insert(item, counts);
        }
        Ok(map)
    }
}

/// Query-level uncertainty: the sum of per-item variance bounds. Diagnostic only.
pub fn query_uncertainty<'a>(items: impl IntoIterator<Item = &'a BehaviorStats>) -> f64 {
    items.into_iter().map(BehaviorStats::variance_bound).sum()
}
