//! LETOR / SVMLight ranking datasets.
//!
//! Lines look like `<label> qid:<id> 1:<v> 2:<v> ... [# comment]`. Only the
//! dense layout is accepted: feature indices must run `1..=m` without gaps.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Static (non-behavior) features of one query–item pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.0.get(index).copied()
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.0.iter().zip(weights).map(|(x, w)| x * w).sum()
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueryId(pub String);

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for QueryId {
    fn from(s: &str) -> Self {
        QueryId(s.to_owned())
    }
}

/// Position of an item within its query, in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemId(pub u32);

impl ItemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemRecord {
    pub item_id: ItemId,
    pub label: u32,
    pub features: FeatureVector,
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query_id: QueryId,
    pub items: Vec<ItemRecord>,
}

impl QueryRecord {
    pub fn item(&self, id: ItemId) -> &ItemRecord {
        &self.items[id.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub queries: Vec<QueryRecord>,
    pub feature_count: usize,
    pub y_max: u32,
    /// 0-based column holding the BM25 score.
    pub bm25_feature_index: usize,
}

/// One parsed LETOR line.
#[derive(Debug, Clone, PartialEq)]
pub struct LetorLine {
    pub label: u32,
    pub query_id: String,
    pub features: FeatureVector,
    pub comment: Option<String>,
}

/// Parses a single dense LETOR line. `line_no` is only used in error messages.
pub fn parse_letor_line(line: &str, line_no: usize) -> Result<LetorLine> {
    let err = |message: String| Error::Parse {
        line: line_no,
        message,
    };

    let (body, comment) = match line.split_once('#') {
        Some((body, comment)) => {
            let c = comment.trim();
            (body, (!c.is_empty()).then(|| c.to_owned()))
        }
        None => (line, None),
    };

    let mut tokens = body.split_whitespace();
    let label_tok = tokens.next().ok_or_else(|| err("empty line".into()))?;
    let label: u32 = label_tok
        .parse()
        .map_err(|_| err(format!("invalid label `{label_tok}`")))?;

    let qid_tok = tokens
        .next()
        .ok_or_else(|| err("missing qid".into()))?;
    let query_id = qid_tok
        .strip_prefix("qid:")
        .filter(|q| !q.is_empty())
        .ok_or_else(|| err(format!("expected `qid:<id>`, found `{qid_tok}`")))?;

    let mut values = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| err(format!("malformed feature token `{tok}`")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| err(format!("invalid feature index in `{tok}`")))?;
        let val: f64 = val
            .parse()
            .map_err(|_| err(format!("invalid feature value in `{tok}`")))?;
        if !val.is_finite() {
            return Err(err(format!("non-finite feature value in `{tok}`")));
        }
        let expected = values.len() + 1;
        if idx < expected {
            return Err(err(format!("duplicate or decreasing feature index {idx}")));
        }
        if idx > expected {
            return Err(err(format!(
                "missing feature index {expected} (dense format required)"
            )));
        }
        values.push(val);
    }

    Ok(LetorLine {
        label,
        query_id: query_id.to_owned(),
        features: FeatureVector(values),
        comment,
    })
}

/// Parses a whole LETOR file held in memory.
pub fn parse_dataset(text: &str, bm25_feature_index: usize) -> Result<Dataset> {
    let mut queries: Vec<QueryRecord> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    let mut feature_count = None;
    let mut y_max = 0;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let parsed = parse_letor_line(raw, line_no)?;
        let expected = *feature_count.get_or_insert(parsed.features.len());
        if parsed.features.len() != expected {
            return Err(Error::InconsistentFeatures {
                expected,
                found: parsed.features.len(),
                line: line_no,
            });
        }
        y_max = y_max.max(parsed.label);

        let slot = *by_id.entry(parsed.query_id.clone()).or_insert_with(|| {
            queries.push(QueryRecord {
                query_id: QueryId(parsed.query_id.clone()),
                items: Vec::new(),
            });
            queries.len() - 1
        });
        let query = &mut queries[slot];
        query.items.push(ItemRecord {
            item_id: ItemId(query.items.len() as u32),
            label: parsed.label,
            features: parsed.features,
            comment: parsed.comment,
        });
    }

    let feature_count = feature_count.ok_or(Error::EmptyDataset)?;
    if bm25_feature_index >= feature_count {
        return Err(Error::invalid(format!(
            "BM25 feature index {bm25_feature_index} out of range for {feature_count} features"
        )));
    }
    Ok(Dataset {
        queries,
        feature_count,
        y_max,
        bm25_feature_index,
    })
}

/// Reads a LETOR file from disk.
pub fn load_dataset(path: impl AsRef<Path>, bm25_feature_index: usize) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, bm25_feature_index)
}

impl Dataset {
    pub fn item_count(&self) -> usize {
        self.queries.iter().map(|q| q.items.len()).sum()
    }

    pub fn average_items(&self) -> f64 {
        if self.queries.is_empty() {
            0.0
        } else {
            self.item_count() as f64 / self.queries.len() as f64
        }
    }

    /// Serializes back to LETOR text. Parsing the output yields an equal dataset.
    pub fn to_letor_string(&self) -> String {
        let mut out = String::new();
        for q in &self.queries {
            for item in &q.items {
                out.push_str(&format!("{} qid:{}", item.label, q.query_id));
                for (k, v) in item.features.as_slice().iter().enumerate() {
                    out.push_str(&format!(" {}:{}", k + 1, v));
                }
                if let Some(c) = &item.comment {
                    out.push_str(" # ");
                    out.push_str(c);
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn write_letor(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_letor_string()).map_err(|e| Error::io(path, e))
    }

    /// Zeroes the given 0-based columns in place, keeping the original indices.
    pub fn mask_features(&mut self, columns: &[usize]) -> Result<()> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.feature_count) {
            return Err(Error::invalid(format!("cannot mask column {bad}")));
        }
        for q in &mut self.queries {
            for item in &mut q.items {
                for &c in columns {
                    item.features.0[c] = 0.0;
                }
            }
        }
        Ok(())
    }

    fn with_queries(&self, queries: Vec<QueryRecord>) -> Dataset {
        Dataset {
            queries,
            feature_count: self.feature_count,
            y_max: self.y_max,
            bm25_feature_index: self.bm25_feature_index,
        }
    }
}

/// Query-level split into (train, validation, test).
///
/// The partitions keep the parent's `y_max` so relevance mapping stays
/// consistent across them. Queries inside a partition keep file order.
pub fn partition(
    dataset: &Dataset,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let (r_train, r_valid, r_test) = ratios;
    if !(r_train > 0.0 && r_valid > 0.0 && r_test > 0.0) {
        return Err(Error::invalid("partition ratios must be positive"));
    }
    if (r_train + r_valid + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("partition ratios must sum to 1"));
    }
    let n = dataset.queries.len();
    if n < 3 {
        return Err(Error::invalid(format!(
            "cannot split {n} queries into three partitions"
        )));
    }

    // Every partition keeps at least one query.
    let n_train = ((r_train * n as f64).round() as usize).clamp(1, n - 2);
    let n_valid = ((r_valid * n as f64).round() as usize).clamp(1, n - 1 - n_train);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let pick = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        dataset.with_queries(idx.iter().map(|&i| dataset.queries[i].clone()).collect())
    };
    Ok((
        pick(&order[..n_train]),
        pick(&order[n_train..n_train + n_valid]),
        pick(&order[n_train + n_valid..]),
    ))
}

/// Per-feature min–max scaling fitted on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn fit(dataset: &Dataset) -> Self {
        let mut min = vec![f64::INFINITY; dataset.feature_count];
        let mut max = vec![f64::NEG_INFINITY; dataset.feature_count];
        for item in dataset.queries.iter().flat_map(|q| &q.items) {
            for (k, &v) in item.features.as_slice().iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Normalizer { min, max }
    }

    /// Affine map onto the fitted range; constant columns map to 0. No clipping.
    pub fn transform(&self, column: usize, value: f64) -> f64 {
        let span = self.max[column] - self.min[column];
        if span > 0.0 && span.is_finite() {
            (value - self.min[column]) / span
        } else {
            0.0
        }
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.feature_count != self.min.len() {
            return Err(Error::DimensionMismatch {
                expected: self.min.len(),
                got: dataset.feature_count,
            });
        }
        let mut out = dataset.clone();
        for item in out.queries.iter_mut().flat_map(|q| &mut q.items) {
            for (k, v) in item.features.0.iter_mut().enumerate() {
                *v = self.transform(k, *v);
            }
        }
        Ok(out)
    }
}

/// Fits min–max scaling on `train` and applies it to `train` and every dataset
/// in `others`.
pub fn normalize_features(
    train: &Dataset,
    others: &[Dataset],
) -> Result<(Dataset, Vec<Dataset>, Normalizer)> {
    let norm = Normalizer::fit(train);
    let train = norm.apply(train)?;
    let others = others
        .iter()
        .map(|d| norm.apply(d))
        .collect::<Result<Vec<_>>>()?;
    Ok((train, others, norm))
}
