//! The prior model: a linear map from static features to the Beta prior
//! parameter `alpha`, with `beta` held fixed.
//!
//! `alpha = softplus(w·x + b) + 1e-6`. Training minimizes the negative log
//! marginal likelihood of the observed behavior under the Beta–Binomial model,
//!
//! ```text
//! l = ln B(α, β) − ln B(C + α, n − C + β)        (items with n > 0)
//! ∂l/∂α = ψ(α) − ψ(α + β) − ψ(C + α) + ψ(n + α + β)
//! ```
//!
//! averaged over examples, by full-batch gradient descent.

use std::fmt::Write as _;

use crate::bayes::BETA_PARAM_FLOOR;
use crate::letor::FeatureVector;
use crate::numeric::{sigmoid, softplus, CompensatedSum};
use crate::special::{digamma_unchecked, log_beta_unchecked};
use crate::{Error, Result};

/// Default fixed `beta`.
pub const DEFAULT_BETA: f64 = 5.0;

/// Added to the softplus output so that `alpha` is strictly positive.
pub const ALPHA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PriorModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub beta_fixed: f64,
}

impl PriorModel {
    /// All-zero parameters.
    pub fn new(feature_count: usize, beta_fixed: f64) -> Result<Self> {
        if !(beta_fixed > 0.0) {
            return Err(Error::invalid("beta must be positive"));
        }
        Ok(PriorModel {
            weights: vec![0.0; feature_count],
            bias: 0.0,
            beta_fixed,
        })
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<()> {
        if x.len() == self.weights.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            })
        }
    }

    /// Pre-link score `w·x + b`.
    pub fn logit(&self, x: &FeatureVector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(x.dot(&self.weights) + self.bias)
    }

    /// `(alpha, beta)` for one item.
    pub fn forward(&self, x: &FeatureVector) -> Result<(f64, f64)> {
        Ok((alpha_link(self.logit(x)?), self.beta_fixed))
    }

    /// Prior relevance estimate `α / (α + β)`.
    pub fn prior_mean(&self, x: &FeatureVector) -> Result<f64> {
        let (a, b) = self.forward(x)?;
        Ok(a / (a + b))
    }

    /// Checkpoint text: `bias <v>` then `w<i> <v>` per weight, 17 significant digits.
    pub fn to_checkpoint(&self) -> String {
        let mut out = format!("bias {:.16e}\n", self.bias);
        for (i, w) in self.weights.iter().enumerate() {
            let _ = writeln!(out, "w{i} {w:.16e}");
        }
        out
    }

    pub fn from_checkpoint(text: &str, beta_fixed: f64) -> Result<Self> {
        let (bias, weights) = parse_linear_checkpoint(text)?;
        let mut model = PriorModel::new(weights.len(), beta_fixed)?;
        model.bias = bias;
        model.weights = weights;
        Ok(model)
    }
}

/// Parses the `bias` / `w<i>` checkpoint layout shared by the linear models.
pub(crate) fn parse_linear_checkpoint(text: &str) -> Result<(f64, Vec<f64>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let bad = |line: usize, m: String| Error::Parse {
        line: line + 1,
        message: m,
    };
    let (i, first) = lines.next().ok_or(Error::EmptyDataset)?;
    let bias = match first.split_once(' ') {
        Some(("bias", v)) => v
            .trim()
            .parse::<f64>()
            .map_err(|_| bad(i, format!("bad bias `{v}`")))?,
        _ => return Err(bad(i, "first line must be `bias <v>`".into())),
    };
    let mut weights = Vec::new();
    for (i, line) in lines {
        let (key, v) = line
            .split_once(' ')
            .ok_or_else(|| bad(i, "expected `w<i> <v>`".into()))?;
        if key != format!("w{}", weights.len()) {
            return Err(bad(i, format!("expected w{}, found `{key}`", weights.len())));
        }
        weights.push(
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(i, format!("bad weight `{v}`")))?,
        );
    }
    Ok((bias, weights))
}

fn alpha_link(z: f64) -> f64 {
    softplus(z) + ALPHA_FLOOR
}

/// Negative log marginal likelihood of one item's behavior. Zero when `n = 0`.
pub fn prior_loss(alpha: f64, beta: f64, n: u64, clicks: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let second = (n as f64 - clicks + beta).max(BETA_PARAM_FLOOR);
    log_beta_unchecked(alpha, beta) - log_beta_unchecked(clicks + alpha, second)
}

/// `∂ prior_loss / ∂ alpha`, consistent with the floor used in [`prior_loss`].
pub fn prior_loss_grad_alpha(alpha: f64, beta: f64, n: u64, clicks: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let second = (n as f64 - clicks + beta).max(BETA_PARAM_FLOOR);
    let post_a = clicks + alpha;
    digamma_unchecked(alpha) - digamma_unchecked(alpha + beta)
        - (digamma_unchecked(post_a) - digamma_unchecked(post_a + second))
}

/// One presented item used for prior training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub features: FeatureVector,
    pub n: u64,
    pub clicks: f64,
}

impl TrainExample {
    fn is_degenerate(&self, beta: f64) -> bool {
        self.n as f64 - self.clicks + beta <= BETA_PARAM_FLOOR
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PriorModel,
    /// Mean loss before each update, plus the loss after the final one.
    pub loss_history: Vec<f64>,
    pub best_loss: f64,
    /// Examples whose posterior second parameter hit the floor.
    pub degenerate: usize,
}

/// Mean loss over examples with `n > 0` and its gradient `(d/dw, d/db)`.
pub fn objective(model: &PriorModel, examples: &[TrainExample]) -> Result<(f64, Vec<f64>, f64)> {
    let mut loss = CompensatedSum::default();
    let mut grad_w = vec![CompensatedSum::default(); model.weights.len()];
    let mut grad_b = CompensatedSum::default();
    let mut used = 0usize;
    for ex in examples.iter().filter(|e| e.n > 0) {
        let z = model.logit(&ex.features)?;
        let alpha = alpha_link(z);
        let beta = model.beta_fixed;
        loss.add(prior_loss(alpha, beta, ex.n, ex.clicks));
        // d alpha / d z = sigmoid(z)
        let g = prior_loss_grad_alpha(alpha, beta, ex.n, ex.clicks) * sigmoid(z);
        for (acc, x) in grad_w.iter_mut().zip(ex.features.as_slice()) {
            acc.add(g * x);
        }
        grad_b.add(g);
        used += 1;
    }
    if used == 0 {
        return Ok((0.0, vec![0.0; model.weights.len()], 0.0));
    }
    let scale = 1.0 / used as f64;
    Ok((
        loss.value() * scale,
        grad_w.iter().map(|g| g.value() * scale).collect(),
        grad_b.value() * scale,
    ))
}

/// Full-batch gradient descent starting from `model`. Returns the parameters
/// with the lowest training loss seen. With no usable example the model is
/// returned unchanged.
pub fn train_prior(
    model: &PriorModel,
    examples: &[TrainExample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if !(config.learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let usable = examples.iter().filter(|e| e.n > 0).count();
    let degenerate = examples
        .iter()
        .filter(|e| e.n > 0 && e.is_degenerate(model.beta_fixed))
        .count();
    if usable == 0 {
        log::warn!("prior training skipped: no presented items");
        return Ok(TrainOutcome {
            model: model.clone(),
            loss_history: Vec::new(),
            best_loss: 0.0,
            degenerate,
        });
    }

    let mut current = model.clone();
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut history = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..=config.epochs {
        let (loss, gw, gb) = objective(&current, examples)?;
        history.push(loss);
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
    Ok(TrainOutcome {
        model: best,
        loss_history: history,
        best_loss,
        degenerate,
    })
}
