//! Margin-loss training, validation threshold selection, and evaluation.
//!
//! The trainer is plain SGD over shuffled mini-batches. After each epoch the
//! model scores the validation pairs, a decision threshold is chosen to
//! maximize validation F1, and the best-scoring parameters are retained
//! (early stopping with a fixed patience). All randomness flows from the run
//! seed, so two runs with identical inputs produce identical histories.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{backward_pair, forward_pair, EncodedGraph, ModelError, ModelParams};

/// Ground-truth label for a code pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Clone,
    NonClone,
}

impl Label {
    /// Label encoded as the `0`/`1` digit used in persisted pair lists.
    pub fn bit(self) -> u8 {
        match self {
            Label::Clone => 1,
            Label::NonClone => 0,
        }
    }

    /// Inverse of [`Label::bit`].
    pub fn from_bit(bit: u8) -> Option<Label> {
        match bit {
            1 => Some(Label::Clone),
            0 => Some(Label::NonClone),
            _ => None,
        }
    }

    pub fn is_clone(self) -> bool {
        self == Label::Clone
    }
}

/// Margin loss on the cosine similarity `s ∈ [−1, 1]`.
///
/// Clones are pushed above `margin`, non-clones below `1 − margin`; the
/// default margin 0.5 makes both targets meet at 0.5.
pub fn pair_loss(similarity: f64, label: Label, margin: f64) -> f64 {
    match label {
        Label::Clone => (margin - similarity).max(0.0),
        Label::NonClone => (similarity - (1.0 - margin)).max(0.0),
    }
}

/// dLoss/dSimilarity; the hinge kink and the flat region both yield 0.
pub fn pair_loss_grad(similarity: f64, label: Label, margin: f64) -> f64 {
    match label {
        Label::Clone => {
            if margin - similarity > 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        Label::NonClone => {
            if similarity - (1.0 - margin) > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// A labeled pair that has been scored by the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub score: f64,
    pub label: Label,
}

/// Confusion counts and derived metrics at a fixed threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub theta: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Classify `score >= theta` as clone and tally metrics.
/// Zero denominators yield 0 rather than NaN.
pub fn evaluate_scores(scored: &[ScoredPair], theta: f64) -> EvalReport {
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for pair in scored {
        let predicted_clone = pair.score >= theta;
        match (predicted_clone, pair.label) {
            (true, Label::Clone) => tp += 1,
            (true, Label::NonClone) => fp += 1,
            (false, Label::NonClone) => tn += 1,
            (false, Label::Clone) => fn_ += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    EvalReport { theta, tp, fp, tn, fn_, precision, recall, f1 }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Choose the threshold maximizing F1 on a scored set.
///
/// Candidates are the midpoints between adjacent distinct sorted scores, plus
/// a −1 sentinel below every cosine score (the all-clone classification,
/// which midpoints cannot express). Ties break toward the larger threshold.
pub fn select_threshold(scored: &[ScoredPair]) -> f64 {
    let mut scores: Vec<f64> = scored.iter().map(|p| p.score).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let mut candidates = vec![-1.0];
    candidates.extend(scores.windows(2).map(|w| 0.5 * (w[0] + w[1])));

    let mut best_theta = -1.0;
    let mut best_f1 = -1.0;
    for &theta in &candidates {
        let f1 = evaluate_scores(scored, theta).f1;
        if f1 >= best_f1 {
            best_f1 = f1;
            best_theta = theta;
        }
    }
    best_theta
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub margin: f64,
    /// Message-passing rounds T.
    pub iterations: usize,
    /// Node state dimension d.
    pub embed_dim: usize,
    /// Edge vector dimension d_e.
    pub edge_dim: usize,
    /// Early-stop patience in epochs without a new best validation F1.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.05,
            margin: 0.5,
            iterations: 5,
            embed_dim: 32,
            edge_dim: 32,
            patience: 10,
            seed: 42,
        }
    }
}

impl TrainConfig {
    /// Reject out-of-range hyperparameters before any work starts.
    pub fn validate(&self) -> Result<(), TrainError> {
        let mut problems = Vec::new();
        if self.epochs == 0 {
            problems.push("epochs must be positive");
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            problems.push("learning_rate must be finite and non-negative");
        }
        if !(self.margin > 0.0 && self.margin < 2.0) {
            problems.push("margin must lie in (0, 2)");
        }
        if self.iterations == 0 {
            problems.push("iterations must be positive");
        }
        if self.embed_dim == 0 {
            problems.push("embed_dim must be positive");
        }
        if self.edge_dim == 0 {
            problems.push("edge_dim must be positive");
        }
        if self.patience == 0 {
            problems.push("patience must be positive");
        }
        if let Some(first) = problems.first() {
            return Err(TrainError::InvalidConfig(first.to_string()));
        }
        Ok(())
    }
}

/// A labeled pair referencing encoded graphs by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainPair {
    pub a: usize,
    pub b: usize,
    pub label: Label,
}

/// One line of the training history (serialized as JSON lines).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f1: f64,
    pub theta: f64,
}

/// Serialize the history as line-delimited JSON.
pub fn history_to_jsonl(history: &[HistoryEntry]) -> String {
    let mut out = String::new();
    for entry in history {
        out.push_str(&serde_json::to_string(entry).expect("history entries serialize"));
        out.push('\n');
    }
    out
}

/// Result of a training run: best-on-validation parameters and threshold.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub theta: f64,
    pub best_val_f1: f64,
    pub best_epoch: usize,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Error)]
pub enum TrainError {
    /// A pair set carries only one label, so neither loss nor F1 is informative.
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Score every pair with the current parameters.
pub fn score_pairs(
    graphs: &[EncodedGraph],
    pairs: &[TrainPair],
    params: &ModelParams,
) -> Result<Vec<ScoredPair>, ModelError> {
    pairs
        .iter()
        .map(|p| {
            let scored = forward_pair(&graphs[p.a], &graphs[p.b], params)?;
            Ok(ScoredPair { score: scored.similarity, label: p.label })
        })
        .collect()
}

fn check_both_labels(pairs: &[TrainPair], what: &str) -> Result<(), TrainError> {
    let clones = pairs.iter().filter(|p| p.label.is_clone()).count();
    if pairs.is_empty() || clones == 0 || clones == pairs.len() {
        return Err(TrainError::DegenerateData(format!(
            "{what} pairs must contain both clone and non-clone examples \
             ({} clone / {} total)",
            clones,
            pairs.len()
        )));
    }
    Ok(())
}

/// Train from a fresh random initialization.
///
/// Returns the parameters and threshold of the epoch with the highest
/// validation F1 (earliest such epoch on ties), together with the full
/// per-epoch history.
pub fn train(
    graphs: &[EncodedGraph],
    train_pairs: &[TrainPair],
    val_pairs: &[TrainPair],
    vocab_size: usize,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    check_both_labels(train_pairs, "training")?;
    check_both_labels(val_pairs, "validation")?;

    let mut params =
        ModelParams::init(vocab_size, cfg.embed_dim, cfg.edge_dim, cfg.iterations, cfg.seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, f64, usize, ModelParams)> = None;
    let mut epochs_since_best = 0usize;

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train_pairs.len()).collect();
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = params.zeros_like();
            let mut any_active = false;
            for &idx in batch {
                let pair = &train_pairs[idx];
                let out =
                    backward_pair(&graphs[pair.a], &graphs[pair.b], pair.label, cfg.margin, &params)?;
                epoch_loss += out.loss;
                if out.loss > 0.0 {
                    any_active = true;
                }
                grad.axpy(1.0, &out.grads);
            }
            if any_active {
                params.axpy(-cfg.learning_rate / batch.len() as f64, &grad);
            }
        }
        let train_loss = epoch_loss / train_pairs.len() as f64;

        let scored = score_pairs(graphs, val_pairs, &params)?;
        let theta = select_threshold(&scored);
        let report = evaluate_scores(&scored, theta);
        history.push(HistoryEntry { epoch, train_loss, val_f1: report.f1, theta });

        let improved = best.as_ref().is_none_or(|(best_f1, ..)| report.f1 > *best_f1);
        if improved {
            best = Some((report.f1, theta, epoch, params.clone()));
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= cfg.patience {
                break;
            }
        }
    }

    let (best_val_f1, theta, best_epoch, params) =
        best.expect("at least one epoch ran");
    Ok(TrainOutcome { params, theta, best_val_f1, best_epoch, history })
}
