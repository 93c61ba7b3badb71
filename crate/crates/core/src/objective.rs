//! Joint gate-and-regress objectives.
//!
//! The hard losses use the discrete gate indicator and are what gets
//! reported; the soft losses replace the indicator with the classifier
//! probability so gradients reach both parameter sets, and are what gets
//! trained. Threshold mode adds a cross-entropy term whose labels come
//! from the regressor's current error but are treated as constants by the
//! gradient (no path from that term back into the regressor).

use crate::error::{Error, Result};
use crate::nn::SCORE_CLAMP;
use crate::types::ObjectiveConfig;

/// Hard gate decision: accepted iff the score is at least 0.5.
/// The boundary itself counts as accepted.
pub fn indicator_c1(score: f64) -> bool {
    score >= 0.5
}

/// Hard accuracy label: within tolerance iff |target - pred| <= epsilon.
/// The boundary itself counts as within tolerance.
pub fn indicator_c2(target: f64, pred: f64, epsilon: f64) -> bool {
    (target - pred).abs() <= epsilon
}

/// A soft loss value with its per-sample partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLoss {
    pub loss: f64,
    pub d_scores: Vec<f64>,
    pub d_preds: Vec<f64>,
}

fn check_batch(scores: &[f64], preds: &[f64], targets: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if scores.len() != preds.len() || scores.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            context: "loss batch",
            expected: scores.len(),
            got: preds.len().min(targets.len()),
        });
    }
    Ok(scores.len())
}

fn clamp_score(s: f64) -> f64 {
    s.clamp(SCORE_CLAMP.0, SCORE_CLAMP.1)
}

/// Gated mean squared error with a hinge keeping the accepted fraction at
/// or above `delta`, using the hard indicator. Reporting form.
pub fn percentile_loss_hard(
    scores: &[f64],
    preds: &[f64],
    targets: &[f64],
    delta: f64,
    beta: f64,
) -> Result<f64> {
    let n = check_batch(scores, preds, targets)? as f64;
    let mut gated_sq = 0.0;
    let mut accepted = 0.0;
    for ((&s, &p), &y) in scores.iter().zip(preds).zip(targets) {
        if indicator_c1(s) {
            gated_sq += (y - p).powi(2);
            accepted += 1.0;
        }
    }
    Ok(gated_sq / n + beta * (delta - accepted / n).max(0.0))
}

/// Differentiable surrogate of [`percentile_loss_hard`]: the indicator is
/// replaced by the raw score. The hinge subgradient at the kink
/// (mean score exactly delta) is taken as zero.
pub fn percentile_loss_soft(
    scores: &[f64],
    preds: &[f64],
    targets: &[f64],
    delta: f64,
    beta: f64,
) -> Result<SoftLoss> {
    let n = check_batch(scores, preds, targets)? as f64;
    let mean_score = scores.iter().sum::<f64>() / n;
    let hinge_active = mean_score < delta;
    let mut loss = beta * (delta - mean_score).max(0.0);
    let mut d_scores = Vec::with_capacity(scores.len());
    let mut d_preds = Vec::with_capacity(scores.len());
    for ((&s, &p), &y) in scores.iter().zip(preds).zip(targets) {
        let err = y - p;
        loss += s * err * err / n;
        let mut ds = err * err / n;
        if hinge_active {
            ds -= beta / n;
        }
        d_scores.push(ds);
        d_preds.push(-2.0 * s * err / n);
    }
    Ok(SoftLoss { loss, d_scores, d_preds })
}

/// Threshold-mode objective with hard indicators: gated MSE, the hinge
/// floor on the accepted fraction, and a cross-entropy term pushing scores
/// toward the within-tolerance labels. Reporting form.
pub fn threshold_loss_hard(
    scores: &[f64],
    preds: &[f64],
    targets: &[f64],
    delta: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
) -> Result<f64> {
    let n = check_batch(scores, preds, targets)? as f64;
    let mut gated_sq = 0.0;
    let mut accepted = 0.0;
    let mut ce = 0.0;
    for ((&s, &p), &y) in scores.iter().zip(preds).zip(targets) {
        if indicator_c1(s) {
            gated_sq += (y - p).powi(2);
            accepted += 1.0;
        }
        let sc = clamp_score(s);
        ce += if indicator_c2(y, p, epsilon) {
            -sc.ln()
        } else {
            -(1.0 - sc).ln()
        };
    }
    Ok(gated_sq / n + beta * (delta - accepted / n).max(0.0) + gamma * ce / n)
}

/// Differentiable surrogate of [`threshold_loss_hard`]: the first two terms
/// are relaxed exactly as in [`percentile_loss_soft`]; the cross-entropy
/// keeps the hard within-tolerance labels, detached — that term contributes
/// no gradient to the predictions.
pub fn threshold_loss_soft(
    scores: &[f64],
    preds: &[f64],
    targets: &[f64],
    delta: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
) -> Result<SoftLoss> {
    let n = check_batch(scores, preds, targets)? as f64;
    let mut soft = percentile_loss_soft(scores, preds, targets, delta, beta)?;
    for (i, ((&s, &p), &y)) in scores.iter().zip(preds).zip(targets).enumerate() {
        let sc = clamp_score(s);
        let label = if indicator_c2(y, p, epsilon) { 1.0 } else { 0.0 };
        soft.loss += gamma * if label == 1.0 { -sc.ln() } else { -(1.0 - sc).ln() } / n;
        soft.d_scores[i] += gamma * (sc - label) / (n * sc * (1.0 - sc));
    }
    Ok(soft)
}

/// Warm-up form of the threshold surrogate: the gate is held open
/// (score 1) inside the gated-MSE and hinge terms, so the regressor trains
/// on every sample, while the cross-entropy keeps training the classifier
/// with its real scores.
pub fn threshold_loss_soft_warmup(
    scores: &[f64],
    preds: &[f64],
    targets: &[f64],
    delta: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
) -> Result<SoftLoss> {
    let n = check_batch(scores, preds, targets)? as f64;
    // Mean score 1 >= delta: the hinge vanishes.
    let _ = (delta, beta);
    let mut loss = 0.0;
    let mut d_scores = Vec::with_capacity(scores.len());
    let mut d_preds = Vec::with_capacity(scores.len());
    for ((&s, &p), &y) in scores.iter().zip(preds).zip(targets) {
        let err = y - p;
        loss += err * err / n;
        d_preds.push(-2.0 * err / n);
        let sc = clamp_score(s);
        let label = if indicator_c2(y, p, epsilon) { 1.0 } else { 0.0 };
        loss += gamma * if label == 1.0 { -sc.ln() } else { -(1.0 - sc).ln() } / n;
        d_scores.push(gamma * (sc - label) / (n * sc * (1.0 - sc)));
    }
    Ok(SoftLoss { loss, d_scores, d_preds })
}

/// Per-sample scores, predictions, targets, and hard indicator labels for
/// one batch, with both loss readings.
#[derive(Debug, Clone)]
pub struct BatchEval {
    pub scores: Vec<f64>,
    pub preds: Vec<f64>,
    pub targets: Vec<f64>,
    pub c1: Vec<bool>,
    /// Within-tolerance labels; present in threshold mode only.
    pub c2: Option<Vec<bool>>,
    pub hard_loss: f64,
    pub soft_loss: f64,
}

impl BatchEval {
    pub fn evaluate(
        scores: &[f64],
        preds: &[f64],
        targets: &[f64],
        cfg: &ObjectiveConfig,
    ) -> Result<Self> {
        check_batch(scores, preds, targets)?;
        let c1 = scores.iter().map(|&s| indicator_c1(s)).collect();
        let (hard_loss, soft_loss, c2) = match *cfg {
            ObjectiveConfig::Percentile { delta, beta } => (
                percentile_loss_hard(scores, preds, targets, delta, beta)?,
                percentile_loss_soft(scores, preds, targets, delta, beta)?.loss,
                None,
            ),
            ObjectiveConfig::Threshold { delta, beta, gamma, epsilon } => (
                threshold_loss_hard(scores, preds, targets, delta, beta, gamma, epsilon)?,
                threshold_loss_soft(scores, preds, targets, delta, beta, gamma, epsilon)?.loss,
                Some(
                    preds
                        .iter()
                        .zip(targets)
                        .map(|(&p, &y)| indicator_c2(y, p, epsilon))
                        .collect(),
                ),
            ),
        };
        Ok(BatchEval {
            scores: scores.to_vec(),
            preds: preds.to_vec(),
            targets: targets.to_vec(),
            c1,
            c2,
            hard_loss,
            soft_loss,
        })
    }
}

/// Dispatch the soft loss by mode, honoring the warm-up gate override.
pub fn soft_loss(
    scores: &[f64],
    preds: &[f64],
    targets: &[f64],
    cfg: &ObjectiveConfig,
    gate_open: bool,
) -> Result<SoftLoss> {
    match *cfg {
        ObjectiveConfig::Percentile { delta, beta } => {
            if gate_open {
                let ones = vec![1.0; scores.len()];
                let mut soft = percentile_loss_soft(&ones, preds, targets, delta, beta)?;
                // The gate is not part of this stage's graph.
                soft.d_scores.iter_mut().for_each(|d| *d = 0.0);
                Ok(soft)
            } else {
                percentile_loss_soft(scores, preds, targets, delta, beta)
            }
        }
        ObjectiveConfig::Threshold { delta, beta, gamma, epsilon } => {
            if gate_open {
                threshold_loss_soft_warmup(scores, preds, targets, delta, beta, gamma, epsilon)
            } else {
                threshold_loss_soft(scores, preds, targets, delta, beta, gamma, epsilon)
            }
        }
    }
}

/// Dispatch the hard (reporting) loss by mode.
pub fn hard_loss(
    scores: &[f64],
    preds: &[f64],
    targets: &[f64],
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    match *cfg {
        ObjectiveConfig::Percentile { delta, beta } => {
            percentile_loss_hard(scores, preds, targets, delta, beta)
        }
        ObjectiveConfig::Threshold { delta, beta, gamma, epsilon } => {
            threshold_loss_hard(scores, preds, targets, delta, beta, gamma, epsilon)
        }
    }
}
