//! Evaluation: MALE and RMSLE over prices, gate reports, constraint
//! sweeps, and oracle-based gate efficacy (ROC AUC against ground truth).

use crate::error::{Error, Result};
use crate::objective::indicator_c1;
use crate::pipeline::StatIndex;
use crate::trainer::{train, Checkpoint, TrainConfig};
use crate::types::{GateReport, ListingExample, ObjectiveConfig};

fn check_price_pairs(pred_prices: &[f64], sold_prices: &[f64]) -> Result<()> {
    if pred_prices.is_empty() || sold_prices.is_empty() {
        return Err(Error::EmptyInput);
    }
    if pred_prices.len() != sold_prices.len() {
        return Err(Error::DimensionMismatch {
            context: "price pairs",
            expected: sold_prices.len(),
            got: pred_prices.len(),
        });
    }
    for &p in pred_prices.iter().chain(sold_prices) {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::NonPositivePrice(p));
        }
    }
    Ok(())
}

/// Mean absolute log error: mean |ln(predicted) - ln(sold)|.
pub fn male(pred_prices: &[f64], sold_prices: &[f64]) -> Result<f64> {
    check_price_pairs(pred_prices, sold_prices)?;
    let n = pred_prices.len() as f64;
    Ok(pred_prices
        .iter()
        .zip(sold_prices)
        .map(|(p, s)| (p.ln() - s.ln()).abs())
        .sum::<f64>()
        / n)
}

/// Root mean square log error: sqrt(mean (ln(predicted) - ln(sold))^2).
pub fn rmsle(pred_prices: &[f64], sold_prices: &[f64]) -> Result<f64> {
    check_price_pairs(pred_prices, sold_prices)?;
    let n = pred_prices.len() as f64;
    Ok((pred_prices
        .iter()
        .zip(sold_prices)
        .map(|(p, s)| (p.ln() - s.ln()).powi(2))
        .sum::<f64>()
        / n)
        .sqrt())
}

/// Gate report from raw model outputs: hard gate decisions over everyone,
/// price metrics over the accepted set only (absent if nothing accepted).
pub fn report_from_log_predictions(
    scores: &[f64],
    log_preds: &[f64],
    log_targets: &[f64],
) -> Result<GateReport> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if scores.len() != log_preds.len() || scores.len() != log_targets.len() {
        return Err(Error::DimensionMismatch {
            context: "gate report",
            expected: scores.len(),
            got: log_preds.len().min(log_targets.len()),
        });
    }
    let mut pred_prices = Vec::new();
    let mut sold_prices = Vec::new();
    for ((&s, &p), &y) in scores.iter().zip(log_preds).zip(log_targets) {
        if indicator_c1(s) {
            pred_prices.push(p.exp());
            sold_prices.push(y.exp());
        }
    }
    let n_positive = pred_prices.len();
    let (m, r) = if n_positive == 0 {
        (None, None)
    } else {
        (
            Some(male(&pred_prices, &sold_prices)?),
            Some(rmsle(&pred_prices, &sold_prices)?),
        )
    };
    Ok(GateReport::new(scores.len(), n_positive, m, r))
}

fn model_outputs(ckpt: &Checkpoint, examples: &[ListingExample]) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows: Vec<Vec<f64>> = examples.iter().map(|e| ckpt.standardizer.apply(&e.input)).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let scores = ckpt.classifier.batch_outputs(&refs)?;
    let preds = ckpt.regressor.batch_outputs(&refs)?;
    Ok((scores, preds))
}

/// Evaluate a checkpoint on assembled examples.
pub fn gate_report(ckpt: &Checkpoint, examples: &[ListingExample]) -> Result<GateReport> {
    if examples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (scores, preds) = model_outputs(ckpt, examples)?;
    let targets: Vec<f64> = examples.iter().map(|e| e.log_price).collect();
    report_from_log_predictions(&scores, &preds, &targets)
}

/// One row of a constraint sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub constraint: f64,
    pub n_positive: usize,
    pub positive_fraction: f64,
    pub male: Option<f64>,
    pub rmsle: Option<f64>,
}

/// Train once per constraint value (shared seed) and report held-out gate
/// metrics, rows in the given (ascending) order. The constraint is `delta`
/// in percentile mode and `epsilon` in threshold mode.
pub fn sweep(
    train_set: &[ListingExample],
    val_set: &[ListingExample],
    test_set: &[ListingExample],
    stat_index: &StatIndex,
    base_cfg: &TrainConfig,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    assert!(
        values.windows(2).all(|w| w[0] <= w[1]),
        "sweep values must be sorted ascending"
    );
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = base_cfg.clone();
        cfg.objective = match cfg.objective {
            ObjectiveConfig::Percentile { beta, .. } => {
                ObjectiveConfig::Percentile { delta: value, beta }
            }
            ObjectiveConfig::Threshold { delta, beta, gamma, .. } => {
                ObjectiveConfig::Threshold { delta, beta, gamma, epsilon: value }
            }
        };
        let run = train(train_set, val_set, stat_index, &cfg)?;
        let report = gate_report(&run.checkpoint, test_set)?;
        rows.push(SweepRow {
            constraint: value,
            n_positive: report.n_positive,
            positive_fraction: report.positive_fraction,
            male: report.male,
            rmsle: report.rmsle,
        });
    }
    Ok(rows)
}

/// Rank-based ROC AUC of scores against binary flags, ties averaged.
pub fn auc_from_scores(scores: &[f64], flags: &[bool]) -> Result<f64> {
    if scores.is_empty() || scores.len() != flags.len() {
        return Err(Error::DimensionMismatch {
            context: "auc inputs",
            expected: flags.len(),
            got: scores.len(),
        });
    }
    let n_pos = flags.iter().filter(|f| **f).count();
    let n_neg = flags.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateTruth);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Average rank over the tie group (ranks are 1-based).
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            if flags[k] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Gate efficacy against the synthetic ground truth: AUC of classifier
/// scores over the qualified flags.
pub fn gate_auc(ckpt: &Checkpoint, examples: &[ListingExample], flags: &[bool]) -> Result<f64> {
    if examples.len() != flags.len() {
        return Err(Error::DimensionMismatch {
            context: "truth flags",
            expected: examples.len(),
            got: flags.len(),
        });
    }
    let (scores, _) = model_outputs(ckpt, examples)?;
    auc_from_scores(&scores, flags)
}

/// Sweep rows as CSV, same conventions as the epoch log.
pub fn sweep_rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("constraint,n_positive,positive_fraction,male,rmsle\n");
    for r in rows {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.constraint,
            r.n_positive,
            r.positive_fraction,
            opt(r.male),
            opt(r.rmsle)
        ));
    }
    out
}

/// Sweep rows as an aligned text table.
pub fn sweep_rows_to_table(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>10} {:>12} {:>10} {:>8} {:>8}\n",
        "constraint", "# positive", "% positive", "MALE", "RMSLE"
    ));
    for r in rows {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:>10} {:>12} {:>9.2}% {:>8} {:>8}\n",
            r.constraint,
            r.n_positive,
            r.positive_fraction * 100.0,
            opt(r.male),
            opt(r.rmsle)
        ));
    }
    out
}
