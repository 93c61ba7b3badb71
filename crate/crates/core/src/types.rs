//! Shared domain types: listings, price statistics, objective settings,
//! and gate evaluation reports.

use crate::error::{Error, Result};

/// Number of historical price statistics attached to every listing:
/// (q1, q2, q3, mean) for each of the global, category, and seller groups.
pub const STAT_FEATURE_COUNT: usize = 12;

/// Valid category ids (13 top-level classes).
pub const CATEGORY_RANGE: std::ops::RangeInclusive<u32> = 1..=13;

/// One listing, fully assembled for training or evaluation.
///
/// `input` is the model input vector: visual features followed by the 12
/// statistical features, in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ListingExample {
    pub item_id: String,
    pub seller_id: String,
    pub category_id: u32,
    pub sold_price: f64,
    /// Natural log of `sold_price`; the regression target.
    pub log_price: f64,
    pub visual_features: Vec<f64>,
    pub stat_features: Vec<f64>,
    pub input: Vec<f64>,
}

/// Quartiles and mean of log sold prices for one group of transactions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatSummary {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub mean: f64,
}

impl StatSummary {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.q1, self.q2, self.q3, self.mean];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite stat summary"));
        }
        if self.q1 > self.q2 || self.q2 > self.q3 {
            return Err(Error::DegenerateInput("quartiles out of order"));
        }
        Ok(())
    }
}

/// The 12 statistical features for one listing: global, category, and
/// seller summaries of historical log prices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatFeatures {
    pub global: StatSummary,
    pub category: StatSummary,
    pub seller: StatSummary,
}

impl StatFeatures {
    /// Flatten in the canonical order: global, category, seller, each as
    /// (q1, q2, q3, mean).
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(STAT_FEATURE_COUNT);
        for group in [&self.global, &self.category, &self.seller] {
            out.extend_from_slice(&[group.q1, group.q2, group.q3, group.mean]);
        }
        out
    }
}

/// Which constraint drives the joint objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    Percentile,
    Threshold,
}

impl ConstraintMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstraintMode::Percentile => "percentile",
            ConstraintMode::Threshold => "threshold",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "percentile" => Ok(ConstraintMode::Percentile),
            "threshold" => Ok(ConstraintMode::Threshold),
            other => Err(Error::BadConfig(format!("unknown mode `{other}`"))),
        }
    }
}

/// Joint-objective settings.
///
/// `delta` is the minimum fraction of the batch the gate must accept
/// (hinge constraint), `beta` weighs that hinge. Threshold mode adds a
/// cross-entropy term weighed by `gamma`, with positives defined by an
/// absolute log-price error of at most `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveConfig {
    Percentile {
        delta: f64,
        beta: f64,
    },
    Threshold {
        delta: f64,
        beta: f64,
        gamma: f64,
        epsilon: f64,
    },
}

impl ObjectiveConfig {
    /// Percentile mode with default weights (beta = 1).
    pub fn percentile(delta: f64) -> Self {
        ObjectiveConfig::Percentile { delta, beta: 1.0 }
    }

    /// Threshold mode with default weights (beta = gamma = 1) and the
    /// default floor delta = 0.1 guarding against the all-negative gate.
    pub fn threshold(epsilon: f64) -> Self {
        ObjectiveConfig::Threshold {
            delta: 0.1,
            beta: 1.0,
            gamma: 1.0,
            epsilon,
        }
    }

    pub fn mode(&self) -> ConstraintMode {
        match self {
            ObjectiveConfig::Percentile { .. } => ConstraintMode::Percentile,
            ObjectiveConfig::Threshold { .. } => ConstraintMode::Threshold,
        }
    }

    pub fn delta(&self) -> f64 {
        match *self {
            ObjectiveConfig::Percentile { delta, .. } => delta,
            ObjectiveConfig::Threshold { delta, .. } => delta,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            ObjectiveConfig::Percentile { beta, .. } => beta,
            ObjectiveConfig::Threshold { beta, .. } => beta,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            ObjectiveConfig::Percentile { .. } => None,
            ObjectiveConfig::Threshold { gamma, .. } => Some(gamma),
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            ObjectiveConfig::Percentile { .. } => None,
            ObjectiveConfig::Threshold { epsilon, .. } => Some(epsilon),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let delta = self.delta();
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::BadConfig(format!("delta must be in (0, 1], got {delta}")));
        }
        if self.beta() < 0.0 {
            return Err(Error::BadConfig(format!("beta must be >= 0, got {}", self.beta())));
        }
        if let ObjectiveConfig::Threshold { gamma, epsilon, .. } = *self {
            if gamma < 0.0 {
                return Err(Error::BadConfig(format!("gamma must be >= 0, got {gamma}")));
            }
            if !epsilon.is_finite() || epsilon <= 0.0 {
                return Err(Error::BadConfig(format!("epsilon must be > 0, got {epsilon}")));
            }
        }
        Ok(())
    }
}

/// One gate evaluation: how many items the gate accepted and how accurate
/// the price suggestions were on the accepted set.
///
/// `male`/`rmsle` are absent (not zero) when no item was accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    pub n_total: usize,
    pub n_positive: usize,
    pub positive_fraction: f64,
    pub male: Option<f64>,
    pub rmsle: Option<f64>,
}

impl GateReport {
    pub fn new(n_total: usize, n_positive: usize, male: Option<f64>, rmsle: Option<f64>) -> Self {
        assert!(n_positive <= n_total, "positive count exceeds total");
        if let (Some(m), Some(r)) = (male, rmsle) {
            assert!(m >= 0.0 && r >= 0.0, "metrics must be nonnegative");
            // Quadratic mean dominates the arithmetic mean of |errors|.
            assert!(r + 1e-12 >= m, "rmsle {r} < male {m}");
        }
        let positive_fraction = if n_total == 0 {
            0.0
        } else {
            n_positive as f64 / n_total as f64
        };
        GateReport {
            n_total,
            n_positive,
            positive_fraction,
            male,
            rmsle,
        }
    }
}

/// Check every `ListingExample` invariant; the error names the first
/// violated one.
pub fn validate_example(e: &ListingExample) -> Result<()> {
    if !e.sold_price.is_finite() || e.sold_price <= 0.0 {
        return Err(Error::NonPositivePrice(e.sold_price));
    }
    if !CATEGORY_RANGE.contains(&e.category_id) {
        return Err(Error::BadCategory(e.category_id));
    }
    let expected_log = e.sold_price.ln();
    let tol = 1e-12 * expected_log.abs().max(1.0);
    if (e.log_price - expected_log).abs() > tol {
        return Err(Error::DegenerateInput("log_price is not ln(sold_price)"));
    }
    if e.stat_features.len() != STAT_FEATURE_COUNT {
        return Err(Error::DimensionMismatch {
            context: "stat features",
            expected: STAT_FEATURE_COUNT,
            got: e.stat_features.len(),
        });
    }
    if e.input.len() != e.visual_features.len() + STAT_FEATURE_COUNT {
        return Err(Error::DimensionMismatch {
            context: "input vector",
            expected: e.visual_features.len() + STAT_FEATURE_COUNT,
            got: e.input.len(),
        });
    }
    if e.input[..e.visual_features.len()] != e.visual_features[..]
        || e.input[e.visual_features.len()..] != e.stat_features[..]
    {
        return Err(Error::DegenerateInput("input is not visual ++ stats"));
    }
    Ok(())
}
