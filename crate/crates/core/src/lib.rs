//! Gate-then-price engine for second-hand listings.
//!
//! A binary classifier (the gate) decides whether a listing's feature
//! vector is qualified for a price suggestion; a regressor predicts the
//! log price for qualified listings. Both are trained jointly under either
//! a percentile constraint (a target fraction of accepted listings) or an
//! error-threshold constraint (accepted listings should be priced within a
//! log-error bound), with a warm-up stage that first trains the regressor
//! on every sample.
//!
//! Modules:
//! - [`types`]: shared domain types and their invariants
//! - [`pipeline`]: ingestion, outlier trimming, log transform, price
//!   statistics, assembly, and splitting
//! - [`synth`]: synthetic marketplace with known ground truth
//! - [`nn`]: dense MLP engine with Adam and gradient checking
//! - [`objective`]: the hard/soft joint losses and gate indicators
//! - [`trainer`]: two-stage training loop and checkpoint persistence
//! - [`eval`]: MALE/RMSLE, gate reports, sweeps, and gate AUC

pub mod error;
pub mod eval;
pub mod nn;
pub mod objective;
pub mod pipeline;
pub mod synth;
pub mod trainer;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    ConstraintMode, GateReport, ListingExample, ObjectiveConfig, StatFeatures, StatSummary,
    STAT_FEATURE_COUNT,
};
