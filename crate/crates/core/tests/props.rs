//! Property suites over the pipeline and metric primitives.

use proptest::prelude::*;

use pricegate_core::eval::{auc_from_scores, male, rmsle};
use pricegate_core::pipeline::{
    build_stat_index, quantile, trim_outliers, TransactionRow, TransactionTable,
};

/// Independent quantile oracle: the closest-ranks interpolation formula,
/// written directly.
fn quantile_oracle(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn table_from_prices(prices: &[f64]) -> TransactionTable {
    let rows = prices
        .iter()
        .enumerate()
        .map(|(i, &p)| TransactionRow {
            item_id: format!("item{i:05}"),
            seller_id: format!("s{}", i % 11),
            category_id: 1 + (i % 13) as u32,
            sold_price: p,
            visual_features: vec![0.0],
        })
        .collect();
    TransactionTable::new(rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn quantile_matches_oracle(
        mut values in proptest::collection::vec(-1e6f64..1e6, 1..200),
        p in 0.0f64..=1.0,
    ) {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = quantile(&values, p).unwrap();
        let want = quantile_oracle(&values, p);
        prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn rmsle_dominates_male_on_random_prices(
        pairs in proptest::collection::vec((0.01f64..1e4, 0.01f64..1e4), 1..60),
    ) {
        let preds: Vec<f64> = pairs.iter().map(|(a, _)| *a).collect();
        let solds: Vec<f64> = pairs.iter().map(|(_, b)| *b).collect();
        let m = male(&preds, &solds).unwrap();
        let r = rmsle(&preds, &solds).unwrap();
        prop_assert!(r + 1e-12 >= m);
    }

    #[test]
    fn metrics_are_invariant_to_common_rescaling(
        pairs in proptest::collection::vec((0.01f64..1e4, 0.01f64..1e4), 1..40),
        scale in 0.01f64..100.0,
    ) {
        let preds: Vec<f64> = pairs.iter().map(|(a, _)| *a).collect();
        let solds: Vec<f64> = pairs.iter().map(|(_, b)| *b).collect();
        let preds_scaled: Vec<f64> = preds.iter().map(|p| p * scale).collect();
        let solds_scaled: Vec<f64> = solds.iter().map(|s| s * scale).collect();
        prop_assert!((male(&preds, &solds).unwrap() - male(&preds_scaled, &solds_scaled).unwrap()).abs() < 1e-12);
        prop_assert!((rmsle(&preds, &solds).unwrap() - rmsle(&preds_scaled, &solds_scaled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn trim_is_idempotent_at_zero_and_bounded(
        prices in proptest::collection::vec(0.01f64..1e5, 1..150),
        fraction in 0.0f64..0.9,
    ) {
        let table = table_from_prices(&prices);
        let trimmed = trim_outliers(&table, fraction).unwrap();
        let again = trim_outliers(&trimmed, 0.0).unwrap();
        prop_assert_eq!(&again, &trimmed);
        let n = prices.len() as f64;
        prop_assert!(trimmed.len() as f64 >= n * (1.0 - fraction) - 2.0);
    }

    #[test]
    fn stat_index_ignores_row_order(
        prices in proptest::collection::vec(0.01f64..1e5, 1..80),
        rotation in 0usize..80,
    ) {
        let table = table_from_prices(&prices);
        let mut rotated = table.rows().to_vec();
        let k = rotation % rotated.len().max(1);
        rotated.rotate_left(k);
        let a = build_stat_index(&table).unwrap();
        let b = build_stat_index(&TransactionTable::new(rotated).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn auc_stays_in_unit_interval(
        rows in proptest::collection::vec((0.0f64..1.0, proptest::bool::ANY), 2..120),
    ) {
        let scores: Vec<f64> = rows.iter().map(|(s, _)| *s).collect();
        let flags: Vec<bool> = rows.iter().map(|(_, f)| *f).collect();
        if flags.iter().any(|f| *f) && flags.iter().any(|f| !*f) {
            let auc = auc_from_scores(&scores, &flags).unwrap();
            prop_assert!((0.0..=1.0).contains(&auc));
        }
    }
}
