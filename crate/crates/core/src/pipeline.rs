//! Data pipeline: transaction ingestion, outlier trimming, the log
//! transform, historical price statistics, example assembly, and the
//! train/validation/test split.
//!
//! The statistics index is always built over *log* prices and, to avoid
//! leakage, from training rows only; validation and test examples are
//! assembled against the frozen training index.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{ListingExample, StatFeatures, StatSummary, STAT_FEATURE_COUNT};

/// One raw transaction record.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionRow {
    pub item_id: String,
    pub seller_id: String,
    pub category_id: u32,
    pub sold_price: f64,
    pub visual_features: Vec<f64>,
}

/// A batch of transactions sharing one visual-feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionTable {
    rows: Vec<TransactionRow>,
    visual_dim: usize,
}

impl TransactionTable {
    pub fn new(rows: Vec<TransactionRow>) -> Result<Self> {
        let visual_dim = rows.first().map_or(0, |r| r.visual_features.len());
        for row in &rows {
            if row.visual_features.len() != visual_dim {
                return Err(Error::DimensionMismatch {
                    context: "visual features",
                    expected: visual_dim,
                    got: row.visual_features.len(),
                });
            }
            if !row.sold_price.is_finite() || row.sold_price <= 0.0 {
                return Err(Error::NonPositivePrice(row.sold_price));
            }
        }
        Ok(TransactionTable { rows, visual_dim })
    }

    pub fn rows(&self) -> &[TransactionRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn visual_dim(&self) -> usize {
        self.visual_dim
    }
}

/// Historical log-price statistics: global, per category, per seller.
#[derive(Debug, Clone, PartialEq)]
pub struct StatIndex {
    pub global: StatSummary,
    pub per_category: BTreeMap<u32, StatSummary>,
    pub per_seller: BTreeMap<String, StatSummary>,
}

/// Natural log of a positive price.
pub fn log_transform(price: f64) -> Result<f64> {
    if !price.is_finite() || price <= 0.0 {
        return Err(Error::NonPositivePrice(price));
    }
    Ok(price.ln())
}

/// Linear interpolation between closest ranks on an ascending-sorted list:
/// h = (n-1)p, result = v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)]).
pub fn quantile(sorted: &[f64], p: f64) -> Result<f64> {
    assert!((0.0..=1.0).contains(&p), "quantile p out of [0, 1]");
    debug_assert!(
        sorted.windows(2).all(|w| w[0] <= w[1]),
        "quantile input must be sorted ascending"
    );
    if sorted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return Ok(sorted[n - 1]);
    }
    Ok(sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo]))
}

/// Drop the floor(n*fraction/2) lowest- and highest-priced rows. Ties are
/// broken by a stable sort on (price, item_id); surviving rows keep their
/// original order.
pub fn trim_outliers(table: &TransactionTable, fraction: f64) -> Result<TransactionTable> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::BadFraction(fraction));
    }
    let n = table.len();
    let cut = ((n as f64) * fraction / 2.0).floor() as usize;
    if cut == 0 {
        return Ok(table.clone());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ra = &table.rows[a];
        let rb = &table.rows[b];
        ra.sold_price
            .partial_cmp(&rb.sold_price)
            .expect("prices are finite")
            .then_with(|| ra.item_id.cmp(&rb.item_id))
    });
    let mut keep = vec![true; n];
    for &i in &order[..cut] {
        keep[i] = false;
    }
    for &i in &order[n - cut..] {
        keep[i] = false;
    }
    let rows = table
        .rows
        .iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(_, r)| r.clone())
        .collect();
    TransactionTable::new(rows)
}

fn summarize_sorted(sorted: &[f64]) -> Result<StatSummary> {
    if sorted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Ok(StatSummary {
        q1: quantile(sorted, 0.25)?,
        q2: quantile(sorted, 0.5)?,
        q3: quantile(sorted, 0.75)?,
        mean,
    })
}

/// Compute (q1, q2, q3, mean) of log prices globally, per category, and
/// per seller. Deterministic and invariant under input row permutation.
pub fn build_stat_index(table: &TransactionTable) -> Result<StatIndex> {
    if table.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut global: Vec<f64> = Vec::with_capacity(table.len());
    let mut by_category: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut by_seller: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in table.rows() {
        let lp = log_transform(row.sold_price)?;
        global.push(lp);
        by_category.entry(row.category_id).or_default().push(lp);
        by_seller.entry(row.seller_id.clone()).or_default().push(lp);
    }
    global.sort_by(|a, b| a.partial_cmp(b).expect("log prices are finite"));
    let mut per_category = BTreeMap::new();
    for (cat, mut vals) in by_category {
        vals.sort_by(|a, b| a.partial_cmp(b).expect("log prices are finite"));
        per_category.insert(cat, summarize_sorted(&vals)?);
    }
    let mut per_seller = BTreeMap::new();
    for (seller, mut vals) in by_seller {
        vals.sort_by(|a, b| a.partial_cmp(b).expect("log prices are finite"));
        per_seller.insert(seller, summarize_sorted(&vals)?);
    }
    Ok(StatIndex {
        global: summarize_sorted(&global)?,
        per_category,
        per_seller,
    })
}

/// Fetch the 12 statistics for a (category, seller) pair. Groups missing
/// from the index fall back to the global summary; this never fails.
pub fn lookup_stats(idx: &StatIndex, category_id: u32, seller_id: &str) -> StatFeatures {
    StatFeatures {
        global: idx.global,
        category: idx.per_category.get(&category_id).copied().unwrap_or(idx.global),
        seller: idx.per_seller.get(seller_id).copied().unwrap_or(idx.global),
    }
}

/// Build model-ready examples: input = visual features ++ looked-up stats,
/// target = ln(sold_price).
pub fn assemble(table: &TransactionTable, idx: &StatIndex) -> Result<Vec<ListingExample>> {
    let mut out = Vec::with_capacity(table.len());
    for row in table.rows() {
        let stats = lookup_stats(idx, row.category_id, &row.seller_id).to_vec();
        let mut input = Vec::with_capacity(row.visual_features.len() + STAT_FEATURE_COUNT);
        input.extend_from_slice(&row.visual_features);
        input.extend_from_slice(&stats);
        out.push(ListingExample {
            item_id: row.item_id.clone(),
            seller_id: row.seller_id.clone(),
            category_id: row.category_id,
            sold_price: row.sold_price,
            log_price: log_transform(row.sold_price)?,
            visual_features: row.visual_features.clone(),
            stat_features: stats,
            input,
        });
    }
    Ok(out)
}

/// Seeded shuffle followed by a contiguous cut into train/validation/test.
/// The partition is exact: no overlap, union equals the input.
pub fn split<T: Clone>(
    items: &[T],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let (r_train, r_val, r_test) = ratios;
    if r_train < 0.0 || r_val < 0.0 || r_test < 0.0 || (r_train + r_val + r_test - 1.0).abs() > 1e-9
    {
        return Err(Error::BadRatios(r_train, r_val, r_test));
    }
    let n = items.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = ((n as f64) * r_train).round().min(n as f64) as usize;
    let n_val = (((n as f64) * r_val).round() as usize).min(n - n_train);
    let train = order[..n_train].iter().map(|&i| items[i].clone()).collect();
    let val = order[n_train..n_train + n_val]
        .iter()
        .map(|&i| items[i].clone())
        .collect();
    let test = order[n_train + n_val..]
        .iter()
        .map(|&i| items[i].clone())
        .collect();
    Ok((train, val, test))
}

/// Sample skewness m3 / m2^1.5 using population moments.
pub fn skewness(values: &[f64]) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::DegenerateInput("skewness needs at least 3 values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return Err(Error::DegenerateInput("skewness needs nonzero variance"));
    }
    Ok(m3 / m2.powf(1.5))
}

// --- transactions CSV ------------------------------------------------------

fn csv_header(visual_dim: usize) -> String {
    let mut header = String::from("item_id,seller_id,category_id,sold_price");
    for i in 0..visual_dim {
        header.push_str(&format!(",f{i}"));
    }
    header
}

/// Write the canonical transactions CSV (LF line endings, shortest
/// round-trip decimal floats).
pub fn write_transactions_csv<W: Write>(table: &TransactionTable, mut w: W) -> Result<()> {
    writeln!(w, "{}", csv_header(table.visual_dim()))?;
    for row in table.rows() {
        write!(
            w,
            "{},{},{},{}",
            row.item_id, row.seller_id, row.category_id, row.sold_price
        )?;
        for v in &row.visual_features {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Read a transactions CSV produced by [`write_transactions_csv`] (or any
/// file matching the documented header).
pub fn read_transactions_csv<R: BufRead>(r: R) -> Result<TransactionTable> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("missing header".into()))??;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 4 || cols[..4] != ["item_id", "seller_id", "category_id", "sold_price"] {
        return Err(Error::Parse(format!("unexpected header `{header}`")));
    }
    let visual_dim = cols.len() - 4;
    for (i, c) in cols[4..].iter().enumerate() {
        if *c != format!("f{i}") {
            return Err(Error::Parse(format!("unexpected feature column `{c}`")));
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + visual_dim {
            return Err(Error::Parse(format!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                4 + visual_dim,
                fields.len()
            )));
        }
        let category_id = fields[2]
            .parse::<u32>()
            .map_err(|e| Error::Parse(format!("line {}: category: {e}", lineno + 2)))?;
        let sold_price = fields[3]
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("line {}: price: {e}", lineno + 2)))?;
        let mut visual_features = Vec::with_capacity(visual_dim);
        for f in &fields[4..] {
            visual_features.push(
                f.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: feature: {e}", lineno + 2)))?,
            );
        }
        rows.push(TransactionRow {
            item_id: fields[0].to_string(),
            seller_id: fields[1].to_string(),
            category_id,
            sold_price,
            visual_features,
        });
    }
    TransactionTable::new(rows)
}

// --- stat index persistence -------------------------------------------------

/// 17 significant digits: exact round trip for every finite f64.
pub fn format_f64_exact(v: f64) -> String {
    format!("{v:.16e}")
}

fn summary_entries(prefix: &str, s: &StatSummary, out: &mut BTreeMap<String, String>) {
    out.insert(format!("{prefix}.q1"), format_f64_exact(s.q1));
    out.insert(format!("{prefix}.q2"), format_f64_exact(s.q2));
    out.insert(format!("{prefix}.q3"), format_f64_exact(s.q3));
    out.insert(format!("{prefix}.mean"), format_f64_exact(s.mean));
}

impl StatIndex {
    /// Flatten to sorted key=value entries (the persisted representation).
    pub fn to_key_values(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        summary_entries("global", &self.global, &mut out);
        for (cat, s) in &self.per_category {
            summary_entries(&format!("category.{cat}"), s, &mut out);
        }
        for (seller, s) in &self.per_seller {
            summary_entries(&format!("seller.{seller}"), s, &mut out);
        }
        out
    }

    pub fn from_key_values<'a, I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut groups: BTreeMap<String, [Option<f64>; 4]> = BTreeMap::new();
        for (key, value) in entries {
            let (prefix, field) = key
                .rsplit_once('.')
                .ok_or_else(|| Error::Parse(format!("bad stat key `{key}`")))?;
            let slot = match field {
                "q1" => 0,
                "q2" => 1,
                "q3" => 2,
                "mean" => 3,
                other => return Err(Error::Parse(format!("bad stat field `{other}`"))),
            };
            let v = value
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("stat value for `{key}`: {e}")))?;
            groups.entry(prefix.to_string()).or_default()[slot] = Some(v);
        }
        let take = |slots: &[Option<f64>; 4], key: &str| -> Result<StatSummary> {
            let get = |i: usize| {
                slots[i].ok_or_else(|| Error::Parse(format!("incomplete stat group `{key}`")))
            };
            Ok(StatSummary {
                q1: get(0)?,
                q2: get(1)?,
                q3: get(2)?,
                mean: get(3)?,
            })
        };
        let mut global = None;
        let mut per_category = BTreeMap::new();
        let mut per_seller = BTreeMap::new();
        for (key, slots) in &groups {
            let summary = take(slots, key)?;
            if key == "global" {
                global = Some(summary);
            } else if let Some(cat) = key.strip_prefix("category.") {
                let id = cat
                    .parse::<u32>()
                    .map_err(|e| Error::Parse(format!("category key `{key}`: {e}")))?;
                per_category.insert(id, summary);
            } else if let Some(seller) = key.strip_prefix("seller.") {
                per_seller.insert(seller.to_string(), summary);
            } else {
                return Err(Error::Parse(format!("unknown stat group `{key}`")));
            }
        }
        Ok(StatIndex {
            global: global.ok_or_else(|| Error::Parse("missing global stats".into()))?,
            per_category,
            per_seller,
        })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in self.to_key_values() {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut entries = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad stat line `{line}`")))?;
            entries.push((k.to_string(), v.to_string()));
        }
        StatIndex::from_key_values(entries.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(item: &str, seller: &str, cat: u32, price: f64, feats: &[f64]) -> TransactionRow {
        TransactionRow {
            item_id: item.to_string(),
            seller_id: seller.to_string(),
            category_id: cat,
            sold_price: price,
            visual_features: feats.to_vec(),
        }
    }

    fn table_of_prices(prices: &[f64]) -> TransactionTable {
        let rows = prices
            .iter()
            .enumerate()
            .map(|(i, &p)| row(&format!("item{i:04}"), "s0", 1, p, &[0.0]))
            .collect();
        TransactionTable::new(rows).unwrap()
    }

    #[test]
    fn log_transform_known_values() {
        assert_eq!(log_transform(1.0).unwrap(), 0.0);
        assert!((log_transform(std::f64::consts::E.powi(2)).unwrap() - 2.0).abs() < 1e-12);
        assert!((log_transform(100.0).unwrap() - 4.605170185988092).abs() < 1e-12);
        assert!(matches!(log_transform(-5.0), Err(Error::NonPositivePrice(_))));
        assert!(matches!(log_transform(0.0), Err(Error::NonPositivePrice(_))));
    }

    #[test]
    fn quantile_interpolates_between_closest_ranks() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25).unwrap(), 1.75);
        assert_eq!(quantile(&v, 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 4.0);
        assert_eq!(quantile(&[7.0], 0.3).unwrap(), 7.0);
        assert!(matches!(quantile(&[], 0.5), Err(Error::EmptyInput)));
    }

    #[test]
    fn trim_removes_two_per_tail_on_hundred_rows() {
        let prices: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let table = table_of_prices(&prices);
        let trimmed = trim_outliers(&table, 0.05).unwrap();
        assert_eq!(trimmed.len(), 96);
        let survived: Vec<f64> = trimmed.rows().iter().map(|r| r.sold_price).collect();
        assert!(survived.iter().all(|&p| (3.0..=98.0).contains(&p)));
    }

    #[test]
    fn trim_fraction_zero_is_identity() {
        let table = table_of_prices(&[5.0, 1.0, 3.0]);
        let trimmed = trim_outliers(&table, 0.0).unwrap();
        assert_eq!(trimmed, table);
    }

    #[test]
    fn trim_rejects_bad_fraction() {
        let table = table_of_prices(&[1.0, 2.0]);
        assert!(matches!(trim_outliers(&table, 1.0), Err(Error::BadFraction(_))));
        assert!(matches!(trim_outliers(&table, -0.1), Err(Error::BadFraction(_))));
    }

    #[test]
    fn trim_preserves_original_order() {
        let table = table_of_prices(&[50.0, 1.0, 30.0, 100.0, 40.0, 20.0, 60.0, 2.0, 70.0, 80.0]);
        let trimmed = trim_outliers(&table, 0.2).unwrap();
        let kept: Vec<f64> = trimmed.rows().iter().map(|r| r.sold_price).collect();
        assert_eq!(kept, vec![50.0, 30.0, 40.0, 20.0, 60.0, 2.0, 70.0, 80.0]);
        let trimmed = trim_outliers(&table, 0.4).unwrap();
        let kept: Vec<f64> = trimmed.rows().iter().map(|r| r.sold_price).collect();
        assert_eq!(kept, vec![50.0, 30.0, 40.0, 20.0, 60.0, 70.0]);
    }

    #[test]
    fn stat_index_on_single_row_is_degenerate() {
        let table = table_of_prices(&[std::f64::consts::E.powi(2)]);
        let idx = build_stat_index(&table).unwrap();
        for s in [idx.global, idx.per_category[&1], idx.per_seller["s0"]] {
            assert!((s.q1 - 2.0).abs() < 1e-12);
            assert!((s.q2 - 2.0).abs() < 1e-12);
            assert!((s.q3 - 2.0).abs() < 1e-12);
            assert!((s.mean - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stat_index_per_category_means() {
        let e2 = std::f64::consts::E.powi(2);
        let rows = vec![
            row("a", "s0", 1, 1.0, &[0.0]),
            row("b", "s1", 1, e2, &[0.0]),
            row("c", "s2", 2, 1.0, &[0.0]),
        ];
        let idx = build_stat_index(&TransactionTable::new(rows).unwrap()).unwrap();
        assert!((idx.per_category[&1].mean - 1.0).abs() < 1e-12);
        assert!((idx.per_category[&2].mean - 0.0).abs() < 1e-12);
    }

    #[test]
    fn stat_index_global_quartiles() {
        let prices: Vec<f64> = [0.0f64, 1.0, 2.0, 3.0].iter().map(|l| l.exp()).collect();
        let idx = build_stat_index(&table_of_prices(&prices)).unwrap();
        assert!((idx.global.q1 - 0.75).abs() < 1e-12);
        assert!((idx.global.q2 - 1.5).abs() < 1e-12);
        assert!((idx.global.q3 - 2.25).abs() < 1e-12);
        assert!((idx.global.mean - 1.5).abs() < 1e-12);
    }

    #[test]
    fn stat_index_invariant_under_permutation() {
        let rows: Vec<TransactionRow> = (0..50)
            .map(|i| {
                row(
                    &format!("item{i}"),
                    &format!("s{}", i % 7),
                    1 + (i % 5) as u32,
                    1.0 + i as f64,
                    &[0.0],
                )
            })
            .collect();
        let mut shuffled = rows.clone();
        shuffled.reverse();
        shuffled.swap(3, 17);
        let a = build_stat_index(&TransactionTable::new(rows).unwrap()).unwrap();
        let b = build_stat_index(&TransactionTable::new(shuffled).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lookup_falls_back_to_global() {
        let table = table_of_prices(&[1.0, 2.0, 4.0]);
        let idx = build_stat_index(&table).unwrap();
        let known = lookup_stats(&idx, 1, "s0");
        assert_eq!(known.category, idx.per_category[&1]);
        assert_eq!(known.seller, idx.per_seller["s0"]);
        let unseen_seller = lookup_stats(&idx, 1, "nobody");
        assert_eq!(unseen_seller.seller, idx.global);
        let unseen_both = lookup_stats(&idx, 9, "nobody");
        assert_eq!(unseen_both.category, idx.global);
        assert_eq!(unseen_both.seller, idx.global);
        assert_eq!(unseen_both.global, idx.global);
        assert!(unseen_both.to_vec().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn assemble_concatenates_visual_then_stats() {
        let rows = vec![row("a", "s0", 1, 1.0, &[9.0, 8.0, 7.0])];
        let table = TransactionTable::new(rows).unwrap();
        let idx = build_stat_index(&table).unwrap();
        let examples = assemble(&table, &idx).unwrap();
        let e = &examples[0];
        assert_eq!(e.input.len(), 3 + STAT_FEATURE_COUNT);
        assert_eq!(&e.input[..3], &[9.0, 8.0, 7.0]);
        assert_eq!(&e.input[3..], e.stat_features.as_slice());
        assert_eq!(e.log_price, 0.0);
        assert!(crate::types::validate_example(e).is_ok());
    }

    #[test]
    fn assemble_uses_global_fallback_for_unseen_seller() {
        let train = TransactionTable::new(vec![row("a", "s0", 1, 2.0, &[0.0])]).unwrap();
        let idx = build_stat_index(&train).unwrap();
        let test = TransactionTable::new(vec![row("b", "s9", 1, 3.0, &[0.0])]).unwrap();
        let examples = assemble(&test, &idx).unwrap();
        assert_eq!(examples[0].stat_features[8..12], examples[0].stat_features[0..4]);
    }

    #[test]
    fn split_is_exact_and_deterministic() {
        let items: Vec<u32> = (0..1000).collect();
        let (a1, b1, c1) = split(&items, (0.8, 0.1, 0.1), 42).unwrap();
        let (a2, b2, c2) = split(&items, (0.8, 0.1, 0.1), 42).unwrap();
        assert_eq!((a1.clone(), b1.clone(), c1.clone()), (a2, b2, c2));
        assert_eq!(a1.len() + b1.len() + c1.len(), 1000);
        let mut all: Vec<u32> = a1.iter().chain(&b1).chain(&c1).copied().collect();
        all.sort_unstable();
        assert_eq!(all, items);
        let (d, _, _) = split(&items, (0.8, 0.1, 0.1), 43).unwrap();
        assert_ne!(a1, d);
    }

    #[test]
    fn split_all_to_train() {
        let items: Vec<u32> = (0..10).collect();
        let (train, val, test) = split(&items, (1.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(train.len(), 10);
        assert!(val.is_empty() && test.is_empty());
    }

    #[test]
    fn split_reproduces_reference_corpus_counts() {
        // 1016445 rows at 3-decimal ratios land within the ratio rounding
        // slack (0.0005 * n) of the reference 892414/26451/97580 partition.
        let n = 1016445usize;
        let items: Vec<u32> = (0..n as u32).collect();
        let (train, val, test) = split(&items, (0.878, 0.026, 0.096), 7).unwrap();
        let slack = (n as f64 * 0.0005) as i64 + 1;
        assert!((train.len() as i64 - 892414).abs() <= slack);
        assert!((val.len() as i64 - 26451).abs() <= slack);
        assert!((test.len() as i64 - 97580).abs() <= slack);
    }

    #[test]
    fn split_rejects_bad_ratios() {
        let items = [1, 2, 3];
        assert!(matches!(split(&items, (0.5, 0.2, 0.2), 1), Err(Error::BadRatios(..))));
        assert!(matches!(split(&items, (-0.1, 0.6, 0.5), 1), Err(Error::BadRatios(..))));
    }

    #[test]
    fn skewness_signs() {
        assert_eq!(skewness(&[-1.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(skewness(&[0.0, 0.0, 0.0, 10.0]).unwrap() > 0.0);
        assert!(matches!(skewness(&[1.0, 2.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(skewness(&[2.0, 2.0, 2.0]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn log_compresses_lognormal_tail() {
        // exp(N(0,1)) draws: the raw values are far more skewed than their logs.
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let logs: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let raw: Vec<f64> = logs.iter().map(|l: &f64| l.exp()).collect();
        let skew_raw = skewness(&raw).unwrap();
        let skew_log = skewness(&logs).unwrap();
        assert!(skew_raw.abs() > 5.0 * skew_log.abs());
    }

    #[test]
    fn transactions_csv_round_trip() {
        let rows = vec![
            row("item0", "s0", 1, 19.99, &[0.5, -1.25]),
            row("item1", "s1", 13, 0.125, &[2.0, 3.5]),
        ];
        let table = TransactionTable::new(rows).unwrap();
        let mut buf = Vec::new();
        write_transactions_csv(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("item_id,seller_id,category_id,sold_price,f0,f1\n"));
        let back = read_transactions_csv(&buf[..]).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn transactions_csv_rejects_bad_header() {
        let data = b"item,seller\nx,y\n";
        assert!(matches!(read_transactions_csv(&data[..]), Err(Error::Parse(_))));
    }

    #[test]
    fn stat_index_file_round_trip() {
        let table = table_of_prices(&[1.5, 2.5, 100.0, 7.0, 0.25]);
        let idx = build_stat_index(&table).unwrap();
        let mut buf = Vec::new();
        idx.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let keys: Vec<&str> = text.lines().map(|l| l.split('=').next().unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
        let back = StatIndex::read(&buf[..]).unwrap();
        assert_eq!(back, idx);
    }
}
