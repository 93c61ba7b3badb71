//! Command implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;

use pricegate_core::eval::{
    gate_auc, gate_report, sweep, sweep_rows_to_csv, sweep_rows_to_table,
};
use pricegate_core::pipeline::{
    assemble, build_stat_index, read_transactions_csv, split, trim_outliers, StatIndex,
    TransactionTable,
};
use pricegate_core::synth::{generate, read_truth_csv, write_truth_csv, SynthConfig};
use pricegate_core::trainer::{
    desk_schedule, reference_schedule, parse_schedule, save_checkpoint, train, train_no_warmup,
    write_epoch_log_csv, TrainConfig,
};
use pricegate_core::types::{ConstraintMode, ObjectiveConfig};
use pricegate_core::ListingExample;

use crate::cli::{
    Cli, Command, EvalArgs, PredictArgs, ServeArgs, StatsArgs, SweepArgs, SynthArgs, TrainArgs,
};
use crate::config::{resolve, Resolved};
use crate::service::{price_response, ModelState, PriceRequest};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exit code 2.
    Usage(String),
    /// Failure while doing the work: exit code 1.
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(err: E) -> Self {
        CliError::Runtime(err.into())
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Serve(args) => cmd_serve(args),
    }
}

/// `out` names either a directory (trailing slash or existing dir) or a
/// CSV path; the truth sidecar sits next to the CSV.
fn synth_paths(out: &Path) -> (PathBuf, PathBuf) {
    let csv = if out.extension().is_some_and(|e| e == "csv") && !out.is_dir() {
        out.to_path_buf()
    } else {
        out.join("transactions.csv")
    };
    let truth = csv.with_extension("truth.csv");
    (csv, truth)
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let common = resolve(&args.common)?;
    let cfg = SynthConfig {
        n: args.n,
        d_v: args.d_v,
        n_categories: args.n_categories,
        n_sellers: args.n_sellers,
        noise_fraction: args.noise_fraction,
        noise_sigma: args.noise_sigma,
        seed: common.seed.unwrap_or(7),
    };
    let out = generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let out_path = common.out.unwrap_or_else(|| PathBuf::from("data"));
    let (csv_path, truth_path) = synth_paths(&out_path);
    if let Some(parent) = csv_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).context("creating output directory")?;
        }
    }
    let mut csv = BufWriter::new(File::create(&csv_path).context("creating transactions CSV")?);
    pricegate_core::pipeline::write_transactions_csv(&out.table, &mut csv)?;
    csv.flush().context("flushing transactions CSV")?;
    let mut truth = BufWriter::new(File::create(&truth_path).context("creating truth sidecar")?);
    write_truth_csv(&out, &mut truth)?;
    truth.flush().context("flushing truth sidecar")?;
    println!(
        "wrote {} rows to {} (ground truth: {})",
        out.table.len(),
        csv_path.display(),
        truth_path.display()
    );
    Ok(())
}

fn read_table(path: &Path) -> Result<TransactionTable, CliError> {
    let file = File::open(path)
        .with_context(|| format!("opening transactions CSV {}", path.display()))?;
    Ok(read_transactions_csv(BufReader::new(file))?)
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let common = resolve(&args.common)?;
    let table = read_table(&args.data)?;
    let table = trim_outliers(&table, args.trim_fraction)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let idx = build_stat_index(&table)?;
    let out_path = common.out.unwrap_or_else(|| PathBuf::from("stats.txt"));
    let mut w = BufWriter::new(File::create(&out_path).context("creating stats file")?);
    idx.write(&mut w)?;
    w.flush().context("flushing stats file")?;
    println!(
        "indexed {} rows: {} categories, {} sellers -> {}",
        table.len(),
        idx.per_category.len(),
        idx.per_seller.len(),
        out_path.display()
    );
    Ok(())
}

/// Mode/constants resolution shared by train and sweep. Threshold mode
/// without epsilon is a usage error.
fn resolve_objective(common: &Resolved) -> Result<ObjectiveConfig, CliError> {
    let mode = match common.mode.as_deref() {
        None => ConstraintMode::Percentile,
        Some(s) => ConstraintMode::parse(s).map_err(|e| CliError::Usage(e.to_string()))?,
    };
    let beta = common.beta.unwrap_or(1.0);
    let objective = match mode {
        ConstraintMode::Percentile => ObjectiveConfig::Percentile {
            delta: common.delta.unwrap_or(0.5),
            beta,
        },
        ConstraintMode::Threshold => {
            let epsilon = common.epsilon.ok_or_else(|| {
                CliError::Usage("--epsilon is required in threshold mode".to_string())
            })?;
            ObjectiveConfig::Threshold {
                delta: common.delta.unwrap_or(0.1),
                beta,
                gamma: common.gamma.unwrap_or(1.0),
                epsilon,
            }
        }
    };
    objective.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(objective)
}

fn parse_f64_list(s: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("{flag}: `{v}`: {e}")))
        })
        .collect()
}

fn parse_usize_list(s: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| CliError::Usage(format!("{flag}: `{v}`: {e}")))
        })
        .collect()
}

struct PreparedData {
    train_set: Vec<ListingExample>,
    val_set: Vec<ListingExample>,
    test_set: Vec<ListingExample>,
    stat_index: StatIndex,
}

/// Trim, split, index the training rows only, and assemble all three
/// splits against that frozen index.
fn prepare(
    data: &Path,
    trim_fraction: f64,
    ratios_arg: &str,
    seed: u64,
) -> Result<PreparedData, CliError> {
    let table = read_table(data)?;
    let table =
        trim_outliers(&table, trim_fraction).map_err(|e| CliError::Usage(e.to_string()))?;
    let ratios = parse_f64_list(ratios_arg, "--ratios")?;
    if ratios.len() != 3 {
        return Err(CliError::Usage("--ratios needs exactly three values".to_string()));
    }
    let rows = table.rows().to_vec();
    let (train_rows, val_rows, test_rows) =
        split(&rows, (ratios[0], ratios[1], ratios[2]), seed)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    let train_table = TransactionTable::new(train_rows)?;
    let stat_index = build_stat_index(&train_table)?;
    Ok(PreparedData {
        train_set: assemble(&train_table, &stat_index)?,
        val_set: assemble(&TransactionTable::new(val_rows)?, &stat_index)?,
        test_set: assemble(&TransactionTable::new(test_rows)?, &stat_index)?,
        stat_index,
    })
}

fn build_train_config(
    objective: ObjectiveConfig,
    batch_size: usize,
    hidden: &str,
    schedule: Option<&str>,
    use_reference_schedule: bool,
    no_standardize: bool,
    seed: u64,
) -> Result<TrainConfig, CliError> {
    let schedule = match (schedule, use_reference_schedule) {
        (Some(_), true) => {
            return Err(CliError::Usage(
                "--schedule and --reference-schedule are mutually exclusive".to_string(),
            ));
        }
        (Some(s), false) => parse_schedule(s).map_err(|e| CliError::Usage(e.to_string()))?,
        (None, true) => reference_schedule(),
        (None, false) => desk_schedule(),
    };
    Ok(TrainConfig {
        objective,
        batch_size,
        schedule,
        seed,
        standardize: !no_standardize,
        hidden_dims: parse_usize_list(hidden, "--hidden")?,
    })
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let common = resolve(&args.common)?;
    let objective = resolve_objective(&common)?;
    let seed = common.seed.unwrap_or(0);
    let cfg = build_train_config(
        objective,
        args.batch_size,
        &args.hidden,
        args.schedule.as_deref(),
        args.reference_schedule,
        args.no_standardize,
        seed,
    )?;
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let data = prepare(&args.data, args.trim_fraction, &args.ratios, seed)?;
    let run = if args.no_warmup {
        train_no_warmup(&data.train_set, &data.val_set, &data.stat_index, &cfg)?
    } else {
        train(&data.train_set, &data.val_set, &data.stat_index, &cfg)?
    };

    let out_path = common.out.unwrap_or_else(|| PathBuf::from("model.gprc"));
    let crc = save_checkpoint(&run.checkpoint, &out_path)?;
    let log_path = args
        .log
        .unwrap_or_else(|| out_path.with_extension("log.csv"));
    let mut log = BufWriter::new(File::create(&log_path).context("creating epoch log")?);
    write_epoch_log_csv(&run.log, &mut log)?;
    log.flush().context("flushing epoch log")?;

    if let Some(last) = run.log.last() {
        println!(
            "trained {} epochs; final train loss {:.6}{}",
            run.log.len(),
            last.train_loss,
            last.val_report
                .as_ref()
                .map(|r| format!(", validation positive fraction {:.4}", r.positive_fraction))
                .unwrap_or_default()
        );
    }
    if !data.test_set.is_empty() {
        let report = gate_report(&run.checkpoint, &data.test_set)?;
        println!(
            "held-out: {} of {} positive ({:.2}%), MALE {}, RMSLE {}",
            report.n_positive,
            report.n_total,
            report.positive_fraction * 100.0,
            report.male.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            report.rmsle.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
        );
    }
    println!("checkpoint {} (crc32 {crc:08x}), log {}", out_path.display(), log_path.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let _ = resolve(&args.common)?;
    let state = ModelState::load(&args.checkpoint)?;
    let table = read_table(&args.data)?;
    let examples = assemble(&table, &state.checkpoint.stat_index)?;
    let report = gate_report(&state.checkpoint, &examples)?;
    let auc = match &args.truth {
        None => None,
        Some(path) => {
            let file = File::open(path)
                .with_context(|| format!("opening truth sidecar {}", path.display()))?;
            let truth = read_truth_csv(BufReader::new(file))?;
            let by_item: std::collections::HashMap<&str, bool> =
                truth.iter().map(|(item, q)| (item.as_str(), *q)).collect();
            let flags: Vec<bool> = examples
                .iter()
                .map(|e| {
                    by_item.get(e.item_id.as_str()).copied().ok_or_else(|| {
                        CliError::Usage(format!("truth sidecar is missing item `{}`", e.item_id))
                    })
                })
                .collect::<Result<_, _>>()?;
            Some(gate_auc(&state.checkpoint, &examples, &flags)?)
        }
    };
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
    match args.format.as_str() {
        "csv" => {
            println!("n_total,n_positive,positive_fraction,male,rmsle,gate_auc");
            println!(
                "{},{},{},{},{},{}",
                report.n_total,
                report.n_positive,
                report.positive_fraction,
                report.male.map(|v| v.to_string()).unwrap_or_default(),
                report.rmsle.map(|v| v.to_string()).unwrap_or_default(),
                auc.map(|v| v.to_string()).unwrap_or_default(),
            );
        }
        "table" => {
            println!("items evaluated    {}", report.n_total);
            println!("gate positives     {} ({:.2}%)", report.n_positive, report.positive_fraction * 100.0);
            println!("MALE (positives)   {}", fmt_opt(report.male));
            println!("RMSLE (positives)  {}", fmt_opt(report.rmsle));
            if let Some(auc) = auc {
                println!("gate AUC           {auc:.4}");
            }
        }
        other => return Err(CliError::Usage(format!("unknown format `{other}`"))),
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let common = resolve(&args.common)?;
    let objective = resolve_objective(&common)?;
    let seed = common.seed.unwrap_or(0);
    let cfg = build_train_config(
        objective,
        args.batch_size,
        &args.hidden,
        args.schedule.as_deref(),
        args.reference_schedule,
        args.no_standardize,
        seed,
    )?;
    let mut values = parse_f64_list(&args.values, "--values")?;
    if values.is_empty() {
        return Err(CliError::Usage("--values needs at least one value".to_string()));
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite sweep values"));
    let data = prepare(&args.data, args.trim_fraction, &args.ratios, seed)?;
    let rows = sweep(
        &data.train_set,
        &data.val_set,
        &data.test_set,
        &data.stat_index,
        &cfg,
        &values,
    )?;
    let rendered = match args.format.as_str() {
        "csv" => sweep_rows_to_csv(&rows),
        "table" => sweep_rows_to_table(&rows),
        other => return Err(CliError::Usage(format!("unknown format `{other}`"))),
    };
    match common.out {
        Some(path) => {
            std::fs::write(&path, rendered).context("writing sweep report")?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let _ = resolve(&args.common)?;
    let state = ModelState::load(&args.checkpoint)?;
    let features = parse_f64_list(&args.features, "--features")?;
    let request = PriceRequest {
        visual_features: features,
        category_id: args.category_id,
        seller_id: args.seller_id.clone(),
    };
    let response = price_response(&state, &request)?;
    match args.format.as_str() {
        "json" => println!("{}", serde_json::to_string(&response).context("serializing response")?),
        "table" => {
            println!("qualified  {}", response.qualified);
            println!("score      {:.4}", response.score);
            // Display rounding only; the wire format stays unrounded.
            match response.suggested_price {
                Some(p) => println!("price      {p:.2}"),
                None => println!("price      - (image not qualified for a suggestion)"),
            }
            println!("model      {}", response.model_version);
        }
        other => return Err(CliError::Usage(format!("unknown format `{other}`"))),
    }
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<(), CliError> {
    let _ = resolve(&args.common)?;
    let state = Arc::new(ModelState::load(&args.checkpoint)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")?;
    runtime.block_on(crate::service::serve(state, &args.bind))?;
    Ok(())
}
