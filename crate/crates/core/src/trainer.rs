//! Warm-up two-stage joint training, input standardization, and
//! checkpoint persistence.
//!
//! Stage one (`warmup`) trains the regressor ungated on every sample;
//! stage two (`joint`) trains the full gated objective. Optimizer moments
//! are carried across stages. All shuffling derives from the run seed and
//! the epoch index alone, so any epoch's batches can be reproduced.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::report_from_log_predictions;
use crate::nn::{AdamState, MlpModel, Role};
use crate::objective::{hard_loss, soft_loss};
use crate::pipeline::StatIndex;
use crate::types::{GateReport, ListingExample, ObjectiveConfig, STAT_FEATURE_COUNT};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"GPRC1\n";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Warmup,
    Joint,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Warmup => "warmup",
            Stage::Joint => "joint",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "warmup" => Ok(Stage::Warmup),
            "joint" => Ok(Stage::Joint),
            other => Err(Error::BadSchedule(format!("unknown stage `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulePhase {
    pub stage: Stage,
    pub lr: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub objective: ObjectiveConfig,
    pub batch_size: usize,
    pub schedule: Vec<SchedulePhase>,
    pub seed: u64,
    pub standardize: bool,
    pub hidden_dims: Vec<usize>,
}

impl TrainConfig {
    pub fn new(objective: ObjectiveConfig) -> Self {
        TrainConfig {
            objective,
            batch_size: 4096,
            schedule: desk_schedule(),
            seed: 0,
            standardize: true,
            hidden_dims: vec![64, 32],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        if self.batch_size == 0 {
            return Err(Error::BadConfig("batch_size must be >= 1".into()));
        }
        if self.schedule.is_empty() {
            return Err(Error::BadSchedule("schedule has no phases".into()));
        }
        for phase in &self.schedule {
            if !phase.lr.is_finite() || phase.lr <= 0.0 {
                return Err(Error::BadSchedule(format!("lr must be > 0, got {}", phase.lr)));
            }
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::BadConfig("hidden dims must be positive".into()));
        }
        Ok(())
    }
}

/// Desk-scale default: the reference schedule shape at 1/85 of its length.
pub fn desk_schedule() -> Vec<SchedulePhase> {
    vec![
        SchedulePhase { stage: Stage::Warmup, lr: 0.0005, epochs: 20 },
        SchedulePhase { stage: Stage::Warmup, lr: 0.0002, epochs: 10 },
        SchedulePhase { stage: Stage::Joint, lr: 0.0005, epochs: 40 },
        SchedulePhase { stage: Stage::Joint, lr: 0.0002, epochs: 20 },
    ]
}

/// The full-size reference schedule (1,700 + 850 warm-up epochs, then
/// 3,400 + 1,700 joint epochs).
pub fn reference_schedule() -> Vec<SchedulePhase> {
    vec![
        SchedulePhase { stage: Stage::Warmup, lr: 0.0005, epochs: 1700 },
        SchedulePhase { stage: Stage::Warmup, lr: 0.0002, epochs: 850 },
        SchedulePhase { stage: Stage::Joint, lr: 0.0005, epochs: 3400 },
        SchedulePhase { stage: Stage::Joint, lr: 0.0002, epochs: 1700 },
    ]
}

/// Expand the phase list into one (epoch, stage, lr) entry per epoch.
pub fn make_schedule(cfg: &TrainConfig) -> Result<Vec<(usize, Stage, f64)>> {
    cfg.validate()?;
    let mut flat = Vec::new();
    for phase in &cfg.schedule {
        for _ in 0..phase.epochs {
            flat.push((flat.len(), phase.stage, phase.lr));
        }
    }
    Ok(flat)
}

/// `stage:lr:epochs` triples joined by commas.
pub fn format_schedule(schedule: &[SchedulePhase]) -> String {
    schedule
        .iter()
        .map(|p| format!("{}:{}:{}", p.stage.as_str(), p.lr, p.epochs))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_schedule(s: &str) -> Result<Vec<SchedulePhase>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            return Err(Error::BadSchedule(format!("expected stage:lr:epochs, got `{part}`")));
        }
        out.push(SchedulePhase {
            stage: Stage::parse(fields[0])?,
            lr: fields[1]
                .parse()
                .map_err(|e| Error::BadSchedule(format!("lr in `{part}`: {e}")))?,
            epochs: fields[2]
                .parse()
                .map_err(|e| Error::BadSchedule(format!("epochs in `{part}`: {e}")))?,
        });
    }
    Ok(out)
}

/// Per-feature affine normalization fitted on training inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyData);
        }
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(*row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(*row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd < 1e-12 {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    /// Pass-through transform for `standardize = false` runs.
    pub fn identity(dim: usize) -> Self {
        Standardizer { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Everything prediction needs: both models, input normalization, the
/// training-time stat index, and the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub classifier: MlpModel,
    pub regressor: MlpModel,
    pub classifier_adam: AdamState,
    pub regressor_adam: AdamState,
    pub standardizer: Standardizer,
    pub config: TrainConfig,
    pub stat_index: StatIndex,
    pub format_version: u32,
}

/// One gate decision plus (for accepted items) the suggested price.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictOutcome {
    pub qualified: bool,
    pub score: f64,
    pub suggested_price: Option<f64>,
}

impl Checkpoint {
    pub fn visual_dim(&self) -> usize {
        self.classifier.input_dim() - STAT_FEATURE_COUNT
    }

    /// Score a raw request: look up stats (with global fallback), assemble
    /// and standardize the input, gate, and price if accepted.
    pub fn predict(
        &self,
        visual_features: &[f64],
        category_id: u32,
        seller_id: &str,
    ) -> Result<PredictOutcome> {
        if visual_features.len() != self.visual_dim() {
            return Err(Error::DimensionMismatch {
                context: "request features",
                expected: self.visual_dim(),
                got: visual_features.len(),
            });
        }
        let stats = crate::pipeline::lookup_stats(&self.stat_index, category_id, seller_id);
        let mut input = Vec::with_capacity(self.classifier.input_dim());
        input.extend_from_slice(visual_features);
        input.extend_from_slice(&stats.to_vec());
        let x = self.standardizer.apply(&input);
        let score = self.classifier.predict(&x)?;
        if crate::objective::indicator_c1(score) {
            let log_pred = self.regressor.predict(&x)?;
            Ok(PredictOutcome {
                qualified: true,
                score,
                suggested_price: Some(log_pred.exp()),
            })
        } else {
            Ok(PredictOutcome { qualified: false, score, suggested_price: None })
        }
    }
}

/// One row of the per-epoch training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub stage: Stage,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_report: Option<GateReport>,
}

/// Write the epoch log CSV. The leading comment line records that
/// optimizer moments are carried across stages.
pub fn write_epoch_log_csv<W: Write>(logs: &[EpochLog], mut w: W) -> Result<()> {
    writeln!(w, "# adam moments carried across stages")?;
    writeln!(w, "epoch,stage,lr,train_loss,val_loss,val_positive_fraction,val_male,val_rmsle")?;
    for log in logs {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            log.epoch,
            log.stage.as_str(),
            log.lr,
            log.train_loss,
            opt(log.val_loss),
            opt(log.val_report.as_ref().map(|r| r.positive_fraction)),
            opt(log.val_report.as_ref().and_then(|r| r.male)),
            opt(log.val_report.as_ref().and_then(|r| r.rmsle)),
        )?;
    }
    Ok(())
}

/// A finished training run.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
}

fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 over seed ^ label.
    let mut z = (seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent mean-squared-error used to cross-check the warm-up
/// surrogate each batch; deliberately not routed through the loss module.
fn plain_mse(preds: &[f64], targets: &[f64]) -> f64 {
    let n = preds.len() as f64;
    preds.iter().zip(targets).map(|(p, y)| (y - p) * (y - p)).sum::<f64>() / n
}

fn standardized_inputs(
    examples: &[ListingExample],
    standardizer: &Standardizer,
) -> Vec<Vec<f64>> {
    examples.iter().map(|e| standardizer.apply(&e.input)).collect()
}

/// Train the gate and the regressor jointly per the configured schedule.
/// Validation metrics (hard loss and gate report) are logged every epoch
/// when a validation set is provided.
pub fn train(
    train_set: &[ListingExample],
    val_set: &[ListingExample],
    stat_index: &StatIndex,
    cfg: &TrainConfig,
) -> Result<TrainRun> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyData);
    }
    let input_dim = train_set[0].input.len();
    for e in train_set.iter().chain(val_set) {
        if e.input.len() != input_dim {
            return Err(Error::DimensionMismatch {
                context: "example input",
                expected: input_dim,
                got: e.input.len(),
            });
        }
    }

    let standardizer = if cfg.standardize {
        let rows: Vec<&[f64]> = train_set.iter().map(|e| e.input.as_slice()).collect();
        Standardizer::fit(&rows)?
    } else {
        Standardizer::identity(input_dim)
    };
    let x_train = standardized_inputs(train_set, &standardizer);
    let y_train: Vec<f64> = train_set.iter().map(|e| e.log_price).collect();
    let x_val = standardized_inputs(val_set, &standardizer);
    let y_val: Vec<f64> = val_set.iter().map(|e| e.log_price).collect();

    let mut dims = Vec::with_capacity(cfg.hidden_dims.len() + 2);
    dims.push(input_dim);
    dims.extend_from_slice(&cfg.hidden_dims);
    dims.push(1);
    let mut classifier = MlpModel::init(&dims, Role::Classifier, derive_seed(cfg.seed, 1))?;
    let mut regressor = MlpModel::init(&dims, Role::Regressor, derive_seed(cfg.seed, 2))?;
    let schedule = make_schedule(cfg)?;
    let first_lr = schedule.first().map_or(0.0005, |&(_, _, lr)| lr);
    let mut cls_adam = AdamState::new(&classifier, first_lr);
    let mut reg_adam = AdamState::new(&regressor, first_lr);

    let n = train_set.len();
    let mut log = Vec::with_capacity(schedule.len());
    for &(epoch, stage, lr) in &schedule {
        cls_adam.lr = lr;
        reg_adam.lr = lr;
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 3));
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            let rows: Vec<&[f64]> = batch.iter().map(|&i| x_train[i].as_slice()).collect();
            let targets: Vec<f64> = batch.iter().map(|&i| y_train[i]).collect();
            let (scores, cls_caches) = classifier.batch_forward(&rows)?;
            let (preds, reg_caches) = regressor.batch_forward(&rows)?;
            let gate_open = stage == Stage::Warmup;
            let soft = soft_loss(&scores, &preds, &targets, &cfg.objective, gate_open)?;
            if !soft.loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: batch_idx, value: soft.loss });
            }
            if gate_open && cfg.objective.mode() == crate::types::ConstraintMode::Percentile {
                let mse = plain_mse(&preds, &targets);
                assert!(
                    (soft.loss - mse).abs() <= 1e-9 * mse.abs().max(1.0),
                    "warm-up surrogate drifted from plain MSE: {} vs {mse}",
                    soft.loss
                );
            }
            let cls_grads = classifier.batch_gradients(&cls_caches, &soft.d_scores)?;
            let reg_grads = regressor.batch_gradients(&reg_caches, &soft.d_preds)?;
            cls_adam.step(&mut classifier, &cls_grads)?;
            reg_adam.step(&mut regressor, &reg_grads)?;
            loss_sum += soft.loss * batch.len() as f64;
        }
        let train_loss = loss_sum / n as f64;
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0, value: train_loss });
        }

        let (val_loss, val_report) = if val_set.is_empty() {
            (None, None)
        } else {
            let rows: Vec<&[f64]> = x_val.iter().map(|r| r.as_slice()).collect();
            let scores = classifier.batch_outputs(&rows)?;
            let preds = regressor.batch_outputs(&rows)?;
            let loss = hard_loss(&scores, &preds, &y_val, &cfg.objective)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: 0, value: loss });
            }
            let report = report_from_log_predictions(&scores, &preds, &y_val)?;
            (Some(loss), Some(report))
        };
        log.push(EpochLog { epoch, stage, lr, train_loss, val_loss, val_report });
    }

    Ok(TrainRun {
        checkpoint: Checkpoint {
            classifier,
            regressor,
            classifier_adam: cls_adam,
            regressor_adam: reg_adam,
            standardizer,
            config: cfg.clone(),
            stat_index: stat_index.clone(),
            format_version: CHECKPOINT_FORMAT_VERSION,
        },
        log,
    })
}

/// Ablation arm: identical total epoch budget, but every phase runs the
/// gated objective from the start.
pub fn train_no_warmup(
    train_set: &[ListingExample],
    val_set: &[ListingExample],
    stat_index: &StatIndex,
    cfg: &TrainConfig,
) -> Result<TrainRun> {
    let mut flat = cfg.clone();
    flat.schedule = cfg
        .schedule
        .iter()
        .map(|p| SchedulePhase { stage: Stage::Joint, ..*p })
        .collect();
    train(train_set, val_set, stat_index, &flat)
}

// --- checkpoint persistence --------------------------------------------------

fn push_f64_list(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    out.push('=');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&v.to_string());
    }
    out.push('\n');
}

fn dims_string(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

fn metadata_block(ckpt: &Checkpoint) -> String {
    let cfg = &ckpt.config;
    let mut meta = String::new();
    meta.push_str(&format!("format_version={}\n", ckpt.format_version));
    meta.push_str(&format!("mode={}\n", cfg.objective.mode().as_str()));
    meta.push_str(&format!("delta={}\n", cfg.objective.delta()));
    meta.push_str(&format!("beta={}\n", cfg.objective.beta()));
    meta.push_str(&format!("gamma={}\n", cfg.objective.gamma().unwrap_or(0.0)));
    meta.push_str(&format!("epsilon={}\n", cfg.objective.epsilon().unwrap_or(0.0)));
    meta.push_str(&format!("classifier_dims={}\n", dims_string(&ckpt.classifier.layer_dims)));
    meta.push_str(&format!("regressor_dims={}\n", dims_string(&ckpt.regressor.layer_dims)));
    meta.push_str(&format!("d_v={}\n", ckpt.visual_dim()));
    meta.push_str(&format!("standardize={}\n", cfg.standardize));
    push_f64_list(&mut meta, "standardize_mean", &ckpt.standardizer.mean);
    push_f64_list(&mut meta, "standardize_std", &ckpt.standardizer.std);
    meta.push_str(&format!("batch_size={}\n", cfg.batch_size));
    meta.push_str(&format!("seed={}\n", cfg.seed));
    meta.push_str(&format!("schedule={}\n", format_schedule(&cfg.schedule)));
    for (k, v) in ckpt.stat_index.to_key_values() {
        meta.push_str(&format!("stats.{k}={v}\n"));
    }
    meta
}

fn push_params_f32(buf: &mut Vec<u8>, model: &MlpModel) {
    for w in &model.weights {
        for &v in w {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    for b in &model.biases {
        for &v in b {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
}

/// Serialize to the checkpoint container: magic, UTF-8 metadata block,
/// blank line, little-endian f32 parameter blobs (classifier weights,
/// classifier biases, regressor weights, regressor biases), trailing CRC32
/// of everything prior. Returns the CRC.
pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<u32> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(metadata_block(ckpt).as_bytes());
    buf.push(b'\n');
    push_params_f32(&mut buf, &ckpt.classifier);
    push_params_f32(&mut buf, &ckpt.regressor);
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    std::fs::write(path, &buf)?;
    Ok(crc)
}

/// A checkpoint loaded from disk together with its verified checksum.
#[derive(Debug, Clone)]
pub struct LoadedCheckpoint {
    pub checkpoint: Checkpoint,
    pub checksum: u32,
}

fn parse_f64_list(s: &str, key: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("{key}: {e}"))))
        .collect()
}

fn parse_dims(s: &str, key: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| v.parse::<usize>().map_err(|e| Error::Parse(format!("{key}: {e}"))))
        .collect()
}

fn read_params_f32(
    bytes: &[u8],
    offset: &mut usize,
    dims: &[usize],
    role: Role,
) -> Result<MlpModel> {
    let mut take = |count: usize| -> Result<Vec<f64>> {
        let need = count * 4;
        if *offset + need > bytes.len() {
            return Err(Error::Parse("parameter blob truncated".into()));
        }
        let out = bytes[*offset..*offset + need]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        *offset += need;
        Ok(out)
    };
    let mut weights = Vec::with_capacity(dims.len() - 1);
    for l in 0..dims.len() - 1 {
        weights.push(take(dims[l] * dims[l + 1])?);
    }
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for l in 0..dims.len() - 1 {
        biases.push(take(dims[l + 1])?);
    }
    Ok(MlpModel { layer_dims: dims.to_vec(), weights, biases, role })
}

/// Read and verify a checkpoint. Optimizer moments are not persisted;
/// the returned Adam states are fresh.
pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < CHECKPOINT_MAGIC.len() || &bytes[..CHECKPOINT_MAGIC.len()] != CHECKPOINT_MAGIC
    {
        return Err(Error::BadMagic);
    }
    if bytes.len() < CHECKPOINT_MAGIC.len() + 4 {
        return Err(Error::ChecksumMismatch);
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let checksum = crc32fast::hash(body);
    if checksum != stored {
        return Err(Error::ChecksumMismatch);
    }

    let meta_start = CHECKPOINT_MAGIC.len();
    let rest = &body[meta_start..];
    let mut boundary = None;
    for i in 0..rest.len().saturating_sub(1) {
        if rest[i] == b'\n' && rest[i + 1] == b'\n' {
            boundary = Some(i + 1);
            break;
        }
    }
    let boundary = boundary.ok_or_else(|| Error::Parse("missing metadata terminator".into()))?;
    let meta_text = std::str::from_utf8(&rest[..boundary])
        .map_err(|e| Error::Parse(format!("metadata not UTF-8: {e}")))?;
    let mut meta = std::collections::BTreeMap::new();
    let mut stat_entries = Vec::new();
    for line in meta_text.lines() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad metadata line `{line}`")))?;
        if let Some(stat_key) = k.strip_prefix("stats.") {
            stat_entries.push((stat_key.to_string(), v.to_string()));
        } else {
            meta.insert(k.to_string(), v.to_string());
        }
    }
    let get = |key: &str| -> Result<&String> {
        meta.get(key).ok_or_else(|| Error::Parse(format!("missing metadata key `{key}`")))
    };

    let format_version: u32 = get("format_version")?
        .parse()
        .map_err(|e| Error::Parse(format!("format_version: {e}")))?;
    if format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::VersionMismatch(format_version));
    }
    let delta: f64 = get("delta")?.parse().map_err(|e| Error::Parse(format!("delta: {e}")))?;
    let beta: f64 = get("beta")?.parse().map_err(|e| Error::Parse(format!("beta: {e}")))?;
    let objective = match get("mode")?.as_str() {
        "percentile" => ObjectiveConfig::Percentile { delta, beta },
        "threshold" => ObjectiveConfig::Threshold {
            delta,
            beta,
            gamma: get("gamma")?.parse().map_err(|e| Error::Parse(format!("gamma: {e}")))?,
            epsilon: get("epsilon")?
                .parse()
                .map_err(|e| Error::Parse(format!("epsilon: {e}")))?,
        },
        other => return Err(Error::Parse(format!("unknown mode `{other}`"))),
    };
    let cls_dims = parse_dims(get("classifier_dims")?, "classifier_dims")?;
    let reg_dims = parse_dims(get("regressor_dims")?, "regressor_dims")?;
    let standardize: bool = get("standardize")?
        .parse()
        .map_err(|e| Error::Parse(format!("standardize: {e}")))?;
    let standardizer = Standardizer {
        mean: parse_f64_list(get("standardize_mean")?, "standardize_mean")?,
        std: parse_f64_list(get("standardize_std")?, "standardize_std")?,
    };
    if standardizer.mean.len() != cls_dims[0] || standardizer.std.len() != cls_dims[0] {
        return Err(Error::Parse("standardization vectors do not match input dim".into()));
    }
    let batch_size: usize =
        get("batch_size")?.parse().map_err(|e| Error::Parse(format!("batch_size: {e}")))?;
    let seed: u64 = get("seed")?.parse().map_err(|e| Error::Parse(format!("seed: {e}")))?;
    let schedule = parse_schedule(get("schedule")?)?;
    let stat_index = StatIndex::from_key_values(
        stat_entries.iter().map(|(k, v)| (k.as_str(), v.as_str())),
    )?;

    let blob = &body[meta_start + boundary + 1..];
    let mut offset = 0;
    let classifier = read_params_f32(blob, &mut offset, &cls_dims, Role::Classifier)?;
    let regressor = read_params_f32(blob, &mut offset, &reg_dims, Role::Regressor)?;
    if offset != blob.len() {
        return Err(Error::Parse("trailing bytes after parameter blobs".into()));
    }

    let hidden_dims = cls_dims[1..cls_dims.len() - 1].to_vec();
    let config = TrainConfig {
        objective,
        batch_size,
        schedule,
        seed,
        standardize,
        hidden_dims,
    };
    let first_lr = config.schedule.first().map_or(0.0005, |p| p.lr);
    let classifier_adam = AdamState::new(&classifier, first_lr);
    let regressor_adam = AdamState::new(&regressor, first_lr);
    Ok(LoadedCheckpoint {
        checkpoint: Checkpoint {
            classifier,
            regressor,
            classifier_adam,
            regressor_adam,
            standardizer,
            config,
            stat_index,
            format_version,
        },
        checksum,
    })
}
