//! Contrastive record encoder.
//!
//! Records are randomly masked (between 1 and n−1 columns) twice; a
//! feed-forward network is trained so that the two maskings of a record are
//! each other's most similar pair, under cosine similarity, among the
//! records of a batch. The trained network maps unmasked records to unit
//! vectors, giving a metric space for distance scoring and outlier search.

mod loss;
mod network;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, stream_seed, Stream, StreamRng};
use crate::tabular::{
    Encoding, EncodedMatrix, ModelInput, ModelInputEncoder, Slot, TabularDataset,
};

pub use loss::{contrastive_loss, contrastive_loss_with_grad, LossOutput, NORM_EPS};
pub use network::{BatchInput, Layout, LAYER_NORM_EPS};

const CHECKPOINT_VERSION: u32 = 1;
const EMBED_CHUNK: usize = 4096;

/// Dataset families with a conventional embedding width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corpus {
    Adult,
    Texas,
    Census,
}

impl Corpus {
    pub fn embedding_dim(self) -> usize {
        match self {
            Corpus::Adult => 10,
            Corpus::Texas => 20,
            Corpus::Census => 30,
        }
    }
}

impl std::str::FromStr for Corpus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adult" => Ok(Corpus::Adult),
            "texas" => Ok(Corpus::Texas),
            "census" => Ok(Corpus::Census),
            _ => Err(Error::Parameter(format!("unknown corpus {s}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub embedding_dim: usize,
    pub hidden_layers: Vec<usize>,
    pub dropout_p: f64,
    pub temperature: f64,
    /// Width of every categorical embedding. `None` uses
    /// min(16, ⌈cardinality/2⌉ + 1) per column.
    pub categorical_embed_dim: Option<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_window: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            embedding_dim: 10,
            hidden_layers: vec![1024, 1024, 1024],
            dropout_p: 0.1,
            temperature: 0.1,
            categorical_embed_dim: None,
            learning_rate: 1e-3,
            batch_size: 1024,
            max_epochs: 300,
            early_stop_window: 20,
            early_stop_patience: 10,
            seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn for_corpus(corpus: Corpus) -> Self {
        EncoderConfig {
            embedding_dim: corpus.embedding_dim(),
            ..EncoderConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.embedding_dim < 2 {
            return bad(format!("embedding dimension must be >= 2, got {}", self.embedding_dim));
        }
        if self.hidden_layers.contains(&0) {
            return bad("hidden layer widths must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout_p));
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be positive".into());
        }
        if self.categorical_embed_dim == Some(0) {
            return bad("categorical embedding width must be positive".into());
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive".into());
        }
        if self.batch_size < 2 {
            return bad("batch size must be at least 2".into());
        }
        if self.max_epochs == 0 || self.early_stop_window == 0 || self.early_stop_patience == 0 {
            return bad("epoch counts must be positive".into());
        }
        Ok(())
    }

    fn embed_dims(&self, cardinality: &[usize]) -> Vec<usize> {
        cardinality
            .iter()
            .map(|&c| {
                self.categorical_embed_dim
                    .unwrap_or_else(|| 16.min(c.div_ceil(2) + 1))
            })
            .collect()
    }
}

/// Draws a random mask over `n_columns` columns: the number of masked
/// columns is uniform on 1..=n−1 and the masked set is uniform among sets of
/// that size.
pub fn mask_record<R: Rng>(n_columns: usize, rng: &mut R) -> Result<Vec<bool>> {
    if n_columns < 2 {
        return Err(Error::Schema(format!(
            "masking needs at least 2 columns, got {n_columns}"
        )));
    }
    let k = rng.random_range(1..n_columns);
    let mut mask = vec![false; n_columns];
    for j in index::sample(rng, n_columns, k) {
        mask[j] = true;
    }
    Ok(mask)
}

/// Network input of one record with a column mask applied.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedRecord {
    pub numeric: Vec<f64>,
    pub categorical: Vec<u32>,
    pub mask: Vec<bool>,
}

impl MaskedRecord {
    pub fn new(input: &ModelInput, row: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != input.slots.len() {
            return Err(Error::Parameter("mask length differs from column count".into()));
        }
        let mut numeric = input.numeric.values.row(row).to_vec();
        let mut categorical = input.categorical.row(row).to_vec();
        for (slot, &masked) in input.slots.iter().zip(&mask) {
            if !masked {
                continue;
            }
            match *slot {
                Slot::Numeric(k) => {
                    numeric[2 * k] = 0.0;
                    numeric[2 * k + 1] = 1.0;
                }
                Slot::Categorical(k) => categorical[k] = input.mask_token(k),
            }
        }
        Ok(MaskedRecord {
            numeric,
            categorical,
            mask,
        })
    }
}

fn batch_from_records(records: &[MaskedRecord]) -> BatchInput {
    let b = records.len();
    let nn = records.first().map_or(0, |r| r.numeric.len());
    let nc = records.first().map_or(0, |r| r.categorical.len());
    BatchInput {
        numeric: Array2::from_shape_fn((b, nn), |(i, j)| records[i].numeric[j]),
        categorical: Array2::from_shape_fn((b, nc), |(i, j)| records[i].categorical[j]),
    }
}

/// Batch of `rows`, each with a fresh random mask.
pub fn masked_batch<R: Rng>(input: &ModelInput, rows: &[usize], rng: &mut R) -> Result<BatchInput> {
    let records = rows
        .iter()
        .map(|&r| MaskedRecord::new(input, r, mask_record(input.slots.len(), rng)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(batch_from_records(&records))
}

fn unmasked_batch(input: &ModelInput, rows: std::ops::Range<usize>) -> BatchInput {
    BatchInput {
        numeric: input.numeric.values.slice(ndarray::s![rows.clone(), ..]).to_owned(),
        categorical: input.categorical.slice(ndarray::s![rows, ..]).to_owned(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    config: EncoderConfig,
    encoder: ModelInputEncoder,
    embed_dims: Vec<usize>,
    layout: Layout,
    params: Vec<f64>,
}

/// Loss, accuracy and parameter gradient of one contrastive batch.
#[derive(Debug, Clone)]
pub struct BatchGradient {
    pub loss: f64,
    pub accuracy: f64,
    pub gradient: Vec<f64>,
}

impl EmbeddingModel {
    /// Randomly initialized model for datasets shaped like `fit`.
    pub fn new(fit: &TabularDataset, config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let encoder = ModelInputEncoder::fit(fit)?;
        let cardinality = encoder.cardinality();
        let n_numeric = encoder
            .slots()
            .iter()
            .filter(|s| matches!(s, Slot::Numeric(_)))
            .count();
        let embed_dims = config.embed_dims(&cardinality);
        let layout = Layout::new(
            &cardinality,
            &embed_dims,
            n_numeric,
            &config.hidden_layers,
            config.embedding_dim,
        );
        let mut rng = rng_from_seed(stream_seed(config.seed, Stream::Train));
        let params = layout.init(&mut rng);
        Ok(EmbeddingModel {
            config,
            encoder,
            embed_dims,
            layout,
            params,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn encoder(&self) -> &ModelInputEncoder {
        &self.encoder
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn encode_input(&self, ds: &TabularDataset) -> Result<ModelInput> {
        self.encoder.encode(ds)
    }

    /// Raw (unnormalized) embedding of a batch. `dropout_rng` enables
    /// training-mode dropout.
    pub fn forward_batch(&self, batch: &BatchInput, dropout_rng: Option<&mut StreamRng>) -> Array2<f64> {
        let dropout = dropout_rng.map(|rng| (self.config.dropout_p, rng));
        network::forward(&self.layout, &self.params, batch, dropout).output
    }

    /// Raw embedding of a single masked record.
    pub fn forward(&self, record: &MaskedRecord, training: bool, rng: &mut StreamRng) -> Vec<f64> {
        let batch = batch_from_records(std::slice::from_ref(record));
        let out = self.forward_batch(&batch, training.then_some(rng));
        out.row(0).to_vec()
    }

    /// Contrastive loss between two views of the same records and its exact
    /// gradient with respect to every parameter. Both views go through the
    /// network as one stacked batch; `dropout_seed` fixes the dropout masks.
    pub fn loss_and_gradient(
        &self,
        view1: &BatchInput,
        view2: &BatchInput,
        dropout_seed: Option<u64>,
    ) -> Result<BatchGradient> {
        let b = view1.len();
        if view2.len() != b {
            return Err(Error::Parameter("views differ in batch size".into()));
        }
        let stacked = view1.stack(view2);
        let mut rng = dropout_seed.map(rng_from_seed);
        let cache = network::forward(
            &self.layout,
            &self.params,
            &stacked,
            rng.as_mut().map(|r| (self.config.dropout_p, r)),
        );
        let out = &cache.output;
        let v1 = out.slice(ndarray::s![..b, ..]);
        let v2 = out.slice(ndarray::s![b.., ..]);
        let lo = contrastive_loss_with_grad(v1, v2, self.config.temperature)?;
        let upstream = ndarray::concatenate(
            ndarray::Axis(0),
            &[lo.grad_view1.view(), lo.grad_view2.view()],
        )
        .unwrap();
        let mut gradient = vec![0.0; self.layout.total];
        network::backward(&self.layout, &self.params, &cache, &upstream, &mut gradient);
        Ok(BatchGradient {
            loss: lo.loss,
            accuracy: lo.accuracy,
            gradient,
        })
    }

    /// Gradient of Σ upstream ⊙ output for an arbitrary upstream matrix.
    pub fn output_gradient(&self, batch: &BatchInput, upstream: &Array2<f64>) -> Vec<f64> {
        let cache = network::forward::<StreamRng>(&self.layout, &self.params, batch, None);
        let mut gradient = vec![0.0; self.layout.total];
        network::backward(&self.layout, &self.params, &cache, upstream, &mut gradient);
        gradient
    }

    /// Unit-norm embedding of every record, unmasked and without dropout.
    pub fn embed_dataset(&self, ds: &TabularDataset) -> Result<EncodedMatrix> {
        let input = self.encoder.encode(ds)?;
        let n = input.n_rows();
        let mut values = Array2::<f64>::zeros((n, self.config.embedding_dim));
        for start in (0..n).step_by(EMBED_CHUNK) {
            let end = (start + EMBED_CHUNK).min(n);
            let out = self.forward_batch(&unmasked_batch(&input, start..end), None);
            values.slice_mut(ndarray::s![start..end, ..]).assign(&out);
        }
        for mut row in values.outer_iter_mut() {
            let norm = row.dot(&row).sqrt();
            row /= norm + NORM_EPS;
        }
        Ok(EncodedMatrix {
            values,
            column_map: Vec::new(),
            encoding: Encoding::Embedded,
        })
    }

    /// Mean loss and accuracy over freshly masked pairs, dropout off.
    fn evaluate(&self, input: &ModelInput, mask_rng: &mut StreamRng) -> Result<(f64, f64)> {
        let n = input.n_rows();
        let (mut loss, mut acc, mut weight) = (0.0, 0.0, 0usize);
        let rows: Vec<usize> = (0..n).collect();
        for chunk in rows.chunks(self.config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let v1 = masked_batch(input, chunk, mask_rng)?;
            let v2 = masked_batch(input, chunk, mask_rng)?;
            let out = self.forward_batch(&v1.stack(&v2), None);
            let b = chunk.len();
            let (l, a) = contrastive_loss(
                out.slice(ndarray::s![..b, ..]),
                out.slice(ndarray::s![b.., ..]),
                self.config.temperature,
            )?;
            loss += l * b as f64;
            acc += a * b as f64;
            weight += b;
        }
        Ok((loss / weight as f64, acc / weight as f64))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            toolkit: crate::VERSION.to_string(),
            schema_fingerprint: self.encoder.schema_fingerprint().to_string(),
            config: self.config.clone(),
            encoder: self.encoder.clone(),
            categorical_embed_dims: self.embed_dims.clone(),
            parameters: self.params.clone(),
        };
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut w, &ckpt)?;
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        if ckpt.schema_fingerprint != ckpt.encoder.schema_fingerprint() {
            return Err(Error::Checkpoint("schema fingerprint does not match encoder".into()));
        }
        ckpt.config.validate()?;
        let cardinality = ckpt.encoder.cardinality();
        if ckpt.categorical_embed_dims.len() != cardinality.len() {
            return Err(Error::Checkpoint("embedding widths do not match schema".into()));
        }
        let n_numeric = ckpt
            .encoder
            .slots()
            .iter()
            .filter(|s| matches!(s, Slot::Numeric(_)))
            .count();
        let layout = Layout::new(
            &cardinality,
            &ckpt.categorical_embed_dims,
            n_numeric,
            &ckpt.config.hidden_layers,
            ckpt.config.embedding_dim,
        );
        if layout.total != ckpt.parameters.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameters, found {}",
                layout.total,
                ckpt.parameters.len()
            )));
        }
        Ok(EmbeddingModel {
            config: ckpt.config,
            encoder: ckpt.encoder,
            embed_dims: ckpt.categorical_embed_dims,
            layout,
            params: ckpt.parameters,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    toolkit: String,
    schema_fingerprint: String,
    config: EncoderConfig,
    encoder: ModelInputEncoder,
    categorical_embed_dims: Vec<usize>,
    parameters: Vec<f64>,
}

/// Adam with bias correction.
struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(lr: f64, n: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch (1-based) whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainLog {
    pub fn best(&self) -> Option<&EpochLog> {
        self.epochs.get(self.best_epoch.checked_sub(1)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "train_loss", "val_loss", "val_acc", "seconds"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.val_loss.to_string(),
                e.val_acc.to_string(),
                e.seconds.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Splits off a seeded validation share of `ds` (rounded down, at least 2
/// rows) for training.
pub fn validation_split(
    ds: &TabularDataset,
    fraction: f64,
    seed: u64,
) -> Result<(TabularDataset, TabularDataset)> {
    let n = ds.len();
    let n_val = ((fraction * n as f64).floor() as usize).max(2);
    if n < n_val + 2 {
        return Err(Error::Insufficient(format!(
            "{n} rows cannot be split into training and validation sets"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    Ok((
        ds.subset(&order[n_val..], "train"),
        ds.subset(&order[..n_val], "validation"),
    ))
}

/// Trains an encoder with Adam on freshly masked pairs, keeping the
/// parameters with the best moving-average validation loss.
///
/// Early stopping: after each epoch the mean validation loss over the last
/// `early_stop_window` epochs is compared with the best such mean so far;
/// training stops once it has failed to improve for `early_stop_patience`
/// consecutive epochs.
pub fn train(
    train_set: &TabularDataset,
    validation_set: &TabularDataset,
    config: &EncoderConfig,
) -> Result<(EmbeddingModel, TrainLog)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if train_set.len() < 2 {
        return Err(Error::Insufficient("training needs at least 2 rows".into()));
    }
    if validation_set.len() < 2 {
        return Err(Error::Insufficient("validation needs at least 2 rows".into()));
    }
    train_set.schema().check_compatible(validation_set.schema())?;
    if train_set.n_columns() < 2 {
        return Err(Error::Schema("masking needs at least 2 columns".into()));
    }

    let mut model = EmbeddingModel::new(train_set, config.clone())?;
    let train_input = model.encoder.encode(train_set)?;
    let val_input = model.encoder.encode(validation_set)?;

    let mut shuffle_rng = rng_from_seed(derive_seed(config.seed, &[1]));
    let mut mask_rng = rng_from_seed(stream_seed(config.seed, Stream::Mask));
    let mut val_mask_rng = rng_from_seed(derive_seed(config.seed, &[2]));
    let mut dropout_rng = rng_from_seed(derive_seed(config.seed, &[3]));
    let mut adam = Adam::new(config.learning_rate, model.layout.total);

    let mut log = TrainLog::default();
    let mut history: Vec<f64> = Vec::new();
    let mut best_smoothed = f64::INFINITY;
    let mut best_params = model.params.clone();
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train_input.n_rows()).collect();

    for epoch in 1..=config.max_epochs {
        let start = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut count) = (0.0, 0usize);
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let v1 = masked_batch(&train_input, chunk, &mut mask_rng)?;
            let v2 = masked_batch(&train_input, chunk, &mut mask_rng)?;
            let seed = dropout_rng.random::<u64>();
            let step = model.loss_and_gradient(&v1, &v2, Some(seed))?;
            adam.step(&mut model.params, &step.gradient);
            loss_sum += step.loss * chunk.len() as f64;
            count += chunk.len();
        }
        let (val_loss, val_acc) = model.evaluate(&val_input, &mut val_mask_rng)?;
        log.epochs.push(EpochLog {
            epoch,
            train_loss: loss_sum / count.max(1) as f64,
            val_loss,
            val_acc,
            seconds: start.elapsed().as_secs_f64(),
        });

        history.push(val_loss);
        let window = &history[history.len().saturating_sub(config.early_stop_window)..];
        let smoothed = window.iter().sum::<f64>() / window.len() as f64;
        if smoothed < best_smoothed {
            best_smoothed = smoothed;
            best_params.clone_from(&model.params);
            log.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.early_stop_patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    model.params = best_params;
    Ok((model, log))
}

/// Risk point estimate and confidence half-width from a downstream metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub risk: f64,
    pub ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dim: usize,
    pub risk: f64,
    pub ci: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Dimension with the largest risk point estimate.
    pub best_dim: usize,
}

impl SweepTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["embedding_dim", "risk", "ci", "val_loss", "val_acc"])?;
        for r in &self.rows {
            w.write_record([
                r.dim.to_string(),
                r.risk.to_string(),
                r.ci.to_string(),
                r.val_loss.to_string(),
                r.val_acc.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Trains one encoder per embedding dimension and scores each with
/// `evaluate`.
pub fn sweep_embedding_dim<F>(
    train_set: &TabularDataset,
    validation_set: &TabularDataset,
    dims: &[usize],
    base: &EncoderConfig,
    mut evaluate: F,
) -> Result<SweepTable>
where
    F: FnMut(&EmbeddingModel) -> Result<RiskEstimate>,
{
    if dims.is_empty() {
        return Err(Error::Parameter("no embedding dimensions to sweep".into()));
    }
    let mut rows = Vec::with_capacity(dims.len());
    for &dim in dims {
        let config = EncoderConfig {
            embedding_dim: dim,
            ..base.clone()
        };
        let (model, log) = train(train_set, validation_set, &config)?;
        let best = log.best().cloned().ok_or(Error::Empty("training log"))?;
        let est = evaluate(&model)?;
        rows.push(SweepRow {
            dim,
            risk: est.risk,
            ci: est.ci,
            val_loss: best.val_loss,
            val_acc: best.val_acc,
        });
    }
    let best_dim = rows
        .iter()
        .fold(None::<&SweepRow>, |best, r| match best {
            Some(b) if b.risk >= r.risk => Some(b),
            _ => Some(r),
        })
        .map(|r| r.dim)
        .unwrap();
    Ok(SweepTable { rows, best_dim })
}
