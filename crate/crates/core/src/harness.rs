//! Experiment protocols.
//!
//! * Leaky evaluation: "synthetic" sets are assembled from a fraction of
//!   (optionally noised) training records and clean release records, so the
//!   true amount of leakage is known.
//! * Overfit evaluation: externally generated synthetic files labeled with an
//!   overfitting ratio are scored side by side.
//! * Timing profile: wall-clock of each metric against row count.
//!
//! Generators for a census-style demo table and a toy overfitting model are
//! included for tests and the command-line demo mode.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{run_singling_out, AttackConfig, Source};
use crate::dcr::{bootstrap_score, DistanceSpace, SpaceTag, DEFAULT_ALPHA_PERCENT, DEFAULT_BOOTSTRAP_RESAMPLES};
use crate::embedder::{train, validation_split, EmbeddingModel, EncoderConfig};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, stream_seed, Stream};
use crate::tabular::{
    load_csv, split, Cell, ColumnKind, ColumnSchema, Record, Schema, SplitSpec, TabularDataset,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonSign {
    /// Random ±1 sign per draw.
    #[default]
    Symmetric,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation of Gaussian noise on float columns.
    pub sigma: f64,
    /// Poisson rate of integer-column noise.
    pub lambda: f64,
    /// Probability of replacing a categorical value.
    pub p: f64,
    #[serde(default)]
    pub poisson_sign: PoissonSign,
}

impl NoiseSpec {
    pub fn new(sigma: f64, lambda: f64, p: f64) -> Self {
        NoiseSpec {
            sigma,
            lambda,
            p,
            poisson_sign: PoissonSign::Symmetric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Parameter(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Parameter(format!("p must lie in [0, 1], got {}", self.p)));
        }
        Ok(())
    }

    /// Every combination of σ, λ and p drawn from `levels`.
    pub fn grid(levels: &[f64]) -> Vec<NoiseSpec> {
        let mut out = Vec::with_capacity(levels.len().pow(3));
        for &sigma in levels {
            for &lambda in levels {
                for &p in levels {
                    out.push(NoiseSpec::new(sigma, lambda, p));
                }
            }
        }
        out
    }
}

/// Perturbs one record. Components with a zero parameter consume no
/// randomness and leave their cells bit-identical.
pub fn inject_noise<R: Rng>(record: &[Cell], schema: &Schema, spec: &NoiseSpec, rng: &mut R) -> Record {
    let gauss = (spec.sigma > 0.0).then(|| Normal::new(0.0, spec.sigma).unwrap());
    let poisson = (spec.lambda > 0.0).then(|| Poisson::new(spec.lambda).unwrap());
    record
        .iter()
        .zip(schema.columns())
        .map(|(&cell, col)| match (cell, col.kind) {
            (Cell::Num(v), ColumnKind::Float) => match &gauss {
                Some(g) => Cell::Num(v + g.sample(rng)),
                None => cell,
            },
            (Cell::Num(v), ColumnKind::Integer) => match &poisson {
                Some(pd) => {
                    let k: f64 = pd.sample(rng);
                    let sign = match spec.poisson_sign {
                        PoissonSign::Symmetric if rng.random_bool(0.5) => -1.0,
                        _ => 1.0,
                    };
                    Cell::Num(v + sign * k)
                }
                None => cell,
            },
            (Cell::Cat(c), ColumnKind::Categorical) => {
                let n = col.categories.len() as u32;
                if spec.p > 0.0 && n > 1 && rng.random_bool(spec.p) {
                    let other = rng.random_range(0..n - 1);
                    Cell::Cat(if other >= c { other + 1 } else { other })
                } else {
                    cell
                }
            }
            _ => cell,
        })
        .collect()
}

/// A set of |train| records: ⌊f_l·|train|⌋ noised training records and the
/// rest clean release records, all drawn without replacement and shuffled.
pub fn make_leaky<R: Rng>(
    train: &TabularDataset,
    release: &TabularDataset,
    leak_fraction: f64,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<TabularDataset> {
    if !(0.0..=1.0).contains(&leak_fraction) {
        return Err(Error::Parameter(format!(
            "leak fraction must lie in [0, 1], got {leak_fraction}"
        )));
    }
    noise.validate()?;
    train.schema().check_compatible(release.schema())?;
    let n = train.len();
    let n_leak = ((leak_fraction * n as f64 + 1e-9).floor() as usize).min(n);
    let n_clean = n - n_leak;
    if release.len() < n_clean {
        return Err(Error::Insufficient(format!(
            "{n_clean} release records needed, {} available",
            release.len()
        )));
    }
    let mut rows = Vec::with_capacity(n);
    for i in index::sample(rng, n, n_leak) {
        rows.push(inject_noise(train.row(i), train.schema(), noise, rng));
    }
    for i in index::sample(rng, release.len(), n_clean) {
        rows.push(release.row(i).clone());
    }
    rows.shuffle(rng);
    train.with_rows(rows, format!("leaky_{leak_fraction}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    /// Distance to closest record in the raw space.
    #[serde(rename = "DCR", alias = "dcr")]
    Dcr,
    /// Distance to closest record in the contrastive embedding space.
    #[serde(rename = "DCR+CL", alias = "dcr_cl")]
    DcrCl,
    /// Singling out with random targets.
    #[serde(rename = "SO", alias = "so")]
    So,
    /// Singling out targeting embedding outliers.
    #[serde(rename = "SO+CL", alias = "so_cl")]
    SoCl,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Dcr, Metric::DcrCl, Metric::So, Metric::SoCl];

    pub fn needs_embedding(self) -> bool {
        matches!(self, Metric::DcrCl | Metric::SoCl)
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Dcr => "DCR",
            Metric::DcrCl => "DCR+CL",
            Metric::So => "SO",
            Metric::SoCl => "SO+CL",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['+', '-'], "_").as_str() {
            "dcr" => Ok(Metric::Dcr),
            "dcr_cl" => Ok(Metric::DcrCl),
            "so" => Ok(Metric::So),
            "so_cl" => Ok(Metric::SoCl),
            _ => Err(Error::Parameter(format!("unknown metric {s}"))),
        }
    }
}

/// Parameters shared by every metric evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSettings {
    pub alpha_percent: f64,
    pub bootstrap_resamples: usize,
    /// Sources are set per metric; the remaining fields apply to both.
    pub attack: AttackConfig,
    pub encoder: EncoderConfig,
    pub validation_fraction: f64,
}

impl Default for MetricSettings {
    fn default() -> Self {
        MetricSettings {
            alpha_percent: DEFAULT_ALPHA_PERCENT,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            attack: AttackConfig::default(),
            encoder: EncoderConfig::default(),
            validation_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seconds: f64,
}

/// Trains an encoder on `train` with a held-out validation share.
pub fn fit_embedder(train_set: &TabularDataset, settings: &MetricSettings, seed: u64) -> Result<EmbeddingModel> {
    let (tr, va) = validation_split(train_set, settings.validation_fraction, derive_seed(seed, &[0]))?;
    let cfg = EncoderConfig {
        seed: stream_seed(seed, Stream::Train),
        ..settings.encoder.clone()
    };
    Ok(train(&tr, &va, &cfg)?.0)
}

/// Training and control sets with their embeddings, ready to score
/// synthetic sets.
pub struct Evaluator<'a> {
    train: &'a TabularDataset,
    control: &'a TabularDataset,
    settings: &'a MetricSettings,
    model: Option<&'a EmbeddingModel>,
    embedded: Option<(Array2<f64>, Array2<f64>)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        train: &'a TabularDataset,
        control: &'a TabularDataset,
        settings: &'a MetricSettings,
        model: Option<&'a EmbeddingModel>,
    ) -> Result<Self> {
        train.schema().check_compatible(control.schema())?;
        let embedded = match model {
            Some(m) => Some((m.embed_dataset(train)?.values, m.embed_dataset(control)?.values)),
            None => None,
        };
        Ok(Evaluator {
            train,
            control,
            settings,
            model,
            embedded,
        })
    }

    fn model(&self, metric: Metric) -> Result<&'a EmbeddingModel> {
        self.model
            .ok_or_else(|| Error::Parameter(format!("metric {metric} needs a trained encoder")))
    }

    pub fn evaluate(&self, metric: Metric, synthetic: &TabularDataset, seed: u64) -> Result<MetricValue> {
        let start = Instant::now();
        let (value, ci_lo, ci_hi) = match metric {
            Metric::Dcr | Metric::DcrCl => {
                let space = if metric == Metric::Dcr {
                    DistanceSpace::raw(synthetic, self.train, self.control)?
                } else {
                    let model = self.model(metric)?;
                    let (d1, d2) = self.embedded.as_ref().unwrap();
                    DistanceSpace {
                        tag: SpaceTag::Embedded,
                        synthetic: model.embed_dataset(synthetic)?.values,
                        d1: d1.clone(),
                        d2: d2.clone(),
                    }
                };
                let rep = bootstrap_score(
                    &space,
                    self.settings.alpha_percent,
                    self.settings.bootstrap_resamples,
                    stream_seed(seed, Stream::Bootstrap),
                )?;
                (rep.privacy_score, rep.bootstrap.lo95, rep.bootstrap.hi95)
            }
            Metric::So | Metric::SoCl => {
                let (source, emb) = if metric == Metric::So {
                    (Source::BaselineRandom, None)
                } else {
                    let model = self.model(metric)?;
                    (Source::EmbeddingOutlier, Some(model.embed_dataset(synthetic)?.values))
                };
                let cfg = AttackConfig {
                    sources: vec![source],
                    seed,
                    ..self.settings.attack.clone()
                };
                let rep = run_singling_out(
                    synthetic,
                    self.train,
                    self.control,
                    &cfg,
                    emb.as_ref().map(|e| e.view()),
                )?;
                let h = rep.headline.ok_or_else(|| {
                    Error::Insufficient("no configuration produced a risk estimate".into())
                })?;
                let (r, d) = (h.risk.unwrap(), h.d_risk.unwrap());
                (r, r - d, r + d)
            }
        };
        Ok(MetricValue {
            value,
            ci_lo,
            ci_hi,
            seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// One result of an experiment grid. Leaky rows fill the leak fraction and
/// noise fields; overfit rows fill `f_o` and `generator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub dataset: String,
    pub f_l: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub p: Option<f64>,
    pub f_o: Option<f64>,
    pub generator: Option<String>,
    pub metric: Metric,
    pub seed: u64,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub rows: Vec<GridRow>,
}

/// Mean of a metric over seeds at one grid coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub f_l: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub p: Option<f64>,
    pub f_o: Option<f64>,
    pub generator: Option<String>,
    pub metric: Metric,
    pub n_seeds: usize,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl ExperimentGrid {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.rows)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<GridRow>, _>>()?;
        Ok(ExperimentGrid { rows })
    }

    /// Rows of one metric.
    pub fn metric(&self, metric: Metric) -> impl Iterator<Item = &GridRow> {
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    /// Seed-averaged values and interval bounds per coordinate, in first-seen
    /// order. Rows with errors are left out.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: BTreeMap<String, Vec<&GridRow>> = BTreeMap::new();
        for row in self.rows.iter().filter(|r| r.error.is_none()) {
            let key = format!(
                "{}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{}",
                row.dataset, row.f_l, row.sigma, row.lambda, row.p, row.f_o, row.generator, row.metric
            );
            let group = groups.entry(key.clone()).or_default();
            if group.is_empty() {
                order.push(key);
            }
            group.push(row);
        }
        order
            .iter()
            .map(|k| {
                let rows = &groups[k];
                let n = rows.len() as f64;
                let first = rows[0];
                SummaryRow {
                    dataset: first.dataset.clone(),
                    f_l: first.f_l,
                    sigma: first.sigma,
                    lambda: first.lambda,
                    p: first.p,
                    f_o: first.f_o,
                    generator: first.generator.clone(),
                    metric: first.metric,
                    n_seeds: rows.len(),
                    mean: rows.iter().map(|r| r.value).sum::<f64>() / n,
                    ci_lo: rows.iter().map(|r| r.ci_lo).sum::<f64>() / n,
                    ci_hi: rows.iter().map(|r| r.ci_hi).sum::<f64>() / n,
                }
            })
            .collect()
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.summary())
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeakyConfig {
    pub dataset: String,
    /// Train / control / release fractions of the real data.
    pub split_fractions: [f64; 3],
    pub leak_fractions: Vec<f64>,
    pub noise: Vec<NoiseSpec>,
    pub metrics: Vec<Metric>,
    /// One replicate (split, encoder, leaky sets) per seed.
    pub seeds: Vec<u64>,
    pub settings: MetricSettings,
}

impl Default for LeakyConfig {
    fn default() -> Self {
        LeakyConfig {
            dataset: "real".into(),
            split_fractions: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            leak_fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            noise: NoiseSpec::grid(&[0.0, 0.05]),
            metrics: Metric::ALL.to_vec(),
            seeds: vec![0],
            settings: MetricSettings::default(),
        }
    }
}

impl LeakyConfig {
    pub fn validate(&self) -> Result<()> {
        SplitSpec::new(self.split_fractions[0], self.split_fractions[1], self.split_fractions[2], 0)?;
        if self.leak_fractions.is_empty() || self.noise.is_empty() || self.metrics.is_empty() || self.seeds.is_empty() {
            return Err(Error::Parameter("leaky grid has an empty axis".into()));
        }
        for &f in &self.leak_fractions {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Parameter(format!("leak fraction must lie in [0, 1], got {f}")));
            }
        }
        if self.leak_fractions.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Parameter("leak fractions must be sorted ascending".into()));
        }
        for n in &self.noise {
            n.validate()?;
        }
        Ok(())
    }

    /// Number of (seed, noise, fraction) points.
    pub fn n_points(&self) -> usize {
        self.seeds.len() * self.noise.len() * self.leak_fractions.len()
    }
}

/// Coordinates of one leaky grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointKey {
    pub seed: u64,
    pub noise: usize,
    pub fraction: usize,
}

/// Runs the leaky protocol. Points for which `skip` returns true are not
/// computed; `on_point` receives each finished point's rows (possibly from
/// several threads). The returned grid lists computed rows in grid order.
///
/// For every seed the real data is split once and, if any metric needs it,
/// one encoder is trained on the training split and reused for every noise
/// point and leak fraction.
pub fn run_leaky_points<S, F>(real: &TabularDataset, cfg: &LeakyConfig, skip: S, on_point: F) -> Result<ExperimentGrid>
where
    S: Fn(PointKey) -> bool + Sync,
    F: Fn(PointKey, &[GridRow]) -> Result<()> + Sync,
{
    cfg.validate()?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let keys: Vec<PointKey> = (0..cfg.noise.len())
            .flat_map(|noise| (0..cfg.leak_fractions.len()).map(move |fraction| PointKey { seed, noise, fraction }))
            .filter(|k| !skip(*k))
            .collect();
        if keys.is_empty() {
            continue;
        }
        let [a, b, c] = cfg.split_fractions;
        let parts = split(real, &SplitSpec::new(a, b, c, stream_seed(seed, Stream::Split))?)?;
        let model = if cfg.metrics.iter().any(|m| m.needs_embedding()) {
            Some(fit_embedder(&parts.train, &cfg.settings, seed)?)
        } else {
            None
        };
        let eval = Evaluator::new(&parts.train, &parts.control, &cfg.settings, model.as_ref())?;
        let point_rows = keys
            .par_iter()
            .map(|&key| {
                let noise = cfg.noise[key.noise];
                let f_l = cfg.leak_fractions[key.fraction];
                let point_seed = derive_seed(seed, &[key.noise as u64, key.fraction as u64]);
                let mut rng = rng_from_seed(stream_seed(point_seed, Stream::Noise));
                let synthetic = make_leaky(&parts.train, &parts.release, f_l, &noise, &mut rng)?;
                let out = cfg
                    .metrics
                    .iter()
                    .enumerate()
                    .map(|(m, &metric)| {
                        let v = eval.evaluate(metric, &synthetic, derive_seed(point_seed, &[m as u64]))?;
                        Ok(GridRow {
                            dataset: cfg.dataset.clone(),
                            f_l: Some(f_l),
                            sigma: Some(noise.sigma),
                            lambda: Some(noise.lambda),
                            p: Some(noise.p),
                            f_o: None,
                            generator: None,
                            metric,
                            seed,
                            value: v.value,
                            ci_lo: v.ci_lo,
                            ci_hi: v.ci_hi,
                            seconds: v.seconds,
                            error: None,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                on_point(key, &out)?;
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(point_rows.into_iter().flatten());
    }
    Ok(ExperimentGrid { rows })
}

pub fn run_leaky_experiment(real: &TabularDataset, cfg: &LeakyConfig) -> Result<ExperimentGrid> {
    run_leaky_points(real, cfg, |_| false, |_, _| Ok(()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitRun {
    pub synthetic_path: PathBuf,
    pub f_o: f64,
    pub generator_label: String,
}

impl OverfitRun {
    pub fn validate(&self) -> Result<()> {
        if !(1.0..=2.0).contains(&self.f_o) {
            return Err(Error::Parameter(format!("overfitting ratio must lie in [1, 2], got {}", self.f_o)));
        }
        Ok(())
    }
}

fn overfit_rows(
    eval: &Evaluator<'_>,
    dataset: &str,
    run: &OverfitRun,
    data: Result<TabularDataset>,
    metrics: &[Metric],
    seed: u64,
) -> Vec<GridRow> {
    let data = data.and_then(|d| {
        run.validate()?;
        Ok(d)
    });
    metrics
        .iter()
        .enumerate()
        .map(|(m, &metric)| {
            let result = data
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|d| eval.evaluate(metric, d, derive_seed(seed, &[m as u64])).map_err(|e| e.to_string()));
            let (v, error) = match result {
                Ok(v) => (v, None),
                Err(e) => (
                    MetricValue { value: f64::NAN, ci_lo: f64::NAN, ci_hi: f64::NAN, seconds: 0.0 },
                    Some(e),
                ),
            };
            GridRow {
                dataset: dataset.to_string(),
                f_l: None,
                sigma: None,
                lambda: None,
                p: None,
                f_o: Some(run.f_o),
                generator: Some(run.generator_label.clone()),
                metric,
                seed,
                value: v.value,
                ci_lo: v.ci_lo,
                ci_hi: v.ci_hi,
                seconds: v.seconds,
                error,
            }
        })
        .collect()
}

/// Scores in-memory synthetic sets. Rows are ordered by `f_o`; a set that
/// cannot be scored yields rows carrying the error instead of aborting.
pub fn evaluate_overfit_sets(
    eval: &Evaluator<'_>,
    dataset: &str,
    sets: Vec<(OverfitRun, TabularDataset)>,
    metrics: &[Metric],
    seed: u64,
) -> ExperimentGrid {
    let mut sets = sets;
    sets.sort_by(|a, b| a.0.f_o.total_cmp(&b.0.f_o));
    let rows = sets
        .into_iter()
        .flat_map(|(run, data)| {
            let data = data.conform_to(eval.train.schema());
            overfit_rows(eval, dataset, &run, data, metrics, seed)
        })
        .collect();
    ExperimentGrid { rows }
}

/// Loads each run's synthetic CSV against the training schema and scores it.
pub fn run_overfit_eval(
    eval: &Evaluator<'_>,
    dataset: &str,
    runs: &[OverfitRun],
    metrics: &[Metric],
    seed: u64,
) -> ExperimentGrid {
    let mut runs = runs.to_vec();
    runs.sort_by(|a, b| a.f_o.total_cmp(&b.f_o));
    let decl = eval.train.schema().declaration();
    let rows = runs
        .iter()
        .flat_map(|run| {
            let data = load_csv(&run.synthetic_path, Some(&decl)).and_then(|d| d.conform_to(eval.train.schema()));
            overfit_rows(eval, dataset, run, data, metrics, seed)
        })
        .collect();
    ExperimentGrid { rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub rows: usize,
    pub metric: Metric,
    pub seconds: f64,
}

pub fn write_timing_csv(path: &Path, rows: &[TimingRow]) -> Result<()> {
    write_rows(path, rows)
}

/// Wall-clock of each metric on subsamples of `real`. Each subsample of `n`
/// rows is split in three equal parts used as training, control and
/// synthetic set. Embedding metrics use `model` and do not include its
/// training time.
pub fn timing_profile(
    real: &TabularDataset,
    row_counts: &[usize],
    metrics: &[Metric],
    settings: &MetricSettings,
    model: Option<&EmbeddingModel>,
    seed: u64,
) -> Result<Vec<TimingRow>> {
    let mut out = Vec::new();
    for &n in row_counts {
        if n > real.len() {
            return Err(Error::Insufficient(format!("{n} rows requested, {} available", real.len())));
        }
        if n < 6 {
            return Err(Error::Insufficient("timing needs at least 6 rows".into()));
        }
        let mut rng = rng_from_seed(derive_seed(seed, &[n as u64]));
        let idx = index::sample(&mut rng, real.len(), n).into_vec();
        let third = n / 3;
        let train_set = real.subset(&idx[..third], "train");
        let control = real.subset(&idx[third..2 * third], "control");
        let synthetic = real.subset(&idx[2 * third..3 * third], "synthetic");
        let eval = Evaluator::new(&train_set, &control, settings, model)?;
        for &metric in metrics {
            let v = eval.evaluate(metric, &synthetic, seed)?;
            out.push(TimingRow { rows: n, metric, seconds: v.seconds });
        }
    }
    Ok(out)
}

/// Toy generator with a tunable amount of memorization. Each output row is,
/// with probability f_o − 1, a training row with small Gaussian jitter on its
/// float columns and otherwise an independent draw from the per-column
/// empirical marginals of the training set.
pub fn toy_generate(train_set: &TabularDataset, n: usize, f_o: f64, seed: u64) -> Result<TabularDataset> {
    if !(1.0..=2.0).contains(&f_o) {
        return Err(Error::Parameter(format!("overfitting ratio must lie in [1, 2], got {f_o}")));
    }
    if train_set.is_empty() {
        return Err(Error::Empty("toy generator training set"));
    }
    let mut rng = rng_from_seed(stream_seed(seed, Stream::Generator));
    let schema = train_set.schema();
    let jitter: Vec<Option<Normal<f64>>> = schema
        .columns()
        .iter()
        .map(|c| match (c.kind, c.observed_min, c.observed_max) {
            (ColumnKind::Float, Some(lo), Some(hi)) if hi > lo => Normal::new(0.0, 0.01 * (hi - lo)).ok(),
            _ => None,
        })
        .collect();
    let m = train_set.len();
    let rows = (0..n)
        .map(|_| {
            if rng.random_bool(f_o - 1.0) {
                let src = train_set.row(rng.random_range(0..m));
                src.iter()
                    .zip(&jitter)
                    .map(|(&cell, j)| match (cell, j) {
                        (Cell::Num(v), Some(j)) => Cell::Num(v + j.sample(&mut rng)),
                        _ => cell,
                    })
                    .collect()
            } else {
                (0..schema.len())
                    .map(|c| train_set.row(rng.random_range(0..m))[c])
                    .collect()
            }
        })
        .collect();
    train_set.with_rows(rows, format!("toy_fo_{f_o}"))
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> u32 {
    WeightedIndex::new(weights).unwrap().sample(rng) as u32
}

const EDUCATION: [&str; 16] = [
    "Preschool", "1st-4th", "5th-6th", "7th-8th", "9th", "10th", "11th", "12th", "HS-grad",
    "Some-college", "Assoc-voc", "Assoc-acdm", "Bachelors", "Masters", "Prof-school", "Doctorate",
];
const EDUCATION_W: [f64; 16] = [
    0.2, 0.5, 1.0, 2.0, 1.6, 2.8, 3.6, 1.3, 32.0, 22.0, 4.2, 3.3, 16.4, 5.3, 1.8, 1.3,
];
const WORKCLASS: [&str; 7] = [
    "Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov", "Local-gov", "State-gov", "Without-pay",
];
const WORKCLASS_W: [f64; 7] = [73.0, 8.0, 3.5, 3.0, 6.5, 4.0, 0.1];
const MARITAL: [&str; 6] = [
    "Married-civ-spouse", "Never-married", "Divorced", "Separated", "Widowed", "Married-spouse-absent",
];
const OCCUPATION: [&str; 14] = [
    "Prof-specialty", "Craft-repair", "Exec-managerial", "Adm-clerical", "Sales", "Other-service",
    "Machine-op-inspct", "Transport-moving", "Handlers-cleaners", "Farming-fishing", "Tech-support",
    "Protective-serv", "Priv-house-serv", "Armed-Forces",
];
const RELATIONSHIP: [&str; 6] = ["Husband", "Wife", "Own-child", "Not-in-family", "Unmarried", "Other-relative"];
const RACE: [&str; 5] = ["White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"];
const RACE_W: [f64; 5] = [85.0, 9.6, 3.1, 1.0, 0.8];
const COUNTRY: [&str; 10] = [
    "United-States", "Mexico", "Philippines", "Germany", "Canada", "Puerto-Rico", "India", "El-Salvador",
    "Cuba", "England",
];
const COUNTRY_W: [f64; 10] = [91.0, 2.0, 0.6, 0.4, 0.4, 0.35, 0.3, 0.3, 0.3, 0.3];

/// Census-style demo table with 15 correlated columns (6 integer, 9
/// categorical), shaped after the public Adult income data.
pub fn adult_like(n: usize, seed: u64) -> TabularDataset {
    let schema = Schema::new(vec![
        ColumnSchema::numeric("age", ColumnKind::Integer),
        ColumnSchema::categorical("workclass", WORKCLASS),
        ColumnSchema::numeric("fnlwgt", ColumnKind::Integer),
        ColumnSchema::categorical("education", EDUCATION),
        ColumnSchema::numeric("education-num", ColumnKind::Integer),
        ColumnSchema::categorical("marital-status", MARITAL),
        ColumnSchema::categorical("occupation", OCCUPATION),
        ColumnSchema::categorical("relationship", RELATIONSHIP),
        ColumnSchema::categorical("race", RACE),
        ColumnSchema::categorical("sex", ["Male", "Female"]),
        ColumnSchema::numeric("capital-gain", ColumnKind::Integer),
        ColumnSchema::numeric("capital-loss", ColumnKind::Integer),
        ColumnSchema::numeric("hours-per-week", ColumnKind::Integer),
        ColumnSchema::categorical("native-country", COUNTRY),
        ColumnSchema::categorical("income", ["<=50K", ">50K"]),
    ])
    .unwrap();
    let mut rng = rng_from_seed(stream_seed(seed, Stream::Generator));
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let rows = (0..n)
        .map(|_| {
            let z: f64 = std_normal.sample(&mut rng);
            let age = (17.0 + (z.abs() * 14.0 + rng.random_range(0.0..22.0))).round().min(90.0);
            let edu = pick(&mut rng, &EDUCATION_W);
            let sex = pick(&mut rng, &[0.67, 0.33]);
            let marital = if age < 25.0 {
                pick(&mut rng, &[12.0, 80.0, 4.0, 2.0, 0.2, 1.0])
            } else if age > 65.0 {
                pick(&mut rng, &[50.0, 5.0, 15.0, 2.0, 27.0, 1.0])
            } else {
                pick(&mut rng, &[52.0, 20.0, 17.0, 4.0, 2.0, 1.5])
            };
            let relationship = match (marital, sex) {
                (0, 0) => 0,
                (0, _) => 1,
                _ if age < 24.0 => pick(&mut rng, &[0.0, 0.0, 70.0, 20.0, 5.0, 5.0]),
                _ => pick(&mut rng, &[0.0, 0.0, 8.0, 55.0, 30.0, 7.0]),
            };
            let skilled = edu >= 12;
            let occupation = if skilled {
                pick(&mut rng, &[40.0, 3.0, 30.0, 6.0, 12.0, 2.0, 1.0, 1.0, 0.5, 0.5, 4.0, 1.5, 0.1, 0.1])
            } else {
                pick(&mut rng, &[4.0, 18.0, 8.0, 14.0, 11.0, 14.0, 9.0, 7.0, 6.0, 4.0, 2.5, 2.5, 0.6, 0.05])
            };
            let hours = (40.0 + 11.0 * std_normal.sample(&mut rng) + if skilled { 4.0 } else { 0.0 })
                .round()
                .clamp(1.0, 99.0);
            let fnlwgt = (12.1 + 0.5 * std_normal.sample(&mut rng)).exp().round().clamp(12_000.0, 1_500_000.0);
            let gain = if rng.random_bool(if skilled { 0.15 } else { 0.06 }) {
                (7.5 + 1.1 * std_normal.sample(&mut rng)).exp().round().clamp(100.0, 99_999.0)
            } else {
                0.0
            };
            let loss = if gain == 0.0 && rng.random_bool(0.045) {
                rng.random_range(1_000..3_000) as f64
            } else {
                0.0
            };
            let logit = -8.5
                + 0.35 * edu as f64
                + 0.04 * (age.min(60.0))
                + 0.03 * hours
                + if marital == 0 { 1.8 } else { 0.0 }
                + if gain > 5_000.0 { 3.0 } else { 0.0 };
            let income = rng.random_bool(1.0 / (1.0 + (-logit).exp())) as u32;
            vec![
                Cell::Num(age),
                Cell::Cat(pick(&mut rng, &WORKCLASS_W)),
                Cell::Num(fnlwgt),
                Cell::Cat(edu),
                Cell::Num(edu as f64 + 1.0),
                Cell::Cat(marital),
                Cell::Cat(occupation),
                Cell::Cat(relationship),
                Cell::Cat(pick(&mut rng, &RACE_W)),
                Cell::Cat(sex),
                Cell::Num(gain),
                Cell::Num(loss),
                Cell::Num(hours),
                Cell::Cat(pick(&mut rng, &COUNTRY_W)),
                Cell::Cat(income),
            ]
        })
        .collect();
    TabularDataset::new("adult_like", schema, rows).unwrap()
}

#[cfg(test)]
mod tests;
