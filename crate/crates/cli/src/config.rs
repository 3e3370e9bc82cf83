//! Run configuration: defaults, then a JSON file, then `TABPRIV_*`
//! environment variables, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tabpriv::attacks::AttackConfig;
use tabpriv::embedder::{Corpus, EncoderConfig};
use tabpriv::harness::{Metric, MetricSettings, OverfitRun, PoissonSign};

pub const ENV_PREFIX: &str = "TABPRIV_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpaceChoice {
    Raw,
    Embedded,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub dataset: String,
    pub real: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    /// Column projection applied to every loaded table.
    pub columns: Option<Vec<String>>,
    pub train: Option<PathBuf>,
    pub control: Option<PathBuf>,
    pub synthetic: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub split_fractions: [f64; 3],
    pub corpus: Option<Corpus>,
    pub encoder: EncoderConfig,
    pub validation_fraction: f64,
    pub alpha_percent: f64,
    pub bootstrap_resamples: usize,
    pub space: SpaceChoice,
    pub attack: AttackConfig,
    pub metrics: Vec<Metric>,
    pub leak_fractions: Vec<f64>,
    pub noise_levels: Vec<f64>,
    pub poisson_sign: PoissonSign,
    pub replicates: Vec<u64>,
    pub overfit_runs: Vec<OverfitRun>,
    pub timing_rows: Vec<usize>,
    pub sweep_dims: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let settings = MetricSettings::default();
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            threads: None,
            dataset: "real".into(),
            real: None,
            schema: None,
            columns: None,
            train: None,
            control: None,
            synthetic: None,
            checkpoint: None,
            manifest: None,
            split_fractions: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            corpus: None,
            encoder: settings.encoder,
            validation_fraction: settings.validation_fraction,
            alpha_percent: settings.alpha_percent,
            bootstrap_resamples: settings.bootstrap_resamples,
            space: SpaceChoice::Both,
            attack: settings.attack,
            metrics: Metric::ALL.to_vec(),
            leak_fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            noise_levels: vec![0.0, 0.05],
            poisson_sign: PoissonSign::Symmetric,
            replicates: vec![0],
            overfit_runs: Vec::new(),
            timing_rows: vec![1000, 2000, 5000],
            sweep_dims: (3..=8).collect(),
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with `file` and then with `env` pairs.
    pub fn resolve(file: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> anyhow::Result<Self> {
        let mut value = serde_json::to_value(RunConfig::default())?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            let overlay: Value = serde_json::from_str(&text)
                .with_context(|| format!("config file {} is not valid JSON", path.display()))?;
            merge(&mut value, overlay);
        }
        for (key, raw) in env {
            let Some(rest) = key.strip_prefix(ENV_PREFIX) else { continue };
            let path: Vec<String> = rest.split("__").map(str::to_ascii_lowercase).collect();
            if path.iter().any(String::is_empty) {
                bail!("malformed environment override {key}");
            }
            let parsed = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
            set_path(&mut value, &path, parsed);
        }
        serde_json::from_value(value).context("invalid configuration")
    }

    pub fn settings(&self) -> MetricSettings {
        let mut encoder = self.encoder.clone();
        if let Some(c) = self.corpus {
            encoder.embedding_dim = c.embedding_dim();
        }
        MetricSettings {
            alpha_percent: self.alpha_percent,
            bootstrap_resamples: self.bootstrap_resamples,
            attack: self.attack.clone(),
            encoder,
            validation_fraction: self.validation_fraction,
        }
    }

    pub fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn train_path(&self) -> PathBuf {
        self.train.clone().unwrap_or_else(|| self.out_file("train.csv"))
    }

    pub fn control_path(&self) -> PathBuf {
        self.control.clone().unwrap_or_else(|| self.out_file("control.csv"))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.out_file("encoder.json"))
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, path: &[String], v: Value) {
    let mut node = root;
    for key in &path[..path.len() - 1] {
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        node = node
            .as_object_mut()
            .unwrap()
            .entry(key.clone())
            .or_insert(Value::Object(Default::default()));
    }
    if !node.is_object() {
        *node = Value::Object(Default::default());
    }
    node.as_object_mut().unwrap().insert(path[path.len() - 1].clone(), v);
}
