use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};
use tabpriv::attacks::{run_singling_out, Source};
use tabpriv::dcr::{bootstrap_score, DistanceSpace, PrivacyScoreReport};
use tabpriv::embedder::{self, EmbeddingModel, RiskEstimate};
use tabpriv::harness::{
    self, Evaluator, ExperimentGrid, GridRow, LeakyConfig, Metric, NoiseSpec, OverfitRun, PointKey,
};
use tabpriv::seed::{derive_seed, stream_seed, Stream};
use tabpriv::tabular::{self, Schema, SplitManifest, SplitSpec, TabularDataset};

use crate::config::{RunConfig, SpaceChoice};
use crate::{
    AttackArgs, DcrArgs, DemoArgs, EmbedArgs, EncoderArgs, Failure, InputArgs, LeakyArgs, OverfitArgs,
    SourceChoice, SplitArgs, SweepArgs, TimingArgs,
};

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

/// Every report carries the toolkit version and the resolved configuration.
#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    version: String,
    command: String,
    config: RunConfig,
    result: T,
}

fn envelope<T>(cfg: &RunConfig, command: &str, result: T) -> Envelope<T> {
    Envelope {
        version: tabpriv::VERSION.to_string(),
        command: command.to_string(),
        config: cfg.clone(),
        result,
    }
}

fn require_file(path: &Path, what: &str) -> CmdResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} does not exist", path.display())))
    }
}

fn prepare_out(cfg: &RunConfig) -> CmdResult {
    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create output directory {}", cfg.out.display()))
        .map_err(Failure::Usage)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.into()))?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text + "\n")
        .and_then(|_| std::fs::rename(&tmp, path))
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) {
    use std::io::Write;
    // A closed pipe (e.g. `| head`) is not an error for the run.
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(value).unwrap());
}

fn declared_schema(io: &InputArgs, cfg: &mut RunConfig) -> Result<Option<Schema>, Failure> {
    if let Some(c) = &io.columns {
        cfg.columns = Some(c.clone());
    }
    match io.schema.clone().or_else(|| cfg.schema.clone()) {
        Some(p) => {
            require_file(&p, "schema file")?;
            Ok(Some(Schema::from_json_file(&p)?))
        }
        None => Ok(None),
    }
}

fn load_primary(cfg: &RunConfig, path: &Path, what: &str, decl: Option<&Schema>) -> Result<TabularDataset, Failure> {
    require_file(path, what)?;
    match &cfg.columns {
        Some(cols) => Ok(tabular::load_csv_columns(path, cols, decl)?),
        None => Ok(tabular::load_csv(path, decl)?),
    }
}

/// Loads a file that must share `reference`'s columns, re-expressed against
/// its category lists.
fn load_related(
    cfg: &RunConfig,
    path: &Path,
    what: &str,
    reference: &TabularDataset,
) -> Result<TabularDataset, Failure> {
    require_file(path, what)?;
    let decl = reference.schema().declaration();
    let ds = match &cfg.columns {
        Some(cols) => tabular::load_csv_columns(path, cols, Some(&decl))?,
        None => tabular::load_csv(path, Some(&decl))?,
    };
    Ok(ds.conform_to(reference.schema())?)
}

fn load_checkpoint(path: &Path) -> Result<EmbeddingModel, Failure> {
    require_file(path, "encoder checkpoint")?;
    Ok(EmbeddingModel::load(path)?)
}

fn apply_encoder_args(cfg: &mut RunConfig, a: &EncoderArgs) {
    if let Some(c) = a.corpus {
        cfg.corpus = Some(c);
    }
    if let Some(m) = a.embedding_dim {
        cfg.corpus = None;
        cfg.encoder.embedding_dim = m;
    }
    if let Some(e) = a.max_epochs {
        cfg.encoder.max_epochs = e;
    }
    if let Some(b) = a.batch_size {
        cfg.encoder.batch_size = b;
    }
    if let Some(h) = &a.hidden {
        cfg.encoder.hidden_layers = h.clone();
    }
}

pub fn split(mut cfg: RunConfig, a: SplitArgs) -> CmdResult {
    if let Some(p) = a.input {
        cfg.real = Some(p);
    }
    if let Some(f) = a.fractions {
        cfg.split_fractions = [f[0], f[1], f[2]];
    }
    let input = cfg.real.clone().ok_or_else(|| usage("split needs --input"))?;
    let decl = declared_schema(&a.io, &mut cfg)?;
    let [tr, co, re] = cfg.split_fractions;
    let spec = SplitSpec::new(tr, co, re, stream_seed(cfg.seed, Stream::Split))?;
    let real = load_primary(&cfg, &input, "input", decl.as_ref())?;
    prepare_out(&cfg)?;
    let parts = tabular::split(&real, &spec)?;
    parts.train.write_csv(&cfg.out_file("train.csv"))?;
    parts.control.write_csv(&cfg.out_file("control.csv"))?;
    parts.release.write_csv(&cfg.out_file("release.csv"))?;
    write_json(&cfg.out_file("manifest.json"), &envelope(&cfg, "split", &parts.manifest))?;
    print_json(&parts.manifest.sizes);
    Ok(())
}

#[derive(Serialize)]
struct EmbedSummary {
    checkpoint: PathBuf,
    train_log: PathBuf,
    epochs_run: usize,
    best_epoch: usize,
    best_val_loss: f64,
    best_val_acc: f64,
    stopped_early: bool,
}

pub fn embed(mut cfg: RunConfig, a: EmbedArgs) -> CmdResult {
    if let Some(p) = a.train {
        cfg.train = Some(p);
    }
    apply_encoder_args(&mut cfg, &a.encoder);
    let settings = cfg.settings();
    settings.encoder.validate()?;
    let decl = declared_schema(&a.io, &mut cfg)?;
    let train_set = load_primary(&cfg, &cfg.train_path(), "training set", decl.as_ref())?;
    prepare_out(&cfg)?;
    let (tr, va) = embedder::validation_split(&train_set, cfg.validation_fraction, derive_seed(cfg.seed, &[0]))?;
    let enc = tabpriv::embedder::EncoderConfig {
        seed: stream_seed(cfg.seed, Stream::Train),
        ..settings.encoder
    };
    let (model, log) = embedder::train(&tr, &va, &enc)?;
    let checkpoint = cfg.checkpoint_path();
    let log_path = cfg.out_file("train_log.csv");
    model.save(&checkpoint)?;
    log.write_csv(&log_path)?;
    let best = log.best().cloned().ok_or_else(|| anyhow!("training produced no epochs"))?;
    let summary = EmbedSummary {
        checkpoint,
        train_log: log_path,
        epochs_run: log.epochs.len(),
        best_epoch: log.best_epoch,
        best_val_loss: best.val_loss,
        best_val_acc: best.val_acc,
        stopped_early: log.stopped_early,
    };
    write_json(&cfg.out_file("embed_report.json"), &envelope(&cfg, "embed", &summary))?;
    print_json(&summary);
    Ok(())
}

pub fn dcr(mut cfg: RunConfig, a: DcrArgs) -> CmdResult {
    if let Some(p) = a.synthetic {
        cfg.synthetic = Some(p);
    }
    if let Some(p) = a.train {
        cfg.train = Some(p);
    }
    if let Some(p) = a.holdout {
        cfg.control = Some(p);
    }
    if let Some(s) = a.space {
        cfg.space = s;
    }
    if let Some(p) = a.checkpoint {
        cfg.checkpoint = Some(p);
    }
    if let Some(x) = a.alpha {
        cfg.alpha_percent = x;
    }
    if let Some(b) = a.bootstrap {
        cfg.bootstrap_resamples = b;
    }
    let synth_path = cfg.synthetic.clone().ok_or_else(|| usage("dcr needs --synthetic"))?;
    let decl = declared_schema(&a.io, &mut cfg)?;
    let d1 = load_primary(&cfg, &cfg.train_path(), "training set", decl.as_ref())?;
    let d2 = load_related(&cfg, &cfg.control_path(), "holdout set", &d1)?;
    let synthetic = load_related(&cfg, &synth_path, "synthetic set", &d1)?;
    let model = match cfg.space {
        SpaceChoice::Raw => None,
        _ => Some(load_checkpoint(&cfg.checkpoint_path())?),
    };
    prepare_out(&cfg)?;
    let seed = stream_seed(cfg.seed, Stream::Bootstrap);
    let mut reports: Vec<PrivacyScoreReport> = Vec::new();
    if cfg.space != SpaceChoice::Embedded {
        let space = DistanceSpace::raw(&synthetic, &d1, &d2)?;
        reports.push(bootstrap_score(&space, cfg.alpha_percent, cfg.bootstrap_resamples, seed)?);
    }
    if let Some(m) = &model {
        let space = DistanceSpace::embedded(m, &synthetic, &d1, &d2)?;
        reports.push(bootstrap_score(&space, cfg.alpha_percent, cfg.bootstrap_resamples, seed)?);
    }
    write_json(&cfg.out_file("dcr_report.json"), &envelope(&cfg, "dcr", &reports))?;
    print_json(&reports);
    Ok(())
}

fn check_disjoint(cfg: &RunConfig, train: &Path, control: &Path) -> CmdResult {
    if let (Ok(a), Ok(b)) = (train.canonicalize(), control.canonicalize()) {
        if a == b {
            return Err(usage("train and control are the same file"));
        }
    }
    let path = match &cfg.manifest {
        Some(p) => {
            require_file(p, "split manifest")?;
            p.clone()
        }
        None => cfg.out_file("manifest.json"),
    };
    if !path.is_file() {
        return Ok(());
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(e.into()))?;
    let manifest: SplitManifest = serde_json::from_value(value.get("result").cloned().unwrap_or(value))
        .map_err(|e| usage(format!("{} is not a split manifest: {e}", path.display())))?;
    if !manifest.is_disjoint() {
        return Err(usage(format!("split manifest {} lists overlapping subsets", path.display())));
    }
    Ok(())
}

pub fn attack(mut cfg: RunConfig, a: AttackArgs) -> CmdResult {
    if let Some(p) = a.synthetic {
        cfg.synthetic = Some(p);
    }
    if let Some(p) = a.train {
        cfg.train = Some(p);
    }
    if let Some(p) = a.control {
        cfg.control = Some(p);
    }
    if let Some(p) = a.checkpoint {
        cfg.checkpoint = Some(p);
    }
    if let Some(p) = a.manifest {
        cfg.manifest = Some(p);
    }
    if let Some(s) = a.source {
        cfg.attack.sources = match s {
            SourceChoice::Baseline => vec![Source::BaselineRandom],
            SourceChoice::Embedding => vec![Source::EmbeddingOutlier],
            SourceChoice::Both => vec![Source::BaselineRandom, Source::EmbeddingOutlier],
        };
    }
    if let Some(n) = a.n_attrs {
        cfg.attack.n_attrs = n;
    }
    if let Some(g) = a.guesses {
        cfg.attack.requested = g;
    }
    if let Some(b) = a.bins {
        cfg.attack.bins = b;
    }
    let synth_path = cfg.synthetic.clone().ok_or_else(|| usage("attack needs --synthetic"))?;
    let (train_path, control_path) = (cfg.train_path(), cfg.control_path());
    check_disjoint(&cfg, &train_path, &control_path)?;
    let decl = declared_schema(&a.io, &mut cfg)?;
    let train_set = load_primary(&cfg, &train_path, "training set", decl.as_ref())?;
    let control = load_related(&cfg, &control_path, "control set", &train_set)?;
    let synthetic = load_related(&cfg, &synth_path, "synthetic set", &train_set)?;
    let embedding = if cfg.attack.sources.contains(&Source::EmbeddingOutlier) {
        let model = load_checkpoint(&cfg.checkpoint_path())?;
        Some(model.embed_dataset(&synthetic)?.values)
    } else {
        None
    };
    prepare_out(&cfg)?;
    let mut attack_cfg = cfg.attack.clone();
    attack_cfg.seed = cfg.seed;
    let report = run_singling_out(&synthetic, &train_set, &control, &attack_cfg, embedding.as_ref().map(|e| e.view()))?;
    write_json(&cfg.out_file("attack_report.json"), &envelope(&cfg, "attack", &report))?;
    if let Some(gs) = report.headline_guesses() {
        write_json(&cfg.out_file("attack_predicates.json"), gs)?;
    }
    print_json(&report.headline);
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct LeakyManifest {
    leaky: LeakyConfig,
    points: Vec<(PointKey, Vec<GridRow>)>,
}

fn leaky_config(cfg: &RunConfig) -> LeakyConfig {
    let mut noise = NoiseSpec::grid(&cfg.noise_levels);
    for n in &mut noise {
        n.poisson_sign = cfg.poisson_sign;
    }
    LeakyConfig {
        dataset: cfg.dataset.clone(),
        split_fractions: cfg.split_fractions,
        leak_fractions: cfg.leak_fractions.clone(),
        noise,
        metrics: cfg.metrics.clone(),
        seeds: cfg.replicates.iter().map(|&r| derive_seed(cfg.seed, &[r])).collect(),
        settings: cfg.settings(),
    }
}

fn write_grid(cfg: &RunConfig, stem: &str, grid: &ExperimentGrid) -> CmdResult {
    grid.write_csv(&cfg.out_file(&format!("{stem}_grid.csv")))?;
    grid.write_summary_csv(&cfg.out_file(&format!("{stem}_plot.csv")))?;
    Ok(())
}

pub fn leaky(mut cfg: RunConfig, a: LeakyArgs) -> CmdResult {
    if let Some(p) = a.input {
        cfg.real = Some(p);
    }
    if let Some(d) = a.dataset {
        cfg.dataset = d;
    }
    if let Some(f) = a.fractions {
        cfg.leak_fractions = f;
    }
    if let Some(n) = a.noise_levels {
        cfg.noise_levels = n;
    }
    if let Some(m) = a.metrics {
        cfg.metrics = m;
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if let Some(g) = a.guesses {
        cfg.attack.requested = g;
    }
    if let Some(b) = a.bootstrap {
        cfg.bootstrap_resamples = b;
    }
    apply_encoder_args(&mut cfg, &a.encoder);
    let lcfg = leaky_config(&cfg);
    lcfg.validate()?;
    let input = cfg.real.clone().ok_or_else(|| usage("leaky needs --input"))?;
    let decl = declared_schema(&a.io, &mut cfg)?;
    let real = load_primary(&cfg, &input, "input", decl.as_ref())?;
    prepare_out(&cfg)?;

    let manifest_path = cfg.out_file("leaky_manifest.json");
    let mut done: BTreeMap<PointKey, Vec<GridRow>> = BTreeMap::new();
    if !a.fresh && manifest_path.is_file() {
        let text = std::fs::read_to_string(&manifest_path)
            .with_context(|| format!("cannot read {}", manifest_path.display()))?;
        if let Ok(prev) = serde_json::from_str::<Envelope<LeakyManifest>>(&text) {
            if prev.result.leaky == lcfg {
                done.extend(prev.result.points);
                eprintln!("resuming: {} of {} grid points already done", done.len(), lcfg.n_points());
            } else {
                eprintln!("existing manifest has a different configuration; starting over");
            }
        }
    }
    let state = Mutex::new(done.clone());
    let persist = |points: &BTreeMap<PointKey, Vec<GridRow>>| -> Result<(), Failure> {
        let manifest = LeakyManifest {
            leaky: lcfg.clone(),
            points: points.iter().map(|(k, v)| (*k, v.clone())).collect(),
        };
        write_json(&manifest_path, &envelope(&cfg, "leaky", manifest))
    };
    harness::run_leaky_points(
        &real,
        &lcfg,
        |k| done.contains_key(&k),
        |k, rows| {
            let mut points = state.lock().unwrap();
            points.insert(k, rows.to_vec());
            persist(&points).map_err(|f| match f {
                Failure::Usage(e) | Failure::Runtime(e) => tabpriv::Error::Insufficient(format!("{e:#}")),
            })
        },
    )?;
    let points = state.into_inner().unwrap();
    persist(&points)?;
    let grid = ExperimentGrid {
        rows: points.into_values().flatten().collect(),
    };
    write_grid(&cfg, "leaky", &grid)?;
    print_json(&grid.summary());
    Ok(())
}

fn parse_run(spec: &str) -> Result<OverfitRun, Failure> {
    let mut parts = spec.rsplitn(3, ':');
    let label = parts.next();
    let f_o = parts.next();
    let path = parts.next();
    match (path, f_o, label) {
        (Some(p), Some(f), Some(l)) => Ok(OverfitRun {
            synthetic_path: PathBuf::from(p),
            f_o: f.parse().map_err(|_| usage(format!("bad overfitting ratio in {spec}")))?,
            generator_label: l.to_string(),
        }),
        _ => Err(usage(format!("--run expects PATH:F_O:LABEL, got {spec}"))),
    }
}

fn optional_model(cfg: &RunConfig, metrics: &[Metric]) -> Result<Option<EmbeddingModel>, Failure> {
    if metrics.iter().any(|m| m.needs_embedding()) {
        Ok(Some(load_checkpoint(&cfg.checkpoint_path())?))
    } else {
        Ok(None)
    }
}

pub fn overfit(mut cfg: RunConfig, a: OverfitArgs) -> CmdResult {
    if let Some(p) = a.train {
        cfg.train = Some(p);
    }
    if let Some(p) = a.control {
        cfg.control = Some(p);
    }
    if let Some(p) = a.checkpoint {
        cfg.checkpoint = Some(p);
    }
    if let Some(m) = a.metrics {
        cfg.metrics = m;
    }
    if let Some(d) = a.dataset {
        cfg.dataset = d;
    }
    if let Some(g) = a.guesses {
        cfg.attack.requested = g;
    }
    if !a.runs.is_empty() {
        cfg.overfit_runs = a.runs.iter().map(|s| parse_run(s)).collect::<Result<_, _>>()?;
    }
    for run in &cfg.overfit_runs {
        run.validate()?;
    }
    let decl = declared_schema(&a.io, &mut cfg)?;
    let train_set = load_primary(&cfg, &cfg.train_path(), "training set", decl.as_ref())?;
    let control = load_related(&cfg, &cfg.control_path(), "control set", &train_set)?;
    let model = optional_model(&cfg, &cfg.metrics)?;
    prepare_out(&cfg)?;
    let settings = cfg.settings();
    let eval = Evaluator::new(&train_set, &control, &settings, model.as_ref())?;
    let grid = if cfg.columns.is_some() {
        let sets = cfg
            .overfit_runs
            .iter()
            .map(|run| Ok((run.clone(), load_related(&cfg, &run.synthetic_path, "synthetic set", &train_set)?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        harness::evaluate_overfit_sets(&eval, &cfg.dataset, sets, &cfg.metrics, cfg.seed)
    } else {
        harness::run_overfit_eval(&eval, &cfg.dataset, &cfg.overfit_runs, &cfg.metrics, cfg.seed)
    };
    write_grid(&cfg, "overfit", &grid)?;
    write_json(&cfg.out_file("overfit_manifest.json"), &envelope(&cfg, "overfit", &grid))?;
    print_json(&grid.summary());
    Ok(())
}

pub fn timing(mut cfg: RunConfig, a: TimingArgs) -> CmdResult {
    if let Some(p) = a.input {
        cfg.real = Some(p);
    }
    if let Some(r) = a.rows {
        cfg.timing_rows = r;
    }
    if let Some(m) = a.metrics {
        cfg.metrics = m;
    }
    if let Some(p) = a.checkpoint {
        cfg.checkpoint = Some(p);
    }
    if let Some(g) = a.guesses {
        cfg.attack.requested = g;
    }
    let input = cfg.real.clone().ok_or_else(|| usage("timing needs --input"))?;
    let decl = declared_schema(&a.io, &mut cfg)?;
    let real = load_primary(&cfg, &input, "input", decl.as_ref())?;
    if let Some(&n) = cfg.timing_rows.iter().find(|&&n| n > real.len()) {
        return Err(usage(format!("{n} rows requested but the input has {}", real.len())));
    }
    let model = optional_model(&cfg, &cfg.metrics)?;
    prepare_out(&cfg)?;
    let rows = harness::timing_profile(&real, &cfg.timing_rows, &cfg.metrics, &cfg.settings(), model.as_ref(), cfg.seed)?;
    harness::write_timing_csv(&cfg.out_file("timing.csv"), &rows)?;
    write_json(&cfg.out_file("timing.json"), &envelope(&cfg, "timing", &rows))?;
    print_json(&rows);
    Ok(())
}

pub fn sweep_dim(mut cfg: RunConfig, a: SweepArgs) -> CmdResult {
    if let Some(p) = a.train {
        cfg.train = Some(p);
    }
    if let Some(p) = a.control {
        cfg.control = Some(p);
    }
    if let Some(p) = a.synthetic {
        cfg.synthetic = Some(p);
    }
    if let Some(d) = a.dims {
        cfg.sweep_dims = d;
    }
    if let Some(g) = a.guesses {
        cfg.attack.requested = g;
    }
    apply_encoder_args(&mut cfg, &a.encoder);
    if cfg.sweep_dims.is_empty() {
        return Err(usage("no embedding dimensions to sweep"));
    }
    let synth_path = cfg.synthetic.clone().ok_or_else(|| usage("sweep-dim needs --synthetic"))?;
    let decl = declared_schema(&a.io, &mut cfg)?;
    let train_set = load_primary(&cfg, &cfg.train_path(), "training set", decl.as_ref())?;
    let control = load_related(&cfg, &cfg.control_path(), "control set", &train_set)?;
    let synthetic = load_related(&cfg, &synth_path, "synthetic set", &train_set)?;
    prepare_out(&cfg)?;
    let (tr, va) = embedder::validation_split(&train_set, cfg.validation_fraction, derive_seed(cfg.seed, &[0]))?;
    let base = tabpriv::embedder::EncoderConfig {
        seed: stream_seed(cfg.seed, Stream::Train),
        ..cfg.settings().encoder
    };
    let mut attack_cfg = cfg.attack.clone();
    attack_cfg.sources = vec![Source::EmbeddingOutlier];
    attack_cfg.seed = cfg.seed;
    let table = embedder::sweep_embedding_dim(&tr, &va, &cfg.sweep_dims, &base, |model| {
        let emb = model.embed_dataset(&synthetic)?.values;
        let rep = run_singling_out(&synthetic, &train_set, &control, &attack_cfg, Some(emb.view()))?;
        let h = rep
            .headline
            .ok_or_else(|| tabpriv::Error::Insufficient("no attack configuration produced a risk".into()))?;
        Ok(RiskEstimate {
            risk: h.risk.unwrap(),
            ci: h.d_risk.unwrap(),
        })
    })?;
    table.write_csv(&cfg.out_file("sweep.csv"))?;
    write_json(&cfg.out_file("sweep.json"), &envelope(&cfg, "sweep-dim", &table))?;
    print_json(&table);
    Ok(())
}

pub fn demo_data(cfg: RunConfig, a: DemoArgs) -> CmdResult {
    if a.rows == 0 {
        return Err(usage("--rows must be positive"));
    }
    let path = a.file.unwrap_or_else(|| cfg.out_file("adult_like.csv"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(Failure::Usage)?;
    }
    let ds = harness::adult_like(a.rows, cfg.seed);
    ds.write_csv(&path)?;
    write_json(&path.with_extension("schema.json"), &ds.schema().declaration())?;
    println!("{}", path.display());
    Ok(())
}
