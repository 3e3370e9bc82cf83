//! Predicate-based singling-out attacks.
//!
//! A guess is a conjunction of per-column conditions that isolates exactly
//! one synthetic record. Each guess is replayed against the training set and
//! a disjoint control set of the same size; a guess succeeds on a set when it
//! isolates exactly one record there too. Success rates come with Wilson
//! score intervals, and the risk compares the training rate with the control
//! rate so that only memorization counts.

use std::collections::HashSet;
use std::time::Instant;

use ndarray::ArrayView2;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::neighbors::kth_neighbor_distances;
use crate::seed::{derive_seed, rng_from_seed, stream_seed, Stream};
use crate::tabular::{Cell, ColumnKind, Schema, TabularDataset};

pub const DEFAULT_Z: f64 = 1.959964;
pub const DEFAULT_REQUESTED_GUESSES: usize = 2000;
pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_OUTLIER_K: usize = 5;
/// Candidates examined per requested guess before giving up.
pub const CANDIDATE_BUDGET_FACTOR: usize = 50;

const CANDIDATE_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Test {
    CategoryEquals {
        label: String,
    },
    InInterval {
        lo: f64,
        hi: f64,
        lo_closed: bool,
        hi_closed: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub column: String,
    pub test: Test,
}

/// How guess targets are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Uniformly random synthetic rows.
    #[serde(alias = "baseline")]
    BaselineRandom,
    /// Synthetic rows in decreasing order of isolation in embedding space.
    #[serde(alias = "embedding")]
    EmbeddingOutlier,
}

impl Source {
    fn tag(self) -> u64 {
        match self {
            Source::BaselineRandom => 0,
            Source::EmbeddingOutlier => 1,
        }
    }
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Source::BaselineRandom => "baseline_random",
            Source::EmbeddingOutlier => "embedding_outlier",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub conditions: Vec<Condition>,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_row: Option<usize>,
}

impl Predicate {
    pub fn new(conditions: Vec<Condition>, source: Source, target_row: Option<usize>) -> Result<Self> {
        if conditions.is_empty() {
            return Err(Error::Parameter("predicate needs at least one condition".into()));
        }
        let mut seen = HashSet::new();
        for c in &conditions {
            if !seen.insert(c.column.as_str()) {
                return Err(Error::Parameter(format!(
                    "column {} appears twice in a predicate",
                    c.column
                )));
            }
            if let Test::InInterval { lo, hi, .. } = c.test {
                if !(lo <= hi) {
                    return Err(Error::Parameter(format!("empty interval on {}", c.column)));
                }
            }
        }
        Ok(Predicate {
            conditions,
            source,
            target_row,
        })
    }

    /// Checks that every condition names an existing column of the right kind.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        for c in &self.conditions {
            let idx = schema
                .index_of(&c.column)
                .ok_or_else(|| Error::UnknownColumn(c.column.clone()))?;
            let categorical = schema.column(idx).kind == ColumnKind::Categorical;
            if categorical != matches!(c.test, Test::CategoryEquals { .. }) {
                return Err(Error::Schema(format!(
                    "condition kind does not match column {}",
                    c.column
                )));
            }
        }
        Ok(())
    }

    fn compile(&self, schema: &Schema) -> Option<Vec<Bound>> {
        self.conditions
            .iter()
            .map(|c| {
                let idx = schema.index_of(&c.column)?;
                let col = schema.column(idx);
                let bound = match c.test {
                    Test::CategoryEquals { ref label } => {
                        let code = col.category_code(label)? as f64;
                        Bound { col: idx, lo: code, hi: code, lo_closed: true, hi_closed: true }
                    }
                    Test::InInterval { lo, hi, lo_closed, hi_closed } if col.kind.is_numeric() => {
                        Bound { col: idx, lo, hi, lo_closed, hi_closed }
                    }
                    _ => return None,
                };
                Some(bound)
            })
            .collect()
    }
}

/// A compiled condition. Category codes become the degenerate interval
/// [code, code].
struct Bound {
    col: usize,
    lo: f64,
    hi: f64,
    lo_closed: bool,
    hi_closed: bool,
}

impl Bound {
    fn holds(&self, v: f64) -> bool {
        let above = if self.lo_closed { v >= self.lo } else { v > self.lo };
        let below = if self.hi_closed { v <= self.hi } else { v < self.hi };
        above && below
    }
}

/// Column-major copy of a dataset with category codes stored as floats.
struct FlatRows {
    n: usize,
    columns: Vec<Vec<f64>>,
}

impl FlatRows {
    fn new(ds: &TabularDataset) -> Self {
        let columns = (0..ds.n_columns())
            .map(|j| {
                ds.rows()
                    .iter()
                    .map(|row| match row[j] {
                        Cell::Num(v) => v,
                        Cell::Cat(code) => code as f64,
                    })
                    .collect()
            })
            .collect();
        FlatRows { n: ds.len(), columns }
    }

    /// Matching rows, counted in blocks of 64 and stopping once `limit` is
    /// reached.
    fn count_upto(&self, bounds: &[Bound], limit: usize) -> usize {
        let mut n = 0;
        for start in (0..self.n).step_by(64) {
            let end = (start + 64).min(self.n);
            let mut mask = u64::MAX >> (64 - (end - start));
            for b in bounds {
                let col = &self.columns[b.col][start..end];
                let mut bits = 0u64;
                for (i, &v) in col.iter().enumerate() {
                    bits |= (b.holds(v) as u64) << i;
                }
                mask &= bits;
                if mask == 0 {
                    break;
                }
            }
            n += mask.count_ones() as usize;
            if n >= limit {
                break;
            }
        }
        n
    }
}

/// Number of rows of `ds` satisfying every condition. A condition on a
/// column or label that `ds` does not have matches nothing.
pub fn count_matches(p: &Predicate, ds: &TabularDataset) -> usize {
    match p.compile(ds.schema()) {
        Some(c) => FlatRows::new(ds).count_upto(&c, usize::MAX),
        None => 0,
    }
}

fn isolates(p: &Predicate, ds: &TabularDataset, flat: &FlatRows) -> bool {
    match p.compile(ds.schema()) {
        Some(c) => flat.count_upto(&c, 2) == 1,
        None => false,
    }
}

/// Equal-width bin edges for every numeric column; `None` for categoricals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    pub edges: Vec<Option<Vec<f64>>>,
}

impl BinEdges {
    /// `bins` equal-width bins spanning the observed range of each numeric
    /// column. A constant column gets the single degenerate bin [v, v].
    pub fn equal_width(ds: &TabularDataset, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Parameter("bin count must be positive".into()));
        }
        let edges = ds
            .schema()
            .columns()
            .iter()
            .map(|col| {
                if !col.kind.is_numeric() {
                    return None;
                }
                let (lo, hi) = (col.observed_min?, col.observed_max?);
                if lo == hi {
                    return Some(vec![lo, hi]);
                }
                let width = (hi - lo) / bins as f64;
                let mut e: Vec<f64> = (0..bins).map(|j| lo + j as f64 * width).collect();
                e.push(hi);
                Some(e)
            })
            .collect();
        Ok(BinEdges { edges })
    }

    /// Bin index of `v` on column `col` and whether it had to be clamped.
    pub fn bin_of(&self, col: usize, v: f64) -> Option<(usize, bool)> {
        let e = self.edges.get(col)?.as_ref()?;
        let last = e.len() - 2;
        if v < e[0] {
            return Some((0, true));
        }
        if v > e[last + 1] {
            return Some((last, true));
        }
        let j = e.partition_point(|&x| x <= v).saturating_sub(1).min(last);
        Some((j, false))
    }

    fn interval(&self, col: usize, j: usize) -> Test {
        let e = self.edges[col].as_ref().unwrap();
        let last = j + 2 == e.len();
        Test::InInterval {
            lo: e[j],
            hi: e[j + 1],
            lo_closed: true,
            hi_closed: last,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltPredicate {
    pub predicate: Predicate,
    /// Some numeric value lay outside its edges and was put in the boundary bin.
    pub clamped: bool,
    key: Vec<(usize, u32)>,
}

/// Predicate describing `row` of `ds` on `columns`: category equality for
/// categorical columns, the containing bin for numeric ones.
pub fn build_predicate(
    ds: &TabularDataset,
    row: usize,
    columns: &[usize],
    edges: &BinEdges,
    source: Source,
) -> Result<BuiltPredicate> {
    if columns.is_empty() {
        return Err(Error::Parameter("predicate needs at least one column".into()));
    }
    let mut cols = columns.to_vec();
    cols.sort_unstable();
    cols.dedup();
    let record = ds.row(row);
    let schema = ds.schema();
    let mut clamped = false;
    let mut key = Vec::with_capacity(cols.len());
    let mut conditions = Vec::with_capacity(cols.len());
    for &c in &cols {
        let name = schema.column(c).name.clone();
        match record[c] {
            Cell::Cat(code) => {
                key.push((c, code));
                conditions.push(Condition {
                    column: name,
                    test: Test::CategoryEquals {
                        label: schema.column(c).categories[code as usize].clone(),
                    },
                });
            }
            Cell::Num(v) => {
                let (j, flag) = edges
                    .bin_of(c, v)
                    .ok_or_else(|| Error::Parameter(format!("no bin edges for column {name}")))?;
                clamped |= flag;
                key.push((c, j as u32));
                conditions.push(Condition {
                    column: name,
                    test: edges.interval(c, j),
                });
            }
        }
    }
    Ok(BuiltPredicate {
        predicate: Predicate::new(conditions, source, Some(row))?,
        clamped,
        key,
    })
}

/// Synthetic row indices ordered from most to least isolated, scored by the
/// distance to the `k`-th nearest other row. Ties keep row order.
pub fn rank_outliers(embedded: ArrayView2<f64>, k: usize) -> Result<Vec<usize>> {
    let n = embedded.nrows();
    if k == 0 || n <= k {
        return Err(Error::Parameter(format!(
            "outlier ranking needs 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let scores = kth_neighbor_distances(embedded, k);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessConfig {
    pub n_attrs: usize,
    pub requested: usize,
    pub bins: usize,
    pub outlier_k: usize,
    pub source: Source,
}

impl GuessConfig {
    pub fn new(n_attrs: usize, source: Source) -> Self {
        GuessConfig {
            n_attrs,
            requested: DEFAULT_REQUESTED_GUESSES,
            bins: DEFAULT_BINS,
            outlier_k: DEFAULT_OUTLIER_K,
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessSet {
    pub guesses: Vec<Predicate>,
    pub n_attrs: usize,
    pub requested: usize,
    pub candidates_tried: usize,
}

impl GuessSet {
    pub fn n_a(&self) -> usize {
        self.guesses.len()
    }
}

/// Draws candidate predicates from synthetic records and keeps those that
/// isolate exactly one synthetic record, skipping duplicates. Stops after
/// `requested` guesses or `CANDIDATE_BUDGET_FACTOR × requested` candidates.
pub fn generate_guesses<R: Rng>(
    synthetic: &TabularDataset,
    cfg: &GuessConfig,
    rng: &mut R,
    embedding: Option<ArrayView2<f64>>,
) -> Result<GuessSet> {
    let n_cols = synthetic.n_columns();
    if cfg.n_attrs == 0 || cfg.n_attrs > n_cols {
        return Err(Error::Parameter(format!(
            "n_attrs must lie in 1..={n_cols}, got {}",
            cfg.n_attrs
        )));
    }
    let n = synthetic.len();
    let mut set = GuessSet {
        guesses: Vec::new(),
        n_attrs: cfg.n_attrs,
        requested: cfg.requested,
        candidates_tried: 0,
    };
    if n == 0 || cfg.requested == 0 {
        return Ok(set);
    }
    let order = match cfg.source {
        Source::BaselineRandom => None,
        Source::EmbeddingOutlier => {
            let emb = embedding.ok_or_else(|| {
                Error::Parameter("outlier targeting needs an embedding of the synthetic set".into())
            })?;
            if emb.nrows() != n {
                return Err(Error::Parameter("embedding rows differ from synthetic rows".into()));
            }
            Some(if n > cfg.outlier_k {
                rank_outliers(emb, cfg.outlier_k)?
            } else {
                (0..n).collect()
            })
        }
    };
    let edges = BinEdges::equal_width(synthetic, cfg.bins)?;
    let budget = cfg.requested.saturating_mul(CANDIDATE_BUDGET_FACTOR);
    let mut seen: HashSet<Vec<(usize, u32)>> = HashSet::new();
    let flat = FlatRows::new(synthetic);

    while set.candidates_tried < budget && set.guesses.len() < cfg.requested {
        let batch = CANDIDATE_BATCH.min(budget - set.candidates_tried);
        let candidates = (0..batch)
            .map(|i| {
                let row = match &order {
                    None => rng.random_range(0..n),
                    Some(o) => o[(set.candidates_tried + i) % n],
                };
                let cols = index::sample(rng, n_cols, cfg.n_attrs).into_vec();
                build_predicate(synthetic, row, &cols, &edges, cfg.source)
            })
            .collect::<Result<Vec<_>>>()?;
        // Repeated keys are skipped below, so only first occurrences are scanned.
        let mut batch_keys = HashSet::new();
        let fresh: Vec<bool> = candidates
            .iter()
            .map(|c| !seen.contains(&c.key) && batch_keys.insert(&c.key))
            .collect();
        let unique: Vec<bool> = candidates
            .par_iter()
            .zip(fresh)
            .map(|(c, fresh)| fresh && isolates(&c.predicate, synthetic, &flat))
            .collect();
        for (cand, ok) in candidates.into_iter().zip(unique) {
            set.candidates_tried += 1;
            if !seen.insert(cand.key) {
                continue;
            }
            if ok {
                set.guesses.push(cand.predicate);
                if set.guesses.len() == cfg.requested {
                    break;
                }
            }
        }
    }
    Ok(set)
}

/// Number of guesses that isolate exactly one record of `attacked`.
pub fn evaluate_guesses(gs: &GuessSet, attacked: &TabularDataset) -> usize {
    let flat = FlatRows::new(attacked);
    gs.guesses
        .par_iter()
        .filter(|p| isolates(p, attacked, &flat))
        .count()
}

/// Success-rate estimate with its half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub r: f64,
    pub delta: f64,
}

/// Two-sided standard-normal quantile for a confidence level.
pub fn z_for_confidence(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Parameter(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    Ok(normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
}

/// Wilson score center and half-width.
pub fn wilson_with_z(n_s: usize, n_a: usize, z: f64) -> Result<Rate> {
    if n_a == 0 {
        return Err(Error::UndefinedRate);
    }
    if n_s > n_a {
        return Err(Error::Parameter(format!("{n_s} successes out of {n_a} attempts")));
    }
    let (s, a, z2) = (n_s as f64, n_a as f64, z * z);
    let denom = a + z2;
    Ok(Rate {
        r: (s + z2 / 2.0) / denom,
        delta: z / denom * (s * (a - s) / a + z2 / 4.0).sqrt(),
    })
}

pub fn wilson(n_s: usize, n_a: usize, confidence: f64) -> Result<Rate> {
    wilson_with_z(n_s, n_a, z_for_confidence(confidence)?)
}

/// Training success normalized against control success.
pub fn risk(r_train: f64, r_control: f64) -> Result<f64> {
    if r_control >= 1.0 {
        return Err(Error::ControlCompromised);
    }
    Ok((r_train - r_control) / (1.0 - r_control))
}

/// Risk with a half-width propagated to first order from both rate intervals.
pub fn risk_with_interval(train: Rate, control: Rate) -> Result<Rate> {
    let r = risk(train.r, control.r)?;
    let q = 1.0 - control.r;
    let d_train = train.delta / q;
    let d_control = control.delta * (train.r - 1.0) / (q * q);
    Ok(Rate {
        r,
        delta: d_train.hypot(d_control),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// Attribute counts to try. Counts above the column count are skipped.
    pub n_attrs: Vec<usize>,
    pub sources: Vec<Source>,
    pub requested: usize,
    pub bins: usize,
    pub outlier_k: usize,
    pub z: f64,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        let mut n_attrs = vec![1];
        n_attrs.extend(3..=12);
        AttackConfig {
            n_attrs,
            sources: vec![Source::BaselineRandom],
            requested: DEFAULT_REQUESTED_GUESSES,
            bins: DEFAULT_BINS,
            outlier_k: DEFAULT_OUTLIER_K,
            z: DEFAULT_Z,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRow {
    pub n_attrs: usize,
    pub source: Source,
    #[serde(rename = "R")]
    pub risk: Option<f64>,
    #[serde(rename = "dR")]
    pub d_risk: Option<f64>,
    pub r_train: Option<f64>,
    pub dr_train: Option<f64>,
    pub r_control: Option<f64>,
    pub dr_control: Option<f64>,
    #[serde(rename = "N_A")]
    pub n_a: usize,
    #[serde(rename = "N_S_train")]
    pub n_s_train: usize,
    #[serde(rename = "N_S_control")]
    pub n_s_control: usize,
    pub timing_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    /// Row with the largest risk, if any configuration produced one.
    pub headline: Option<AttackRow>,
    pub per_config: Vec<AttackRow>,
    pub z_alpha: f64,
    pub seed: u64,
    pub timing_seconds: f64,
    /// Guess sets in `per_config` order, for audit export.
    #[serde(skip)]
    pub guesses: Vec<GuessSet>,
}

impl AttackReport {
    pub fn headline_guesses(&self) -> Option<&GuessSet> {
        let h = self.headline.as_ref()?;
        self.per_config
            .iter()
            .position(|r| r == h)
            .map(|i| &self.guesses[i])
    }
}

/// Runs every (source, n_attrs) configuration and reports the one with the
/// largest risk alongside the full table.
pub fn run_singling_out(
    synthetic: &TabularDataset,
    train: &TabularDataset,
    control: &TabularDataset,
    cfg: &AttackConfig,
    embedding: Option<ArrayView2<f64>>,
) -> Result<AttackReport> {
    let start = Instant::now();
    if train.len() != control.len() {
        return Err(Error::Parameter(format!(
            "train and control must have equal size, got {} and {}",
            train.len(),
            control.len()
        )));
    }
    synthetic.schema().check_compatible(train.schema())?;
    synthetic.schema().check_compatible(control.schema())?;
    if !(cfg.z > 0.0) {
        return Err(Error::Parameter("z must be positive".into()));
    }
    let base = stream_seed(cfg.seed, Stream::Attack);
    let mut per_config = Vec::new();
    let mut guesses = Vec::new();
    for &source in &cfg.sources {
        for &n_attrs in cfg.n_attrs.iter().filter(|&&k| k <= synthetic.n_columns()) {
            let t0 = Instant::now();
            let gcfg = GuessConfig {
                n_attrs,
                requested: cfg.requested,
                bins: cfg.bins,
                outlier_k: cfg.outlier_k,
                source,
            };
            let mut rng = rng_from_seed(derive_seed(base, &[source.tag(), n_attrs as u64]));
            let gs = generate_guesses(synthetic, &gcfg, &mut rng, embedding)?;
            let n_s_train = evaluate_guesses(&gs, train);
            let n_s_control = evaluate_guesses(&gs, control);
            let mut row = AttackRow {
                n_attrs,
                source,
                risk: None,
                d_risk: None,
                r_train: None,
                dr_train: None,
                r_control: None,
                dr_control: None,
                n_a: gs.n_a(),
                n_s_train,
                n_s_control,
                timing_seconds: 0.0,
            };
            if gs.n_a() > 0 {
                let t = wilson_with_z(n_s_train, gs.n_a(), cfg.z)?;
                let c = wilson_with_z(n_s_control, gs.n_a(), cfg.z)?;
                row.r_train = Some(t.r);
                row.dr_train = Some(t.delta);
                row.r_control = Some(c.r);
                row.dr_control = Some(c.delta);
                if let Ok(rk) = risk_with_interval(t, c) {
                    row.risk = Some(rk.r);
                    row.d_risk = Some(rk.delta);
                }
            }
            row.timing_seconds = t0.elapsed().as_secs_f64();
            per_config.push(row);
            guesses.push(gs);
        }
    }
    if per_config.is_empty() {
        return Err(Error::Parameter("no attack configuration fits the column count".into()));
    }
    let headline = per_config
        .iter()
        .filter(|r| r.risk.is_some())
        .fold(None::<&AttackRow>, |best, r| match best {
            Some(b) if b.risk >= r.risk => Some(b),
            _ => Some(r),
        })
        .cloned();
    Ok(AttackReport {
        headline,
        per_config,
        z_alpha: cfg.z,
        seed: cfg.seed,
        timing_seconds: start.elapsed().as_secs_f64(),
        guesses,
    })
}
