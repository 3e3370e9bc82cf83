//! Schema-typed tabular data: CSV ingestion, type inference, splitting and
//! the two matrix encodings used downstream (raw metric space and network
//! input space).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Default per-indicator scale of the one-hot blocks in the raw metric
/// space. A single category substitution then contributes exactly 1 to the
/// euclidean distance.
pub const DEFAULT_ONEHOT_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    #[serde(alias = "FloatNumeric", alias = "float_numeric")]
    Float,
    #[serde(alias = "IntegerNumeric", alias = "integer_numeric", alias = "int")]
    Integer,
    #[serde(alias = "Categorical", alias = "category")]
    Categorical,
}

impl ColumnKind {
    pub fn is_numeric(self) -> bool {
        !matches!(self, ColumnKind::Categorical)
    }

    fn label(self) -> &'static str {
        match self {
            ColumnKind::Float => "float",
            ColumnKind::Integer => "integer",
            ColumnKind::Categorical => "categorical",
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    /// Category labels in first-occurrence order. Empty for numeric columns.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_max: Option<f64>,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>, kind: ColumnKind) -> Self {
        debug_assert!(kind.is_numeric());
        ColumnSchema {
            name: name.into(),
            kind,
            categories: Vec::new(),
            observed_min: None,
            observed_max: None,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
            observed_min: None,
            observed_max: None,
        }
    }

    pub fn category_code(&self, label: &str) -> Option<u32> {
        self.categories
            .iter()
            .position(|c| c == label)
            .map(|i| i as u32)
    }
}

/// Ordered list of column schemas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    columns: Vec<ColumnSchema>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self> {
        let mut seen = HashSet::new();
        for col in &columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", col.name)));
            }
            if col.kind == ColumnKind::Categorical {
                let mut labels = HashSet::new();
                if !col.categories.iter().all(|c| labels.insert(c.as_str())) {
                    return Err(Error::Schema(format!(
                        "column `{}` has duplicate categories",
                        col.name
                    )));
                }
            } else if !col.categories.is_empty() {
                return Err(Error::Schema(format!(
                    "numeric column `{}` declares categories",
                    col.name
                )));
            }
            if let (Some(lo), Some(hi)) = (col.observed_min, col.observed_max) {
                if lo > hi {
                    return Err(Error::Schema(format!(
                        "column `{}` has observed_min > observed_max",
                        col.name
                    )));
                }
            }
        }
        Ok(Schema { columns })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let columns: Vec<ColumnSchema> = serde_json::from_str(&text)?;
        Schema::new(columns)
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> &ColumnSchema {
        &self.columns[idx]
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Column names and kinds, the part of a schema that must agree for two
    /// datasets to be comparable. Category lists may differ.
    pub fn fingerprint(&self) -> String {
        self.columns
            .iter()
            .map(|c| format!("{}:{}", c.name, c.kind))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn check_compatible(&self, other: &Schema) -> Result<()> {
        if self.fingerprint() == other.fingerprint() {
            Ok(())
        } else {
            Err(Error::Schema(format!(
                "schema mismatch: [{}] vs [{}]",
                self.fingerprint(),
                other.fingerprint()
            )))
        }
    }

    /// Schema without observed statistics, suitable for a declaration file.
    pub fn declaration(&self) -> Schema {
        Schema {
            columns: self
                .columns
                .iter()
                .map(|c| ColumnSchema {
                    observed_min: None,
                    observed_max: None,
                    ..c.clone()
                })
                .collect(),
        }
    }
}

/// A single cell. Categorical cells hold an index into the column's
/// category list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Cat(u32),
}

impl Cell {
    pub fn as_num(self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(v),
            Cell::Cat(_) => None,
        }
    }

    pub fn as_cat(self) -> Option<u32> {
        match self {
            Cell::Cat(c) => Some(c),
            Cell::Num(_) => None,
        }
    }
}

pub type Record = Vec<Cell>;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    id: String,
    schema: Schema,
    rows: Vec<Record>,
}

impl TabularDataset {
    /// Builds a dataset, validating every cell against the schema and
    /// recomputing the observed numeric ranges.
    pub fn new(id: impl Into<String>, schema: Schema, rows: Vec<Record>) -> Result<Self> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Arity {
                    row: r,
                    expected: schema.len(),
                    found: row.len(),
                });
            }
            for (cell, col) in row.iter().zip(schema.columns()) {
                let ok = match (cell, col.kind) {
                    (Cell::Num(v), ColumnKind::Float) => v.is_finite(),
                    (Cell::Num(v), ColumnKind::Integer) => v.is_finite() && v.fract() == 0.0,
                    (Cell::Cat(c), ColumnKind::Categorical) => (*c as usize) < col.categories.len(),
                    _ => false,
                };
                if !ok {
                    return Err(Error::Schema(format!(
                        "row {r}: cell {cell:?} does not fit {} column `{}`",
                        col.kind, col.name
                    )));
                }
            }
        }
        let mut ds = TabularDataset {
            id: id.into(),
            schema,
            rows,
        };
        ds.refresh_observed();
        Ok(ds)
    }

    fn refresh_observed(&mut self) {
        for (j, col) in self.schema.columns.iter_mut().enumerate() {
            if !col.kind.is_numeric() {
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for row in &self.rows {
                if let Cell::Num(v) = row[j] {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if lo <= hi {
                col.observed_min = Some(lo);
                col.observed_max = Some(hi);
            } else {
                col.observed_min = None;
                col.observed_max = None;
            }
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Record {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.schema.len()
    }

    /// Rows at `indices`, in that order, sharing this dataset's category lists.
    pub fn subset(&self, indices: &[usize], id: impl Into<String>) -> TabularDataset {
        let mut ds = TabularDataset {
            id: id.into(),
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        };
        ds.refresh_observed();
        ds
    }

    /// Replaces the rows, keeping schema and id. Rows are validated.
    pub fn with_rows(&self, rows: Vec<Record>, id: impl Into<String>) -> Result<TabularDataset> {
        TabularDataset::new(id, self.schema.clone(), rows)
    }

    /// Text form of a cell as it would appear in a CSV file.
    pub fn cell_text(&self, col: usize, cell: Cell) -> String {
        let schema = self.schema.column(col);
        match cell {
            Cell::Cat(c) => schema.categories[c as usize].clone(),
            Cell::Num(v) if schema.kind == ColumnKind::Integer => format!("{}", v as i64),
            Cell::Num(v) => format!("{v}"),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(self.schema.names())?;
        for row in &self.rows {
            writer.write_record(
                row.iter()
                    .enumerate()
                    .map(|(j, &cell)| self.cell_text(j, cell)),
            )?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Re-expresses categorical codes against `target`'s category lists,
    /// appending labels that `target` does not know. Used to bring a dataset
    /// loaded on its own onto a reference schema.
    pub fn conform_to(&self, target: &Schema) -> Result<TabularDataset> {
        self.schema.check_compatible(target)?;
        let mut schema = target.clone();
        let mut remaps: Vec<Vec<u32>> = Vec::with_capacity(schema.len());
        for (j, col) in self.schema.columns().iter().enumerate() {
            let tcol = &mut schema.columns[j];
            let remap = col
                .categories
                .iter()
                .map(|label| match tcol.category_code(label) {
                    Some(code) => code,
                    None => {
                        tcol.categories.push(label.clone());
                        (tcol.categories.len() - 1) as u32
                    }
                })
                .collect();
            remaps.push(remap);
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &cell)| match cell {
                        Cell::Cat(c) => Cell::Cat(remaps[j][c as usize]),
                        num => num,
                    })
                    .collect()
            })
            .collect();
        let mut ds = TabularDataset {
            id: self.id.clone(),
            schema,
            rows,
        };
        ds.refresh_observed();
        Ok(ds)
    }
}

fn parse_numeric(
    text: &str,
    kind: ColumnKind,
    row: usize,
    column: &str,
) -> Result<f64> {
    let err = || Error::Parse {
        row,
        column: column.to_string(),
        value: text.to_string(),
        kind: kind.label(),
    };
    match kind {
        ColumnKind::Integer => {
            if let Ok(v) = text.parse::<i64>() {
                return Ok(v as f64);
            }
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() && v.fract() == 0.0 => Ok(v),
                _ => Err(err()),
            }
        }
        ColumnKind::Float => match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(err()),
        },
        ColumnKind::Categorical => unreachable!("categorical cells are not parsed"),
    }
}

fn infer_kind<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> ColumnKind {
    let mut any = false;
    let mut all_int = true;
    for cell in cells {
        any = true;
        if cell.parse::<i64>().is_ok() {
            continue;
        }
        all_int = false;
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => {}
            _ => return ColumnKind::Categorical,
        }
    }
    match (any, all_int) {
        (false, _) => ColumnKind::Categorical,
        (true, true) => ColumnKind::Integer,
        (true, false) => ColumnKind::Float,
    }
}

/// Builds a dataset from string cells. With `decl`, column kinds come from
/// the declaration (matched by name) and unknown category labels are
/// appended to the declared lists; without it, kinds are inferred.
pub fn dataset_from_strings(
    id: impl Into<String>,
    header: &[String],
    records: &[Vec<String>],
    decl: Option<&Schema>,
) -> Result<TabularDataset> {
    for (r, rec) in records.iter().enumerate() {
        if rec.len() != header.len() {
            return Err(Error::Arity {
                row: r,
                expected: header.len(),
                found: rec.len(),
            });
        }
    }
    let mut seen = HashSet::new();
    for name in header {
        if !seen.insert(name.as_str()) {
            return Err(Error::Schema(format!("duplicate column `{name}` in header")));
        }
    }

    // Source position in the header for each schema column.
    let (mut columns, positions): (Vec<ColumnSchema>, Vec<usize>) = match decl {
        Some(decl) => {
            if decl.len() != header.len() {
                return Err(Error::Schema(format!(
                    "declared schema has {} columns, file has {}",
                    decl.len(),
                    header.len()
                )));
            }
            let mut positions = Vec::with_capacity(decl.len());
            for col in decl.columns() {
                let pos = header
                    .iter()
                    .position(|h| h == &col.name)
                    .ok_or_else(|| Error::UnknownColumn(col.name.clone()))?;
                positions.push(pos);
            }
            (decl.declaration().columns, positions)
        }
        None => {
            let cols = header
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let kind = infer_kind(records.iter().map(|r| r[j].as_str()));
                    ColumnSchema {
                        name: name.clone(),
                        kind,
                        categories: Vec::new(),
                        observed_min: None,
                        observed_max: None,
                    }
                })
                .collect();
            (cols, (0..header.len()).collect())
        }
    };

    let mut lookups: Vec<HashMap<String, u32>> = columns
        .iter()
        .map(|c| {
            c.categories
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), i as u32))
                .collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(records.len());
    for (r, rec) in records.iter().enumerate() {
        let mut row = Vec::with_capacity(columns.len());
        for (j, col) in columns.iter_mut().enumerate() {
            let text = rec[positions[j]].as_str();
            let cell = if col.kind.is_numeric() {
                Cell::Num(parse_numeric(text, col.kind, r, &col.name)?)
            } else {
                let lookup = &mut lookups[j];
                let code = match lookup.get(text) {
                    Some(&c) => c,
                    None => {
                        let c = col.categories.len() as u32;
                        col.categories.push(text.to_string());
                        lookup.insert(text.to_string(), c);
                        c
                    }
                };
                Cell::Cat(code)
            };
            row.push(cell);
        }
        rows.push(row);
    }
    TabularDataset::new(id, Schema::new(columns)?, rows)
}

/// Reads a headed, comma-separated UTF-8 file.
pub fn load_csv(path: &Path, decl: Option<&Schema>) -> Result<TabularDataset> {
    let (id, header, records) = read_cells(path)?;
    dataset_from_strings(id, &header, &records, decl)
}

/// Reads only the named columns of a CSV file, in the given order. A
/// declaration, if any, may cover more columns than are kept.
pub fn load_csv_columns(path: &Path, names: &[impl AsRef<str>], decl: Option<&Schema>) -> Result<TabularDataset> {
    let (id, header, records) = read_cells(path)?;
    let positions = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == n.as_ref())
                .ok_or_else(|| Error::UnknownColumn(n.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    for (r, rec) in records.iter().enumerate() {
        if rec.len() != header.len() {
            return Err(Error::Arity { row: r, expected: header.len(), found: rec.len() });
        }
    }
    let header: Vec<String> = positions.iter().map(|&p| header[p].clone()).collect();
    let records: Vec<Vec<String>> = records
        .iter()
        .map(|rec| positions.iter().map(|&p| rec[p].clone()).collect())
        .collect();
    let decl = match decl {
        Some(d) => {
            let cols = header
                .iter()
                .map(|h| {
                    d.index_of(h)
                        .map(|j| d.column(j).clone())
                        .ok_or_else(|| Error::UnknownColumn(h.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(Schema::new(cols)?)
        }
        None => None,
    };
    dataset_from_strings(id, &header, &records, decl.as_ref())
}

fn read_cells(path: &Path) -> Result<(String, Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                _ => unreachable!(),
            },
            _ => Error::Csv(e),
        })?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Schema(format!("{}: missing header row", path.display())));
    }
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        records.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    Ok((id, header, records))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// (train, control, release)
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, control: f64, release: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            fractions: [train, control, release],
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::Parameter(format!(
                "split fractions must be non-negative, got {:?}",
                self.fractions
            )));
        }
        let sum: f64 = self.fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    /// (train, control, release) sizes for `n` rows. Train and control get
    /// floor(fraction * n); the remainder goes to release.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        // The small offset keeps exact products such as (1/3) * 75000 from
        // flooring one short.
        let take = |f: f64| (((f * n as f64) + 1e-9).floor() as usize).min(n);
        let train = take(self.fractions[0]);
        let control = take(self.fractions[1]).min(n - train);
        [train, control, n - train - control]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub control: Vec<usize>,
    pub release: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub fractions: [f64; 3],
    pub sizes: [usize; 3],
    pub row_indices: SplitIndices,
}

impl SplitManifest {
    /// True when no source row is assigned to more than one subset.
    pub fn is_disjoint(&self) -> bool {
        let mut seen = HashSet::new();
        let idx = &self.row_indices;
        idx.train
            .iter()
            .chain(&idx.control)
            .chain(&idx.release)
            .all(|i| seen.insert(*i))
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: TabularDataset,
    pub control: TabularDataset,
    pub release: TabularDataset,
    pub manifest: SplitManifest,
}

pub fn split(ds: &TabularDataset, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if ds.is_empty() {
        return Err(Error::Empty("cannot split an empty dataset"));
    }
    let n = ds.len();
    let sizes = spec.sizes(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(spec.seed));
    let train_idx = order[..sizes[0]].to_vec();
    let control_idx = order[sizes[0]..sizes[0] + sizes[1]].to_vec();
    let release_idx = order[sizes[0] + sizes[1]..].to_vec();
    Ok(Split {
        train: ds.subset(&train_idx, "train"),
        control: ds.subset(&control_idx, "control"),
        release: ds.subset(&release_idx, "release"),
        manifest: SplitManifest {
            seed: spec.seed,
            fractions: spec.fractions,
            sizes,
            row_indices: SplitIndices {
                train: train_idx,
                control: control_idx,
                release: release_idx,
            },
        },
    })
}

pub fn select_columns(ds: &TabularDataset, names: &[impl AsRef<str>]) -> Result<TabularDataset> {
    let idx = names
        .iter()
        .map(|n| {
            ds.schema
                .index_of(n.as_ref())
                .ok_or_else(|| Error::UnknownColumn(n.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let schema = Schema::new(idx.iter().map(|&j| ds.schema.column(j).clone()).collect())?;
    let rows = ds
        .rows
        .iter()
        .map(|row| idx.iter().map(|&j| row[j]).collect())
        .collect();
    TabularDataset::new(ds.id.clone(), schema, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    RawMetric,
    ModelInput,
    Embedded,
}

/// Dense row-major matrix with one row per source record.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    pub values: Array2<f64>,
    /// Schema column of each encoded column. Empty for embeddings, whose
    /// coordinates do not correspond to individual columns.
    pub column_map: Vec<usize>,
    pub encoding: Encoding,
}

impl EncodedMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }
}

/// Maps each category code of `from` to the matching code in `fitted`, by
/// label.
fn category_remap(from: &ColumnSchema, fitted: &[String]) -> Vec<Option<usize>> {
    from.categories
        .iter()
        .map(|label| fitted.iter().position(|f| f == label))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RawColumnFit {
    Numeric { mean: f64, std: f64 },
    Categorical { categories: Vec<String> },
}

/// Standardization and one-hot statistics fitted on a reference dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMetricEncoder {
    schema_fingerprint: String,
    columns: Vec<RawColumnFit>,
    onehot_scale: f64,
}

impl RawMetricEncoder {
    pub fn fit(fit: &TabularDataset) -> Result<Self> {
        Self::fit_with_scale(fit, DEFAULT_ONEHOT_SCALE)
    }

    pub fn fit_with_scale(fit: &TabularDataset, onehot_scale: f64) -> Result<Self> {
        if fit.is_empty() {
            return Err(Error::Empty("raw-metric fitting set"));
        }
        if !(onehot_scale > 0.0) {
            return Err(Error::Parameter("one-hot scale must be positive".into()));
        }
        let n = fit.len() as f64;
        let columns = fit
            .schema
            .columns()
            .iter()
            .enumerate()
            .map(|(j, col)| match col.kind {
                ColumnKind::Categorical => RawColumnFit::Categorical {
                    categories: col.categories.clone(),
                },
                _ => {
                    let mean = fit.rows.iter().map(|r| r[j].as_num().unwrap()).sum::<f64>() / n;
                    let var = fit
                        .rows
                        .iter()
                        .map(|r| {
                            let d = r[j].as_num().unwrap() - mean;
                            d * d
                        })
                        .sum::<f64>()
                        / n;
                    let std = var.sqrt();
                    RawColumnFit::Numeric {
                        mean,
                        std: if std < MIN_STD { 1.0 } else { std },
                    }
                }
            })
            .collect();
        Ok(RawMetricEncoder {
            schema_fingerprint: fit.schema.fingerprint(),
            columns,
            onehot_scale,
        })
    }

    pub fn width(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                RawColumnFit::Numeric { .. } => 1,
                RawColumnFit::Categorical { categories } => categories.len(),
            })
            .sum()
    }

    pub fn encode(&self, ds: &TabularDataset) -> Result<EncodedMatrix> {
        if ds.schema.fingerprint() != self.schema_fingerprint {
            return Err(Error::Schema(format!(
                "dataset `{}` does not match the fitted schema",
                ds.id
            )));
        }
        let width = self.width();
        let mut column_map = Vec::with_capacity(width);
        let mut offsets = Vec::with_capacity(self.columns.len());
        let mut remaps = Vec::with_capacity(self.columns.len());
        for (j, fit) in self.columns.iter().enumerate() {
            offsets.push(column_map.len());
            match fit {
                RawColumnFit::Numeric { .. } => {
                    column_map.push(j);
                    remaps.push(Vec::new());
                }
                RawColumnFit::Categorical { categories } => {
                    column_map.extend(std::iter::repeat_n(j, categories.len()));
                    remaps.push(category_remap(ds.schema.column(j), categories));
                }
            }
        }
        let mut values = Array2::<f64>::zeros((ds.len(), width));
        for (mut out, row) in values.outer_iter_mut().zip(&ds.rows) {
            for (j, fit) in self.columns.iter().enumerate() {
                match (fit, row[j]) {
                    (RawColumnFit::Numeric { mean, std }, Cell::Num(v)) => {
                        out[offsets[j]] = (v - mean) / std;
                    }
                    (RawColumnFit::Categorical { .. }, Cell::Cat(c)) => {
                        if let Some(k) = remaps[j][c as usize] {
                            out[offsets[j] + k] = self.onehot_scale;
                        }
                    }
                    _ => unreachable!("cells validated against schema"),
                }
            }
        }
        Ok(EncodedMatrix {
            values,
            column_map,
            encoding: Encoding::RawMetric,
        })
    }
}

/// Raw-metric encoding of `ds` with statistics fitted on `fit_stats_from`.
pub fn encode_raw_metric(ds: &TabularDataset, fit_stats_from: &TabularDataset) -> Result<EncodedMatrix> {
    ds.schema.check_compatible(&fit_stats_from.schema)?;
    RawMetricEncoder::fit(fit_stats_from)?.encode(ds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelColumnFit {
    Numeric { min: f64, max: f64 },
    Categorical { categories: Vec<String> },
}

/// Position of a schema column inside the network input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Index among numeric columns; occupies value and mask-indicator slots
    /// `2k` and `2k + 1`.
    Numeric(usize),
    /// Index among categorical columns.
    Categorical(usize),
}

/// Network-input representation of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    /// n × (2 · numeric columns): min-max scaled value followed by its mask
    /// indicator (0 = present).
    pub numeric: EncodedMatrix,
    /// n × categorical columns; code `cardinality[k]` is the MASK token.
    pub categorical: Array2<u32>,
    pub cardinality: Vec<usize>,
    pub slots: Vec<Slot>,
}

impl ModelInput {
    pub fn n_rows(&self) -> usize {
        self.categorical.nrows()
    }

    pub fn n_numeric(&self) -> usize {
        self.numeric.n_cols() / 2
    }

    pub fn n_categorical(&self) -> usize {
        self.cardinality.len()
    }

    pub fn mask_token(&self, k: usize) -> u32 {
        self.cardinality[k] as u32
    }
}

/// Min-max ranges and category lists for the network input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInputEncoder {
    schema_fingerprint: String,
    columns: Vec<ModelColumnFit>,
}

impl ModelInputEncoder {
    pub fn fit(ds: &TabularDataset) -> Result<Self> {
        let columns = ds
            .schema
            .columns()
            .iter()
            .map(|col| match col.kind {
                ColumnKind::Categorical => Ok(ModelColumnFit::Categorical {
                    categories: col.categories.clone(),
                }),
                _ => match (col.observed_min, col.observed_max) {
                    (Some(min), Some(max)) => Ok(ModelColumnFit::Numeric { min, max }),
                    _ => Err(Error::Empty("model-input fitting set")),
                },
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelInputEncoder {
            schema_fingerprint: ds.schema.fingerprint(),
            columns,
        })
    }

    pub fn schema_fingerprint(&self) -> &str {
        &self.schema_fingerprint
    }

    pub fn slots(&self) -> Vec<Slot> {
        let (mut n, mut c) = (0, 0);
        self.columns
            .iter()
            .map(|fit| match fit {
                ModelColumnFit::Numeric { .. } => {
                    n += 1;
                    Slot::Numeric(n - 1)
                }
                ModelColumnFit::Categorical { .. } => {
                    c += 1;
                    Slot::Categorical(c - 1)
                }
            })
            .collect()
    }

    pub fn cardinality(&self) -> Vec<usize> {
        self.columns
            .iter()
            .filter_map(|fit| match fit {
                ModelColumnFit::Categorical { categories } => Some(categories.len()),
                _ => None,
            })
            .collect()
    }

    pub fn encode(&self, ds: &TabularDataset) -> Result<ModelInput> {
        if ds.schema.fingerprint() != self.schema_fingerprint {
            return Err(Error::Schema(format!(
                "dataset `{}` does not match the model-input schema",
                ds.id
            )));
        }
        let slots = self.slots();
        let cardinality = self.cardinality();
        let n_num = slots.iter().filter(|s| matches!(s, Slot::Numeric(_))).count();
        let remaps: Vec<Vec<Option<usize>>> = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, fit)| match fit {
                ModelColumnFit::Categorical { categories } => {
                    category_remap(ds.schema.column(j), categories)
                }
                _ => Vec::new(),
            })
            .collect();
        let mut numeric = Array2::<f64>::zeros((ds.len(), 2 * n_num));
        let mut categorical = Array2::<u32>::zeros((ds.len(), cardinality.len()));
        for (i, row) in ds.rows.iter().enumerate() {
            for (j, fit) in self.columns.iter().enumerate() {
                match (fit, slots[j], row[j]) {
                    (ModelColumnFit::Numeric { min, max }, Slot::Numeric(k), Cell::Num(v)) => {
                        let range = max - min;
                        numeric[[i, 2 * k]] = if range > 0.0 { (v - min) / range } else { 0.5 };
                    }
                    (ModelColumnFit::Categorical { .. }, Slot::Categorical(k), Cell::Cat(c)) => {
                        categorical[[i, k]] =
                            remaps[j][c as usize].unwrap_or(cardinality[k]) as u32;
                    }
                    _ => unreachable!("cells validated against schema"),
                }
            }
        }
        let column_map = slots
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Slot::Numeric(_)))
            .flat_map(|(j, _)| [j, j])
            .collect();
        Ok(ModelInput {
            numeric: EncodedMatrix {
                values: numeric,
                column_map,
                encoding: Encoding::ModelInput,
            },
            categorical,
            cardinality,
            slots,
        })
    }
}

/// Network-input encoding of `ds` using its own observed ranges.
pub fn encode_model_input(ds: &TabularDataset) -> Result<ModelInput> {
    ModelInputEncoder::fit(ds)?.encode(ds)
}
