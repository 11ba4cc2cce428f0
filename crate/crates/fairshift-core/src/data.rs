//! Tabular datasets: schema'd columns with a missingness mask, CSV and
//! sidecar-schema text formats, deterministic splitting, and the
//! target-domain perturbations used in the shift experiments (injected
//! missingness with mean imputation, group-biased downsampling).
//!
//! All cells are stored as `f64`; binary labels are encoded ±1 and
//! categorical columns are one-hot expanded at load time. A masked cell's
//! stored value is meaningless and must never be consumed.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::rng::row_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Feature,
    Protected,
    Outcome,
    DomainIndicator,
}

impl ColumnRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnRole::Feature => "feature",
            ColumnRole::Protected => "protected",
            ColumnRole::Outcome => "outcome",
            ColumnRole::DomainIndicator => "domain-indicator",
        }
    }

    fn parse(s: &str) -> Option<ColumnRole> {
        Some(match s {
            "feature" => ColumnRole::Feature,
            "protected" => ColumnRole::Protected,
            "outcome" => ColumnRole::Outcome,
            "domain-indicator" => ColumnRole::DomainIndicator,
            _ => return None,
        })
    }
}

/// Column kind as declared in the sidecar schema (pre-expansion).
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnKind {
    Numeric,
    /// ±1-encoded binary column. With `levels: Some((plus, minus))` the CSV
    /// holds those strings; otherwise cells must literally be 1 or -1.
    BinaryLabel { levels: Option<(String, String)> },
    Categorical { levels: Vec<String> },
}

/// One sidecar schema entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: ColumnRole,
    /// Emit a 0/1 `<name>_missing` feature recording the missingness mask.
    pub missing_indicator: bool,
}

/// Kind of a stored (post-expansion) column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoredKind {
    Numeric,
    BinaryLabel,
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub role: ColumnRole,
    pub kind: StoredKind,
    /// Source column for one-hot expansions and missingness indicators;
    /// subset enumeration treats a source column's derivatives as one block.
    pub source: Option<String>,
    /// Set when this column is the 0/1 missingness indicator of `source`.
    pub is_indicator: bool,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl Column {
    pub fn numeric(name: &str, role: ColumnRole, values: Vec<f64>) -> Column {
        let n = values.len();
        Column {
            name: name.to_string(),
            role,
            kind: StoredKind::Numeric,
            source: None,
            is_indicator: false,
            values,
            mask: vec![false; n],
        }
    }

    pub fn binary(name: &str, role: ColumnRole, values: Vec<f64>) -> Column {
        let n = values.len();
        Column {
            name: name.to_string(),
            role,
            kind: StoredKind::BinaryLabel,
            source: None,
            is_indicator: false,
            values,
            mask: vec![false; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataError {
    DuplicateColumn(String),
    UnknownColumn(String),
    RowLengthMismatch { row: usize, got: usize, want: usize },
    ColumnLengthMismatch(String),
    HeaderMismatch { missing: Vec<String>, extra: Vec<String> },
    Unparseable { row: usize, column: String, cell: String },
    UnknownCategory { row: usize, column: String, value: String },
    RoleCount { role: &'static str, count: usize },
    BadFractions,
    EmptyStatsColumn(String),
    NonNumericImpute(String),
    MaskedCell(String),
    MalformedSchemaLine { line: usize, text: String },
    UnknownLevel { column: String, level: String },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::DuplicateColumn(c) => write!(f, "duplicate column `{c}`"),
            DataError::UnknownColumn(c) => write!(f, "unknown column `{c}`"),
            DataError::RowLengthMismatch { row, got, want } => {
                write!(f, "row {row} has {got} cells, expected {want}")
            }
            DataError::ColumnLengthMismatch(c) => {
                write!(f, "column `{c}` length differs from the rest")
            }
            DataError::HeaderMismatch { missing, extra } => {
                write!(f, "header mismatch: missing {missing:?}, unexpected {extra:?}")
            }
            DataError::Unparseable { row, column, cell } => {
                write!(f, "cannot parse `{cell}` (row {row}, column `{column}`)")
            }
            DataError::UnknownCategory { row, column, value } => {
                write!(f, "unknown category `{value}` in column `{column}` (row {row})")
            }
            DataError::RoleCount { role, count } => {
                write!(f, "schema must have exactly one {role} column, found {count}")
            }
            DataError::BadFractions => write!(f, "split fractions must be positive and sum to 1"),
            DataError::EmptyStatsColumn(c) => {
                write!(f, "column `{c}` has no unmasked values to take statistics from")
            }
            DataError::NonNumericImpute(c) => {
                write!(f, "column `{c}` is not numeric and cannot be mean-imputed")
            }
            DataError::MaskedCell(c) => {
                write!(f, "column `{c}` still contains masked cells")
            }
            DataError::MalformedSchemaLine { line, text } => {
                write!(f, "malformed schema line {line}: `{text}`")
            }
            DataError::UnknownLevel { column, level } => {
                write!(f, "level `{level}` does not occur in column `{column}`")
            }
        }
    }
}

impl core::error::Error for DataError {}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    columns: Vec<Column>,
}

impl Dataset {
    /// Assemble a dataset, checking name uniqueness and row-count agreement.
    pub fn new(columns: Vec<Column>) -> Result<Dataset, DataError> {
        let n = columns.first().map(|c| c.values.len()).unwrap_or(0);
        for c in &columns {
            if c.values.len() != n || c.mask.len() != n {
                return Err(DataError::ColumnLengthMismatch(c.name.clone()));
            }
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|p| p.name == c.name) {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
        }
        Ok(Dataset { columns })
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map(|c| c.values.len()).unwrap_or(0)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column, DataError> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    }

    fn column_mut(&mut self, name: &str) -> Result<&mut Column, DataError> {
        self.columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    }

    pub fn outcome_column(&self) -> Result<&Column, DataError> {
        self.role_column(ColumnRole::Outcome, "outcome")
    }

    pub fn protected_column(&self) -> Result<&Column, DataError> {
        self.role_column(ColumnRole::Protected, "protected")
    }

    fn role_column(&self, role: ColumnRole, label: &'static str) -> Result<&Column, DataError> {
        let mut it = self.columns.iter().filter(|c| c.role == role);
        match (it.next(), it.next()) {
            (Some(c), None) => Ok(c),
            (first, _) => Err(DataError::RoleCount {
                role: label,
                count: if first.is_some() { 2 } else { 0 },
            }),
        }
    }

    /// Names of the columns a model may consume (features and the protected
    /// attribute), in schema order.
    pub fn model_feature_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| matches!(c.role, ColumnRole::Feature | ColumnRole::Protected))
            .map(|c| c.name.clone())
            .collect()
    }

    /// Distinct subset-enumeration blocks: a source column and all columns
    /// derived from it (one-hot expansions, missingness indicators) count as
    /// one selectable unit.
    pub fn feature_blocks(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.columns {
            if !matches!(c.role, ColumnRole::Feature | ColumnRole::Protected) {
                continue;
            }
            let key = c.source.clone().unwrap_or_else(|| c.name.clone());
            if !out.contains(&key) {
                out.push(key);
            }
        }
        out
    }

    /// Expand block names (source columns) to stored column names.
    pub fn expand_blocks(&self, blocks: &[&str]) -> Result<Vec<String>, DataError> {
        let mut out = Vec::new();
        for b in blocks {
            let mut found = false;
            for c in &self.columns {
                let key = c.source.as_deref().unwrap_or(&c.name);
                if key == *b {
                    out.push(c.name.clone());
                    found = true;
                }
            }
            if !found {
                return Err(DataError::UnknownColumn(b.to_string()));
            }
        }
        Ok(out)
    }

    /// Row-major feature matrix over the named columns. Errors on masked
    /// cells: consumers of feature values require a fully-imputed dataset.
    pub fn feature_matrix(&self, names: &[&str]) -> Result<Matrix, DataError> {
        let cols: Vec<&Column> =
            names.iter().map(|n| self.column(n)).collect::<Result<_, _>>()?;
        for c in &cols {
            if c.mask.iter().any(|&m| m) {
                return Err(DataError::MaskedCell(c.name.clone()));
            }
        }
        let n = self.n_rows();
        let k = cols.len();
        let mut data = Vec::with_capacity(n * k);
        for i in 0..n {
            for c in &cols {
                data.push(c.values[i]);
            }
        }
        Ok(Matrix { data, rows: n, cols: k })
    }

    /// Unmasked ±1 outcome labels.
    pub fn labels(&self) -> Result<Vec<f64>, DataError> {
        let c = self.outcome_column()?;
        if c.mask.iter().any(|&m| m) {
            return Err(DataError::MaskedCell(c.name.clone()));
        }
        Ok(c.values.clone())
    }

    /// Unmasked ±1 protected-group values.
    pub fn groups(&self) -> Result<Vec<f64>, DataError> {
        let c = self.protected_column()?;
        if c.mask.iter().any(|&m| m) {
            return Err(DataError::MaskedCell(c.name.clone()));
        }
        Ok(c.values.clone())
    }

    /// Sub-dataset with only the named columns (e.g. a covariate view for
    /// domain-discriminator fitting). Order follows `names`.
    pub fn select_columns(&self, names: &[&str]) -> Result<Dataset, DataError> {
        let columns: Vec<Column> = names
            .iter()
            .map(|n| self.column(n).cloned())
            .collect::<Result<_, _>>()?;
        Dataset::new(columns)
    }

    pub fn take_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                role: c.role,
                kind: c.kind,
                source: c.source.clone(),
                is_indicator: c.is_indicator,
                values: rows.iter().map(|&r| c.values[r]).collect(),
                mask: rows.iter().map(|&r| c.mask[r]).collect(),
            })
            .collect();
        Dataset { columns }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone)]
pub struct Matrix {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl Matrix {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Matrix {
        assert_eq!(data.len(), rows * cols);
        Matrix { data, rows, cols }
    }

    /// Assemble from equal-length column slices.
    pub fn from_columns(columns: &[&[f64]]) -> Matrix {
        let rows = columns.first().map(|c| c.len()).unwrap_or(0);
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for c in columns {
                assert_eq!(c.len(), rows);
                data.push(c[i]);
            }
        }
        Matrix { data, rows, cols }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Deterministic largest-remainder apportionment of `n` into `fractions`.
pub fn largest_remainder_sizes(n: usize, fractions: &[f64]) -> Result<Vec<usize>, DataError> {
    if fractions.is_empty() || fractions.iter().any(|&f| f <= 0.0 || !f.is_finite()) {
        return Err(DataError::BadFractions);
    }
    let sum: f64 = fractions.iter().sum();
    if libm::fabs(sum - 1.0) > 1e-9 {
        return Err(DataError::BadFractions);
    }
    let raw: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = raw.iter().map(|&r| libm::floor(r) as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    // Stable by construction: ties go to the earlier fraction.
    order.sort_by(|&a, &b| {
        let fa = raw[a] - libm::floor(raw[a]);
        let fb = raw[b] - libm::floor(raw[b]);
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for i in 0..(n - assigned) {
        sizes[order[i]] += 1;
    }
    Ok(sizes)
}

/// Disjoint row partition with sizes proportional to `fractions`
/// (largest-remainder rounding), rows assigned by a seeded shuffle.
pub fn split(ds: &Dataset, fractions: &[f64], seed: u64) -> Result<Vec<Dataset>, DataError> {
    let n = ds.n_rows();
    let sizes = largest_remainder_sizes(n, fractions)?;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = row_rng(seed, 0);
    // Fisher-Yates.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &s in &sizes {
        out.push(ds.take_rows(&perm[start..start + s]));
        start += s;
    }
    Ok(out)
}

/// Mask exactly `round(fraction * n)` uniformly-chosen rows in `column`.
/// If the dataset carries a missingness indicator for that column, the
/// indicator is set on the chosen rows: injected missingness is a
/// measurement-policy change the models are allowed to see.
pub fn inject_missingness(
    ds: &Dataset,
    column: &str,
    fraction: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    let mut out = ds.clone();
    out.column(column)?;
    let n = out.n_rows();
    let k = libm::round(fraction * n as f64) as usize;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = row_rng(seed, 0);
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let chosen = &perm[..k.min(n)];
    {
        let col = out.column_mut(column)?;
        for &r in chosen {
            col.mask[r] = true;
        }
    }
    let indicator_name = out
        .columns
        .iter()
        .find(|c| c.is_indicator && c.source.as_deref() == Some(column))
        .map(|c| c.name.clone());
    if let Some(ind) = indicator_name {
        let col = out.column_mut(&ind)?;
        for &r in chosen {
            col.values[r] = 1.0;
        }
    }
    Ok(out)
}

/// Replace each masked numeric cell with the unmasked mean of the same
/// column in `stats_source` (normally the training split), then clear the
/// mask. Masked non-numeric cells cannot be imputed and are an error.
pub fn impute_mean(ds: &Dataset, stats_source: &Dataset) -> Result<Dataset, DataError> {
    let mut out = ds.clone();
    for col in &mut out.columns {
        if !col.mask.iter().any(|&m| m) {
            continue;
        }
        if col.kind != StoredKind::Numeric {
            return Err(DataError::NonNumericImpute(col.name.clone()));
        }
        let src = stats_source.column(&col.name)?;
        let mut sum = 0.0;
        let mut cnt = 0usize;
        for (v, &m) in src.values.iter().zip(&src.mask) {
            if !m {
                sum += v;
                cnt += 1;
            }
        }
        if cnt == 0 {
            return Err(DataError::EmptyStatsColumn(col.name.clone()));
        }
        let mean = sum / cnt as f64;
        for (v, m) in col.values.iter_mut().zip(col.mask.iter_mut()) {
            if *m {
                *v = mean;
                *m = false;
            }
        }
    }
    Ok(out)
}

/// Drop each row whose `column` equals `level` independently with
/// probability `reject_prob` (selection bias against one group).
pub fn downsample_group(
    ds: &Dataset,
    column: &str,
    level: f64,
    reject_prob: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    let col = ds.column(column)?;
    if !col.values.iter().zip(&col.mask).any(|(&v, &m)| !m && v == level) {
        return Err(DataError::UnknownLevel {
            column: column.to_string(),
            level: format!("{level}"),
        });
    }
    let keep: Vec<usize> = (0..ds.n_rows())
        .filter(|&r| {
            if col.mask[r] || col.values[r] != level {
                return true;
            }
            let u: f64 = row_rng(seed, r as u64).random();
            u >= reject_prob
        })
        .collect();
    Ok(ds.take_rows(&keep))
}

// ---------------------------------------------------------------------------
// Text formats

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse CSV text against a sidecar schema. Empty cells set the missingness
/// mask; categorical columns are one-hot expanded in place (column order
/// follows the header; indicator columns are appended at the end).
pub fn load_csv(text: &str, specs: &[ColumnSpec]) -> Result<Dataset, DataError> {
    validate_schema(specs)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = match lines.next() {
        Some(h) => h.split(',').map(str::trim).collect(),
        None => {
            return Err(DataError::HeaderMismatch {
                missing: specs.iter().map(|s| s.name.clone()).collect(),
                extra: Vec::new(),
            })
        }
    };
    let missing: Vec<String> = specs
        .iter()
        .map(|s| s.name.clone())
        .filter(|n| !header.contains(&n.as_str()))
        .collect();
    let extra: Vec<String> = header
        .iter()
        .filter(|h| !specs.iter().any(|s| s.name == **h))
        .map(|h| h.to_string())
        .collect();
    let dup = header.iter().enumerate().any(|(i, h)| header[..i].contains(h));
    if !missing.is_empty() || !extra.is_empty() || dup {
        return Err(DataError::HeaderMismatch { missing, extra });
    }

    let ordered: Vec<&ColumnSpec> = header
        .iter()
        .map(|h| specs.iter().find(|s| s.name == *h).expect("validated"))
        .collect();

    let mut cells_by_col: Vec<Vec<&str>> = vec![Vec::new(); header.len()];
    for (ri, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(DataError::RowLengthMismatch {
                row: ri + 1,
                got: cells.len(),
                want: header.len(),
            });
        }
        for (ci, cell) in cells.into_iter().enumerate() {
            cells_by_col[ci].push(cell);
        }
    }

    let mut columns: Vec<Column> = Vec::new();
    let mut indicators: Vec<Column> = Vec::new();
    for (spec, cells) in ordered.iter().zip(&cells_by_col) {
        let n = cells.len();
        let mut mask = vec![false; n];
        match &spec.kind {
            ColumnKind::Numeric | ColumnKind::BinaryLabel { .. } => {
                let mut values = vec![0.0; n];
                for (r, cell) in cells.iter().enumerate() {
                    if cell.is_empty() {
                        mask[r] = true;
                        continue;
                    }
                    values[r] = parse_cell(spec, r, cell)?;
                }
                columns.push(Column {
                    name: spec.name.clone(),
                    role: spec.role,
                    kind: match spec.kind {
                        ColumnKind::Numeric => StoredKind::Numeric,
                        _ => StoredKind::BinaryLabel,
                    },
                    source: None,
                    is_indicator: false,
                    values,
                    mask: mask.clone(),
                });
            }
            ColumnKind::Categorical { levels } => {
                for (r, cell) in cells.iter().enumerate() {
                    if cell.is_empty() {
                        mask[r] = true;
                    } else if !levels.iter().any(|l| l == cell) {
                        return Err(DataError::UnknownCategory {
                            row: r + 1,
                            column: spec.name.clone(),
                            value: cell.to_string(),
                        });
                    }
                }
                for level in levels {
                    let values: Vec<f64> = cells
                        .iter()
                        .map(|c| if *c == level.as_str() { 1.0 } else { 0.0 })
                        .collect();
                    columns.push(Column {
                        name: format!("{}={}", spec.name, level),
                        role: spec.role,
                        kind: StoredKind::Numeric,
                        source: Some(spec.name.clone()),
                        is_indicator: false,
                        values,
                        mask: mask.clone(),
                    });
                }
            }
        }
        if spec.missing_indicator {
            indicators.push(Column {
                name: format!("{}_missing", spec.name),
                role: ColumnRole::Feature,
                kind: StoredKind::Numeric,
                source: Some(spec.name.clone()),
                is_indicator: true,
                values: mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
                mask: vec![false; n],
            });
        }
    }
    columns.extend(indicators);
    Dataset::new(columns)
}

fn parse_cell(spec: &ColumnSpec, row: usize, cell: &str) -> Result<f64, DataError> {
    match &spec.kind {
        ColumnKind::Numeric => parse_number(cell).ok_or_else(|| DataError::Unparseable {
            row: row + 1,
            column: spec.name.clone(),
            cell: cell.to_string(),
        }),
        ColumnKind::BinaryLabel { levels } => match levels {
            Some((plus, minus)) => {
                if cell == plus {
                    Ok(1.0)
                } else if cell == minus {
                    Ok(-1.0)
                } else {
                    Err(DataError::Unparseable {
                        row: row + 1,
                        column: spec.name.clone(),
                        cell: cell.to_string(),
                    })
                }
            }
            None => match parse_number(cell) {
                Some(v) if v == 1.0 || v == -1.0 => Ok(v),
                _ => Err(DataError::Unparseable {
                    row: row + 1,
                    column: spec.name.clone(),
                    cell: cell.to_string(),
                }),
            },
        },
        ColumnKind::Categorical { .. } => unreachable!("handled by caller"),
    }
}

fn validate_schema(specs: &[ColumnSpec]) -> Result<(), DataError> {
    for (i, s) in specs.iter().enumerate() {
        if specs[..i].iter().any(|p| p.name == s.name) {
            return Err(DataError::DuplicateColumn(s.name.clone()));
        }
    }
    for (role, label) in [(ColumnRole::Outcome, "outcome"), (ColumnRole::Protected, "protected")] {
        let count = specs.iter().filter(|s| s.role == role).count();
        if count != 1 {
            return Err(DataError::RoleCount { role: label, count });
        }
    }
    Ok(())
}

/// Serialize to CSV. Binary labels print as integers, numeric cells at 17
/// significant digits (round-trip exact for f64), masked cells as empty.
pub fn serialize_csv(ds: &Dataset) -> String {
    let mut out = String::new();
    for (i, c) in ds.columns().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&c.name);
    }
    out.push('\n');
    for r in 0..ds.n_rows() {
        for (i, c) in ds.columns().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            if c.mask[r] {
                continue;
            }
            match c.kind {
                StoredKind::BinaryLabel => {
                    out.push_str(if c.values[r] > 0.0 { "1" } else { "-1" })
                }
                StoredKind::Numeric => out.push_str(&format_float(c.values[r])),
            }
        }
        out.push('\n');
    }
    out
}

/// 17-significant-digit float rendering.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sidecar schema describing the *stored* columns of `ds`, so a serialized
/// dataset can be reloaded (expanded columns come back as plain numerics).
pub fn stored_specs(ds: &Dataset) -> Vec<ColumnSpec> {
    ds.columns()
        .iter()
        .map(|c| ColumnSpec {
            name: c.name.clone(),
            kind: match c.kind {
                StoredKind::Numeric => ColumnKind::Numeric,
                StoredKind::BinaryLabel => ColumnKind::BinaryLabel { levels: None },
            },
            role: c.role,
            missing_indicator: false,
        })
        .collect()
}

/// Parse the sidecar schema format: one
/// `column <name> <kind> <role> [levels ...] [indicator]` line per column,
/// `#` comments. Kinds: `numeric`, `binary-label` (optional
/// `levels <plus> <minus>`), `categorical` (mandatory `levels ...`).
pub fn parse_schema(text: &str) -> Result<Vec<ColumnSpec>, DataError> {
    let mut specs = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let err = || DataError::MalformedSchemaLine { line: ln + 1, text: line.to_string() };
        let mut tok = line.split_whitespace();
        if tok.next() != Some("column") {
            return Err(err());
        }
        let name = tok.next().ok_or_else(err)?.to_string();
        let kind_tok = tok.next().ok_or_else(err)?;
        let role = ColumnRole::parse(tok.next().ok_or_else(err)?).ok_or_else(err)?;
        let rest: Vec<&str> = tok.collect();
        let mut indicator = false;
        let mut levels: Vec<String> = Vec::new();
        let mut i = 0;
        while i < rest.len() {
            match rest[i] {
                "indicator" => {
                    indicator = true;
                    i += 1;
                }
                "levels" => {
                    i += 1;
                    while i < rest.len() && rest[i] != "indicator" {
                        levels.push(rest[i].to_string());
                        i += 1;
                    }
                }
                _ => return Err(err()),
            }
        }
        let kind = match kind_tok {
            "numeric" if levels.is_empty() => ColumnKind::Numeric,
            "binary-label" => match levels.len() {
                0 => ColumnKind::BinaryLabel { levels: None },
                2 => ColumnKind::BinaryLabel {
                    levels: Some((levels[0].clone(), levels[1].clone())),
                },
                _ => return Err(err()),
            },
            "categorical" if !levels.is_empty() => ColumnKind::Categorical { levels },
            _ => return Err(err()),
        };
        specs.push(ColumnSpec { name, kind, role, missing_indicator: indicator });
    }
    validate_schema(&specs)?;
    Ok(specs)
}

pub fn serialize_schema(specs: &[ColumnSpec]) -> String {
    let mut out = String::new();
    for s in specs {
        out.push_str("column ");
        out.push_str(&s.name);
        match &s.kind {
            ColumnKind::Numeric => {
                out.push_str(" numeric ");
                out.push_str(s.role.as_str());
            }
            ColumnKind::BinaryLabel { levels } => {
                out.push_str(" binary-label ");
                out.push_str(s.role.as_str());
                if let Some((p, m)) = levels {
                    out.push_str(" levels ");
                    out.push_str(p);
                    out.push(' ');
                    out.push_str(m);
                }
            }
            ColumnKind::Categorical { levels } => {
                out.push_str(" categorical ");
                out.push_str(s.role.as_str());
                out.push_str(" levels");
                for l in levels {
                    out.push(' ');
                    out.push_str(l);
                }
            }
        }
        if s.missing_indicator {
            out.push_str(" indicator");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, kind: ColumnKind, role: ColumnRole) -> ColumnSpec {
        ColumnSpec { name: name.to_string(), kind, role, missing_indicator: false }
    }

    fn fig1a_specs() -> Vec<ColumnSpec> {
        vec![
            spec("C1", ColumnKind::Numeric, ColumnRole::DomainIndicator),
            spec("X1", ColumnKind::Numeric, ColumnRole::Feature),
            spec("X2", ColumnKind::Numeric, ColumnRole::Feature),
            spec("D", ColumnKind::BinaryLabel { levels: None }, ColumnRole::Protected),
            spec("Y", ColumnKind::BinaryLabel { levels: None }, ColumnRole::Outcome),
        ]
    }

    #[test]
    fn load_source_table() {
        let csv = "C1,X1,X2,D,Y\n0,0.5,-1.2,1,1\n0,-0.1,0.3,-1,-1\n0,2.0,1.1,1,-1\n";
        let ds = load_csv(csv, &fig1a_specs()).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.columns().len(), 5);
        assert_eq!(ds.column("X1").unwrap().values, vec![0.5, -0.1, 2.0]);
        assert_eq!(ds.column("Y").unwrap().values, vec![1.0, -1.0, -1.0]);
    }

    #[test]
    fn empty_cell_sets_mask() {
        let csv = "C1,X1,X2,D,Y\n0,,0.3,-1,-1\n";
        let ds = load_csv(csv, &fig1a_specs()).unwrap();
        assert!(ds.column("X1").unwrap().mask[0]);
        assert!(!ds.column("X2").unwrap().mask[0]);
    }

    #[test]
    fn header_mismatch_errors() {
        let specs = fig1a_specs();
        let err = load_csv("C1,X1,X2,D\n0,1,2,1\n", &specs).unwrap_err();
        assert_eq!(
            err,
            DataError::HeaderMismatch { missing: vec!["Y".to_string()], extra: vec![] }
        );
        assert!(matches!(
            load_csv("C1,X1,X2,D,Y,Z\n0,1,2,1,1,9\n", &specs),
            Err(DataError::HeaderMismatch { .. })
        ));
    }

    #[test]
    fn binary_cells_must_be_plus_minus_one() {
        let err = load_csv("C1,X1,X2,D,Y\n0,1,2,3,1\n", &fig1a_specs()).unwrap_err();
        assert!(matches!(err, DataError::Unparseable { .. }));
    }

    #[test]
    fn binary_levels_encode() {
        let specs = vec![
            spec(
                "D",
                ColumnKind::BinaryLabel {
                    levels: Some(("a".to_string(), "d".to_string())),
                },
                ColumnRole::Protected,
            ),
            spec("Y", ColumnKind::BinaryLabel { levels: None }, ColumnRole::Outcome),
        ];
        let ds = load_csv("D,Y\na,1\nd,-1\n", &specs).unwrap();
        assert_eq!(ds.column("D").unwrap().values, vec![1.0, -1.0]);
    }

    #[test]
    fn categorical_expansion_and_unknown_level() {
        let specs = vec![
            spec(
                "dept",
                ColumnKind::Categorical {
                    levels: vec!["eng".to_string(), "ops".to_string()],
                },
                ColumnRole::Feature,
            ),
            spec("D", ColumnKind::BinaryLabel { levels: None }, ColumnRole::Protected),
            spec("Y", ColumnKind::BinaryLabel { levels: None }, ColumnRole::Outcome),
        ];
        let ds = load_csv("dept,D,Y\neng,1,1\nops,-1,-1\n", &specs).unwrap();
        assert_eq!(ds.column("dept=eng").unwrap().values, vec![1.0, 0.0]);
        assert_eq!(ds.column("dept=ops").unwrap().values, vec![0.0, 1.0]);
        assert_eq!(ds.column("dept=eng").unwrap().source.as_deref(), Some("dept"));
        assert_eq!(ds.feature_blocks(), vec!["dept".to_string(), "D".to_string()]);
        assert_eq!(
            ds.expand_blocks(&["dept"]).unwrap(),
            vec!["dept=eng".to_string(), "dept=ops".to_string()]
        );
        assert!(matches!(
            load_csv("dept,D,Y\nhr,1,1\n", &specs),
            Err(DataError::UnknownCategory { .. })
        ));
    }

    #[test]
    fn missing_indicator_materializes_and_updates() {
        let mut specs = fig1a_specs();
        specs[1].missing_indicator = true; // X1
        let csv = "C1,X1,X2,D,Y\n0,,0.3,-1,-1\n0,1.0,0.1,1,1\n0,2.0,0.2,1,-1\n";
        let ds = load_csv(csv, &specs).unwrap();
        let ind = ds.column("X1_missing").unwrap();
        assert_eq!(ind.values, vec![1.0, 0.0, 0.0]);
        assert!(ind.is_indicator);
        // Injection flips indicators for newly-masked rows.
        let ds2 = inject_missingness(&ds, "X1", 1.0, 7).unwrap();
        assert_eq!(ds2.column("X1_missing").unwrap().values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn split_sizes_match_largest_remainder() {
        let sizes =
            largest_remainder_sizes(300, &[0.67 * 2.0 / 3.0, 0.67 / 3.0, 0.33]).unwrap();
        assert_eq!(sizes, vec![134, 67, 99]);
    }

    #[test]
    fn split_partitions_and_is_deterministic() {
        let n = 100;
        let ds = Dataset::new(vec![
            Column::numeric("x", ColumnRole::Feature, (0..n).map(|i| i as f64).collect()),
            Column::binary("D", ColumnRole::Protected, vec![1.0; n]),
            Column::binary("Y", ColumnRole::Outcome, vec![1.0; n]),
        ])
        .unwrap();
        let parts = split(&ds, &[0.5, 0.3, 0.2], 11).unwrap();
        assert_eq!(parts.iter().map(Dataset::n_rows).collect::<Vec<_>>(), vec![50, 30, 20]);
        let mut seen: Vec<f64> = parts
            .iter()
            .flat_map(|p| p.column("x").unwrap().values.clone())
            .collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(seen, (0..n).map(|i| i as f64).collect::<Vec<_>>());

        let again = split(&ds, &[0.5, 0.3, 0.2], 11).unwrap();
        assert_eq!(parts[0].column("x").unwrap().values, again[0].column("x").unwrap().values);
        let identity = split(&ds, &[1.0], 3).unwrap();
        assert_eq!(identity[0].n_rows(), n);
        assert!(split(&ds, &[0.5, 0.6], 3).is_err());
    }

    #[test]
    fn inject_counts_exactly() {
        let n = 1000;
        let ds = Dataset::new(vec![
            Column::numeric("x", ColumnRole::Feature, vec![1.0; n]),
            Column::binary("D", ColumnRole::Protected, vec![1.0; n]),
            Column::binary("Y", ColumnRole::Outcome, vec![1.0; n]),
        ])
        .unwrap();
        let out = inject_missingness(&ds, "x", 0.3, 5).unwrap();
        let masked = out.column("x").unwrap().mask.iter().filter(|&&m| m).count();
        assert_eq!(masked, 300);
        let none = inject_missingness(&ds, "x", 0.0, 5).unwrap();
        assert_eq!(none.column("x").unwrap().mask.iter().filter(|&&m| m).count(), 0);
        let all = inject_missingness(&ds, "x", 1.0, 5).unwrap();
        assert!(all.column("x").unwrap().mask.iter().all(|&m| m));
        assert!(inject_missingness(&ds, "zz", 0.3, 5).is_err());
        // Purity: the input is untouched.
        assert!(!ds.column("x").unwrap().mask.iter().any(|&m| m));
    }

    #[test]
    fn impute_uses_stats_source_mean() {
        let stats = Dataset::new(vec![
            Column::numeric("x", ColumnRole::Feature, vec![1.0, 2.0]),
            Column::binary("D", ColumnRole::Protected, vec![1.0, 1.0]),
            Column::binary("Y", ColumnRole::Outcome, vec![1.0, -1.0]),
        ])
        .unwrap();
        let mut col = Column::numeric("x", ColumnRole::Feature, vec![1.0, 2.0, 0.0]);
        col.mask[2] = true;
        let ds = Dataset::new(vec![
            col,
            Column::binary("D", ColumnRole::Protected, vec![1.0, 1.0, 1.0]),
            Column::binary("Y", ColumnRole::Outcome, vec![1.0, -1.0, 1.0]),
        ])
        .unwrap();
        let out = impute_mean(&ds, &stats).unwrap();
        assert_eq!(out.column("x").unwrap().values, vec![1.0, 2.0, 1.5]);
        assert!(!out.column("x").unwrap().mask.iter().any(|&m| m));
        // No masked cells: identity, even against itself.
        let noop = impute_mean(&out, &out).unwrap();
        assert_eq!(noop.column("x").unwrap().values, out.column("x").unwrap().values);
    }

    #[test]
    fn impute_errors() {
        let mut col = Column::numeric("x", ColumnRole::Feature, vec![0.0]);
        col.mask[0] = true;
        let ds = Dataset::new(vec![
            col,
            Column::binary("D", ColumnRole::Protected, vec![1.0]),
            Column::binary("Y", ColumnRole::Outcome, vec![1.0]),
        ])
        .unwrap();
        let mut all_masked = ds.clone();
        all_masked.column_mut("x").unwrap().mask = vec![true];
        assert!(matches!(
            impute_mean(&ds, &all_masked),
            Err(DataError::EmptyStatsColumn(_))
        ));
        let mut bincol = Column::binary("D", ColumnRole::Protected, vec![1.0]);
        bincol.mask[0] = true;
        let ds2 = Dataset::new(vec![
            Column::numeric("x", ColumnRole::Feature, vec![0.0]),
            bincol,
            Column::binary("Y", ColumnRole::Outcome, vec![1.0]),
        ])
        .unwrap();
        assert!(matches!(
            impute_mean(&ds2, &ds2),
            Err(DataError::NonNumericImpute(_))
        ));
    }

    #[test]
    fn downsample_edges() {
        let n = 50;
        let d: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let ds = Dataset::new(vec![
            Column::numeric("x", ColumnRole::Feature, (0..n).map(|i| i as f64).collect()),
            Column::binary("D", ColumnRole::Protected, d),
            Column::binary("Y", ColumnRole::Outcome, vec![1.0; n]),
        ])
        .unwrap();
        let keep_all = downsample_group(&ds, "D", -1.0, 0.0, 9).unwrap();
        assert_eq!(keep_all.n_rows(), n);
        let drop_all = downsample_group(&ds, "D", -1.0, 1.0, 9).unwrap();
        assert!(drop_all.column("D").unwrap().values.iter().all(|&v| v == 1.0));
        assert_eq!(drop_all.n_rows(), 25);
        // Surviving rows keep their values.
        for (i, &x) in drop_all.column("x").unwrap().values.iter().enumerate() {
            assert_eq!(drop_all.column("D").unwrap().values[i], 1.0);
            assert_eq!(x % 2.0, 0.0);
        }
        assert!(downsample_group(&ds, "D", 3.0, 0.5, 9).is_err());
        assert!(downsample_group(&ds, "nope", 1.0, 0.5, 9).is_err());
    }

    #[test]
    fn csv_round_trip_exact() {
        let csv = "C1,X1,X2,D,Y\n0e0,5.25e-1,,1,1\n0e0,-1.0e-1,3.0e-1,-1,-1\n";
        let ds = load_csv(csv, &fig1a_specs()).unwrap();
        let text = serialize_csv(&ds);
        let ds2 = load_csv(&text, &stored_specs(&ds)).unwrap();
        for (a, b) in ds.columns().iter().zip(ds2.columns()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.values, b.values, "column {}", a.name);
            assert_eq!(a.mask, b.mask);
        }
        // Odd magnitudes survive the 17-digit format bit-exactly.
        let v = [core::f64::consts::PI, 1.0 / 3.0, 6.02214076e23, -2.2250738585072014e-308];
        for x in v {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn schema_round_trip_and_errors() {
        let text = "# sidecar\ncolumn C1 numeric domain-indicator\n\
                    column X1 numeric feature indicator\n\
                    column dept categorical feature levels eng ops\n\
                    column D binary-label protected levels a d\n\
                    column Y binary-label outcome\n";
        let specs = parse_schema(text).unwrap();
        assert_eq!(specs.len(), 5);
        assert!(specs[1].missing_indicator);
        assert_eq!(
            specs[2].kind,
            ColumnKind::Categorical { levels: vec!["eng".to_string(), "ops".to_string()] }
        );
        let rt = parse_schema(&serialize_schema(&specs)).unwrap();
        assert_eq!(rt, specs);

        assert!(parse_schema("column X numeric feature\n").is_err()); // no outcome/protected
        assert!(parse_schema("row X numeric feature\n").is_err());
        assert!(parse_schema("column X categorical feature\n").is_err()); // no levels
    }

    #[test]
    fn feature_matrix_rejects_masked_cells() {
        let mut col = Column::numeric("x", ColumnRole::Feature, vec![1.0, 2.0]);
        col.mask[1] = true;
        let ds = Dataset::new(vec![
            col,
            Column::binary("D", ColumnRole::Protected, vec![1.0, -1.0]),
            Column::binary("Y", ColumnRole::Outcome, vec![1.0, -1.0]),
        ])
        .unwrap();
        assert!(matches!(ds.feature_matrix(&["x"]), Err(DataError::MaskedCell(_))));
        let m = ds.feature_matrix(&["D"]).unwrap();
        assert_eq!(m.row(1), &[-1.0]);
    }
}
