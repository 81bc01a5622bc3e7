//! Categorical data model: variable schemas, long-format observation records,
//! cross-tabulation, marginalization, and expansion back to unit records.
//!
//! Cell order is fixed throughout the crate: lexicographic over the level
//! indices with the LAST schema variable varying fastest (row-major layout).
//! All downstream indexing depends on this.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named categorical variable with an ordered list of level labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSchema {
    pub name: String,
    pub levels: Vec<String>,
}

impl VariableSchema {
    pub fn new(name: impl Into<String>, levels: &[&str]) -> Result<Self> {
        let name = name.into();
        let levels: Vec<String> = levels.iter().map(|s| s.to_string()).collect();
        if levels.len() < 2 {
            return Err(Error::Schema(format!(
                "variable '{name}' needs at least 2 levels, got {}",
                levels.len()
            )));
        }
        for (i, a) in levels.iter().enumerate() {
            if levels[..i].contains(a) {
                return Err(Error::Schema(format!(
                    "variable '{name}' has duplicate level label '{a}'"
                )));
            }
        }
        Ok(VariableSchema { name, levels })
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Maps a token to a level index. Labels are matched first; a token that
    /// matches no label but parses as an in-range integer is accepted as a
    /// bare level index.
    pub fn level_index(&self, token: &str) -> Option<usize> {
        if let Some(i) = self.levels.iter().position(|l| l == token) {
            return Some(i);
        }
        token
            .parse::<usize>()
            .ok()
            .filter(|&i| i < self.levels.len())
    }
}

/// An ordered set of variables; variable names are unique.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema(Vec<VariableSchema>);

impl Schema {
    pub fn new(vars: Vec<VariableSchema>) -> Result<Self> {
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::Schema(format!(
                    "duplicate variable name '{}'",
                    v.name
                )));
            }
        }
        if vars.is_empty() {
            return Err(Error::Schema(
                "schema must contain at least one variable".into(),
            ));
        }
        Ok(Schema(vars))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> &[VariableSchema] {
        &self.0
    }

    pub fn var(&self, i: usize) -> &VariableSchema {
        &self.0[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.0.iter().map(|v| v.level_count()).collect()
    }

    /// Product of level counts = number of cells in the full table.
    pub fn cell_count(&self) -> usize {
        self.0.iter().map(|v| v.level_count()).product()
    }

    /// Resolves a list of variable names to schema indices, in schema order.
    pub fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(names.len());
        for name in names {
            match self.index_of(name) {
                Some(i) => idx.push(i),
                None => return Err(Error::Schema(format!("unknown variable '{name}'"))),
            }
        }
        idx.sort_unstable();
        idx.dedup();
        Ok(idx)
    }
}

/// Long-format data: one level-index vector per observed unit-time record.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecords {
    schema: Schema,
    rows: Vec<Vec<usize>>,
}

impl ObservationRecords {
    pub fn new(schema: Schema, rows: Vec<Vec<usize>>) -> Result<Self> {
        let counts = schema.level_counts();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Table(format!(
                    "record {r} has {} entries, schema has {} variables",
                    row.len(),
                    schema.len()
                )));
            }
            for (j, (&v, &k)) in row.iter().zip(&counts).enumerate() {
                if v >= k {
                    return Err(Error::Table(format!(
                        "record {r}: level index {v} out of range for variable '{}'",
                        schema.var(j).name
                    )));
                }
            }
        }
        Ok(ObservationRecords { schema, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Projects the records onto a subset of variables (given by name),
    /// keeping schema order.
    pub fn select(&self, names: &[&str]) -> Result<ObservationRecords> {
        let keep = self.schema.resolve(names)?;
        if keep.is_empty() {
            return Err(Error::Schema("empty variable selection".into()));
        }
        let schema = Schema::new(keep.iter().map(|&i| self.schema.var(i).clone()).collect())?;
        let rows = self
            .rows
            .iter()
            .map(|row| keep.iter().map(|&i| row[i]).collect())
            .collect();
        Ok(ObservationRecords { schema, rows })
    }

    /// Serializes to the long CSV format: header of variable names, one
    /// observation per line, level labels as values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.schema.names().join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<&str> = row
                .iter()
                .enumerate()
                .map(|(j, &v)| self.schema.var(j).levels[v].as_str())
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Counts over the cross-classification of the schema variables.
///
/// Observed tables hold nonnegative integers; fitted tables hold nonnegative
/// reals. Both share this type; operations that require integer counts check
/// `is_integer_valued` and fail otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    schema: Schema,
    counts: Vec<f64>,
}

impl ContingencyTable {
    pub fn new(schema: Schema, counts: Vec<f64>) -> Result<Self> {
        if counts.len() != schema.cell_count() {
            return Err(Error::Table(format!(
                "expected {} cells, got {}",
                schema.cell_count(),
                counts.len()
            )));
        }
        if counts.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::Table(
                "cell counts must be finite and nonnegative".into(),
            ));
        }
        Ok(ContingencyTable { schema, counts })
    }

    pub fn zeros(schema: Schema) -> Self {
        let n = schema.cell_count();
        ContingencyTable {
            schema,
            counts: vec![0.0; n],
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn is_integer_valued(&self) -> bool {
        self.counts.iter().all(|&c| c.fract() == 0.0)
    }

    /// Flat index of a cell, lexicographic with the last variable fastest.
    pub fn cell_index(&self, levels: &[usize]) -> usize {
        debug_assert_eq!(levels.len(), self.schema.len());
        let mut idx = 0;
        for (j, &l) in levels.iter().enumerate() {
            idx = idx * self.schema.var(j).level_count() + l;
        }
        idx
    }

    /// Inverse of `cell_index`.
    pub fn cell_levels(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.schema.len()];
        for j in (0..self.schema.len()).rev() {
            let k = self.schema.var(j).level_count();
            out[j] = idx % k;
            idx /= k;
        }
        out
    }

    pub fn count(&self, levels: &[usize]) -> f64 {
        self.counts[self.cell_index(levels)]
    }

    /// Looks a cell up by (variable name, level label) pairs, in any order.
    pub fn count_by_name(&self, cell: &[(&str, &str)]) -> Result<f64> {
        let mut levels = vec![usize::MAX; self.schema.len()];
        for (name, label) in cell {
            let j = self
                .schema
                .index_of(name)
                .ok_or_else(|| Error::Schema(format!("unknown variable '{name}'")))?;
            levels[j] = self.schema.var(j).level_index(label).ok_or_else(|| {
                Error::Schema(format!("unknown level '{label}' for variable '{name}'"))
            })?;
        }
        if levels.contains(&usize::MAX) {
            return Err(Error::Schema("cell lookup must name every variable".into()));
        }
        Ok(self.count(&levels))
    }

    /// Sums over the dropped variables; `keep` is a nonempty subset of the
    /// schema given by variable name. The result keeps schema order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<ContingencyTable> {
        let keep_idx = self.schema.resolve(keep)?;
        self.marginalize_idx(&keep_idx)
    }

    /// Index-based variant of `marginalize`; `keep` must be sorted, deduped
    /// schema indices.
    pub fn marginalize_idx(&self, keep: &[usize]) -> Result<ContingencyTable> {
        if keep.is_empty() {
            return Err(Error::Table("marginalize: keep set is empty".into()));
        }
        if keep.iter().any(|&i| i >= self.schema.len()) {
            return Err(Error::Table(
                "marginalize: variable index out of range".into(),
            ));
        }
        let schema = Schema::new(keep.iter().map(|&i| self.schema.var(i).clone()).collect())?;
        let mut out = ContingencyTable::zeros(schema);
        let mut levels = vec![0usize; self.schema.len()];
        let mut kept = vec![0usize; keep.len()];
        for (idx, &c) in self.counts.iter().enumerate() {
            self.levels_into(idx, &mut levels);
            for (slot, &j) in kept.iter_mut().zip(keep) {
                *slot = levels[j];
            }
            let oi = out.cell_index(&kept);
            out.counts[oi] += c;
        }
        Ok(out)
    }

    fn levels_into(&self, mut idx: usize, out: &mut [usize]) {
        for j in (0..self.schema.len()).rev() {
            let k = self.schema.var(j).level_count();
            out[j] = idx % k;
            idx /= k;
        }
    }

    /// Expands the table back into unit records, `counts[c]` copies of each
    /// cell's index vector in cell order. Requires integer counts.
    pub fn expand(&self) -> Result<ObservationRecords> {
        if !self.is_integer_valued() {
            return Err(Error::Table("expand requires integer cell counts".into()));
        }
        let mut rows = Vec::with_capacity(self.total() as usize);
        for (idx, &c) in self.counts.iter().enumerate() {
            let levels = self.cell_levels(idx);
            for _ in 0..(c as usize) {
                rows.push(levels.clone());
            }
        }
        Ok(ObservationRecords {
            schema: self.schema.clone(),
            rows,
        })
    }

    pub(crate) fn counts_mut(&mut self) -> &mut [f64] {
        &mut self.counts
    }

    pub(crate) fn from_parts_unchecked(schema: Schema, counts: Vec<f64>) -> Self {
        ContingencyTable { schema, counts }
    }
}

impl fmt::Display for ContingencyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} table, N = {}",
            self.schema
                .level_counts()
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join("x"),
            self.total()
        )
    }
}

/// JSON wire format for tables: `{schema, counts, order}` with the cell order
/// named explicitly.
#[derive(Serialize, Deserialize)]
struct TableWire {
    schema: Schema,
    counts: Vec<f64>,
    order: String,
}

impl Serialize for ContingencyTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableWire {
            schema: self.schema.clone(),
            counts: self.counts.clone(),
            order: "lex-last-fastest".into(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ContingencyTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = TableWire::deserialize(d)?;
        if wire.order != "lex-last-fastest" {
            return Err(serde::de::Error::custom(format!(
                "unsupported cell order '{}'",
                wire.order
            )));
        }
        ContingencyTable::new(wire.schema, wire.counts).map_err(serde::de::Error::custom)
    }
}

/// Cross-tabulates records into a full contingency table over their schema.
pub fn crosstab(records: &ObservationRecords) -> ContingencyTable {
    let mut table = ContingencyTable::zeros(records.schema.clone());
    for row in &records.rows {
        let idx = table.cell_index(row);
        table.counts[idx] += 1.0;
    }
    table
}

/// Parses long-format CSV: a header of variable names (any column order,
/// must cover the schema exactly), then one observation per line. Values may
/// be level labels or bare level indices.
pub fn parse_csv(text: &str, schema: &Schema) -> Result<ObservationRecords> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Csv {
        line: 1,
        message: "missing header row".into(),
    })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();

    // map each CSV column to its schema position
    let mut col_to_var = Vec::with_capacity(columns.len());
    let mut seen = HashMap::new();
    for name in &columns {
        let j = schema.index_of(name).ok_or_else(|| Error::Csv {
            line: 1,
            message: format!("unknown column '{name}'"),
        })?;
        if seen.insert(j, ()).is_some() {
            return Err(Error::Csv {
                line: 1,
                message: format!("duplicate column '{name}'"),
            });
        }
        col_to_var.push(j);
    }
    if col_to_var.len() != schema.len() {
        let missing: Vec<&str> = schema
            .names()
            .into_iter()
            .filter(|n| !columns.contains(n))
            .collect();
        return Err(Error::Csv {
            line: 1,
            message: format!("header is missing column(s): {}", missing.join(", ")),
        });
    }

    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split(',').map(str::trim).collect();
        if tokens.len() != columns.len() {
            return Err(Error::Csv {
                line: lineno,
                message: format!("expected {} values, got {}", columns.len(), tokens.len()),
            });
        }
        let mut row = vec![0usize; schema.len()];
        for (token, &j) in tokens.iter().zip(&col_to_var) {
            let var = schema.var(j);
            row[j] = var.level_index(token).ok_or_else(|| Error::Csv {
                line: lineno,
                message: format!("unknown level '{token}' for variable '{}'", var.name),
            })?;
        }
        rows.push(row);
    }
    Ok(ObservationRecords {
        schema: schema.clone(),
        rows,
    })
}
