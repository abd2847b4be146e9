use std::collections::{BTreeMap, HashMap};

use rust_decimal::Decimal;

use super::ModelError;
use crate::table::{Cell, RawTable};

/// Hashable equality key. Id and integer cells share one key space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IndexKey {
    Int(i64),
    Dec(Decimal),
    Text(String),
}

impl IndexKey {
    /// `None` for null, which never matches under SQL equality.
    pub fn from_cell(cell: &Cell) -> Option<Self> {
        match cell {
            Cell::Null => None,
            Cell::Id(v) | Cell::Int(v) => Some(IndexKey::Int(*v)),
            Cell::Dec(d) => match cell.as_i64() {
                Some(v) => Some(IndexKey::Int(v)),
                None => Some(IndexKey::Dec(d.normalize())),
            },
            Cell::Text(s) | Cell::Unit(s) => Some(IndexKey::Text(s.clone())),
        }
    }
}

impl From<i64> for IndexKey {
    fn from(v: i64) -> Self {
        IndexKey::Int(v)
    }
}

/// Equality index over one column: key to row ordinals in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnIndex {
    table: String,
    column: String,
    position: usize,
    entries: HashMap<IndexKey, Vec<usize>>,
}

impl ColumnIndex {
    pub fn column(&self) -> &str {
        &self.column
    }

    pub fn table(&self) -> &str {
        &self.table
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn lookup(&self, key: &IndexKey) -> &[usize] {
        self.entries.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn lookup_cell(&self, cell: &Cell) -> &[usize] {
        IndexKey::from_cell(cell).map_or(&[], |k| self.lookup(&k))
    }

    pub fn distinct_keys(&self) -> usize {
        self.entries.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &IndexKey> {
        self.entries.keys()
    }
}

pub fn build_index(table: &RawTable, column: &str) -> Result<ColumnIndex, ModelError> {
    let position = table
        .column_index(column)
        .ok_or_else(|| ModelError::NoSuchColumn {
            table: table.name().to_string(),
            column: column.to_string(),
        })?;
    let mut entries: HashMap<IndexKey, Vec<usize>> = HashMap::new();
    for (ordinal, row) in table.rows().iter().enumerate() {
        if let Some(key) = IndexKey::from_cell(&row[position]) {
            entries.entry(key).or_default().push(ordinal);
        }
    }
    Ok(ColumnIndex {
        table: table.name().to_string(),
        column: column.to_string(),
        position,
        entries,
    })
}

/// A table with its secondary indexes. Both are immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedTable {
    table: RawTable,
    indexes: BTreeMap<String, ColumnIndex>,
}

impl IndexedTable {
    pub fn new(table: RawTable) -> Self {
        Self {
            table,
            indexes: BTreeMap::new(),
        }
    }

    /// Adds an index on `column` (`ALTER TABLE .. ADD INDEX`).
    pub fn add_index(&mut self, column: &str) -> Result<&ColumnIndex, ModelError> {
        if !self.indexes.contains_key(column) {
            let idx = build_index(&self.table, column)?;
            self.indexes.insert(column.to_string(), idx);
        }
        Ok(&self.indexes[column])
    }

    pub fn with_indexes(mut self, columns: &[&str]) -> Result<Self, ModelError> {
        for c in columns {
            self.add_index(c)?;
        }
        Ok(self)
    }

    pub fn index(&self, column: &str) -> Option<&ColumnIndex> {
        self.indexes.get(column)
    }

    pub fn require_index(&self, column: &str) -> Result<&ColumnIndex, ModelError> {
        self.index(column).ok_or_else(|| ModelError::MissingIndex {
            table: self.table.name().to_string(),
            column: column.to_string(),
        })
    }

    pub fn table(&self) -> &RawTable {
        &self.table
    }

    pub fn indexed_columns(&self) -> impl Iterator<Item = &str> {
        self.indexes.keys().map(String::as_str)
    }
}
