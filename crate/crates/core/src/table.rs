//! Typed tabular values shared by every stage: column specs, schemas, cells
//! and the immutable [`RawTable`] produced by a load.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use thiserror::Error;

/// Semantic column type. `Id64` is a signed 64-bit identifier (SQL `BIGINT`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemanticType {
    Id64,
    Integer,
    Decimal,
    Text,
    UnitCode,
}

impl SemanticType {
    pub fn as_str(self) -> &'static str {
        match self {
            SemanticType::Id64 => "id64",
            SemanticType::Integer => "integer",
            SemanticType::Decimal => "decimal",
            SemanticType::Text => "text",
            SemanticType::UnitCode => "unit_code",
        }
    }
}

impl fmt::Display for SemanticType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SemanticType {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "id64" => Ok(SemanticType::Id64),
            "integer" => Ok(SemanticType::Integer),
            "decimal" => Ok(SemanticType::Decimal),
            "text" => Ok(SemanticType::Text),
            "unit_code" => Ok(SemanticType::UnitCode),
            other => Err(SchemaError::UnknownType(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("schema has no columns")]
    EmptySchema,
    #[error("column name is empty")]
    EmptyColumnName,
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("unknown semantic type `{0}`")]
    UnknownType(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnSpec {
    pub name: String,
    pub semantic_type: SemanticType,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, semantic_type: SemanticType) -> Self {
        Self {
            name: name.into(),
            semantic_type,
        }
    }
}

/// An ordered, non-empty set of uniquely named columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchema {
    table_name: String,
    columns: Vec<ColumnSpec>,
    has_header: bool,
}

impl TableSchema {
    pub fn new(
        table_name: impl Into<String>,
        columns: Vec<ColumnSpec>,
        has_header: bool,
    ) -> Result<Self, SchemaError> {
        if columns.is_empty() {
            return Err(SchemaError::EmptySchema);
        }
        let mut seen = HashSet::with_capacity(columns.len());
        for col in &columns {
            if col.name.is_empty() {
                return Err(SchemaError::EmptyColumnName);
            }
            if !seen.insert(col.name.as_str()) {
                return Err(SchemaError::DuplicateColumn(col.name.clone()));
            }
        }
        Ok(Self {
            table_name: table_name.into(),
            columns,
            has_header,
        })
    }

    /// Shorthand used for declared (not inferred) schemas.
    pub fn of(table_name: &str, columns: &[(&str, SemanticType)]) -> Result<Self, SchemaError> {
        Self::new(
            table_name,
            columns
                .iter()
                .map(|(n, t)| ColumnSpec::new(*n, *t))
                .collect(),
            true,
        )
    }

    pub fn table_name(&self) -> &str {
        &self.table_name
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn has_header(&self) -> bool {
        self.has_header
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn with_table_name(mut self, name: impl Into<String>) -> Self {
        self.table_name = name.into();
        self
    }

    pub(crate) fn with_types(&self, types: &[SemanticType]) -> Self {
        debug_assert_eq!(types.len(), self.columns.len());
        Self {
            table_name: self.table_name.clone(),
            columns: self
                .columns
                .iter()
                .zip(types)
                .map(|(c, t)| ColumnSpec::new(c.name.clone(), *t))
                .collect(),
            has_header: self.has_header,
        }
    }
}

/// A single typed cell. Empty CSV fields load as `Null` in every column type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cell {
    Null,
    Id(i64),
    Int(i64),
    Dec(Decimal),
    Text(String),
    Unit(String),
}

impl Cell {
    pub fn is_null(&self) -> bool {
        matches!(self, Cell::Null)
    }

    /// Integer view of id and integer cells; decimals with no fractional part also qualify.
    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Cell::Id(v) | Cell::Int(v) => Some(*v),
            Cell::Dec(d) if d.fract().is_zero() => i64::try_from(*d).ok(),
            _ => None,
        }
    }

    pub fn as_decimal(&self) -> Option<Decimal> {
        match self {
            Cell::Id(v) | Cell::Int(v) => Some(Decimal::from(*v)),
            Cell::Dec(d) => Some(*d),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) | Cell::Unit(s) => Some(s),
            _ => None,
        }
    }

    /// Canonical text rendering: minimal decimals, no quoting. `None` for null.
    pub fn render(&self) -> Option<String> {
        match self {
            Cell::Null => None,
            Cell::Id(v) | Cell::Int(v) => Some(v.to_string()),
            Cell::Dec(d) => Some(format_decimal(*d)),
            Cell::Text(s) | Cell::Unit(s) => Some(s.clone()),
        }
    }

    pub fn opt_text(value: Option<&str>) -> Cell {
        value.map_or(Cell::Null, |s| Cell::Text(s.to_string()))
    }

    pub fn opt_unit(value: Option<&str>) -> Cell {
        value.map_or(Cell::Null, |s| Cell::Unit(s.to_string()))
    }

    pub fn opt_dec(value: Option<Decimal>) -> Cell {
        value.map_or(Cell::Null, Cell::Dec)
    }
}

/// Ordering used for deterministic sorts: nulls first, then by numeric or text value.
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        fn rank(c: &Cell) -> u8 {
            match c {
                Cell::Null => 0,
                Cell::Id(_) | Cell::Int(_) | Cell::Dec(_) => 1,
                Cell::Text(_) | Cell::Unit(_) => 2,
            }
        }
        fn variant(c: &Cell) -> u8 {
            match c {
                Cell::Null => 0,
                Cell::Id(_) => 1,
                Cell::Int(_) => 2,
                Cell::Dec(_) => 3,
                Cell::Text(_) => 4,
                Cell::Unit(_) => 5,
            }
        }
        let by_value = match (self, other) {
            (Cell::Id(a) | Cell::Int(a), Cell::Id(b) | Cell::Int(b)) => a.cmp(b),
            (a, b) if rank(a) == 1 && rank(b) == 1 => a.as_decimal().cmp(&b.as_decimal()),
            (a, b) if rank(a) == 2 && rank(b) == 2 => a.as_str().cmp(&b.as_str()),
            (a, b) => rank(a).cmp(&rank(b)),
        };
        by_value.then_with(|| variant(self).cmp(&variant(other)))
    }
}

/// Minimal decimal text: no trailing zeros, no exponent.
pub fn format_decimal(d: Decimal) -> String {
    let n = d.normalize();
    if n.is_zero() {
        "0".to_string()
    } else {
        n.to_string()
    }
}

/// Parses a plain decimal literal (optional sign, digits, optional fraction).
pub fn parse_decimal(s: &str) -> Option<Decimal> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let mut parts = body.splitn(2, '.');
    let int_part = parts.next().unwrap_or("");
    let frac_part = parts.next();
    let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    let valid = digits_ok(int_part)
        && frac_part.is_none_or(digits_ok)
        && (!int_part.is_empty() || frac_part.is_some_and(|f| !f.is_empty()));
    if !valid {
        return None;
    }
    Decimal::from_str(s.strip_prefix('+').unwrap_or(s)).ok()
}

/// Parses an integer literal that fits in `i64`.
pub fn parse_integer(s: &str) -> Option<i64> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// A loaded table. Immutable once built; every row has exactly one cell per column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    schema: TableSchema,
    rows: Vec<Vec<Cell>>,
    source_path: String,
}

impl RawTable {
    /// Builds a table, checking row widths against the schema.
    pub fn new(
        schema: TableSchema,
        rows: Vec<Vec<Cell>>,
        source_path: impl Into<String>,
    ) -> Result<Self, RowWidthError> {
        if let Some((ordinal, row)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != schema.len())
        {
            return Err(RowWidthError {
                ordinal,
                expected: schema.len(),
                got: row.len(),
            });
        }
        Ok(Self {
            schema,
            rows,
            source_path: source_path.into(),
        })
    }

    pub fn empty(schema: TableSchema) -> Self {
        Self {
            schema,
            rows: Vec::new(),
            source_path: String::new(),
        }
    }

    pub fn schema(&self) -> &TableSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    pub fn loaded_row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn name(&self) -> &str {
        self.schema.table_name()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.position(name)
    }

    pub fn into_parts(self) -> (TableSchema, Vec<Vec<Cell>>, String) {
        (self.schema, self.rows, self.source_path)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("row {ordinal} has {got} cells, schema has {expected}")]
pub struct RowWidthError {
    pub ordinal: usize,
    pub expected: usize,
    pub got: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_rejects_empty_and_duplicates() {
        assert_eq!(
            TableSchema::new("t", vec![], true),
            Err(SchemaError::EmptySchema)
        );
        let dup = vec![
            ColumnSpec::new("a", SemanticType::Text),
            ColumnSpec::new("a", SemanticType::Integer),
        ];
        assert_eq!(
            TableSchema::new("t", dup, true),
            Err(SchemaError::DuplicateColumn("a".into()))
        );
    }

    #[test]
    fn decimal_literals() {
        assert_eq!(parse_decimal("1.5"), Some(Decimal::new(15, 1)));
        assert_eq!(parse_decimal(".5"), Some(Decimal::new(5, 1)));
        assert_eq!(parse_decimal("-2"), Some(Decimal::from(-2)));
        assert_eq!(parse_decimal("1e5"), None);
        assert_eq!(parse_decimal("."), None);
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("oz"), None);
        assert_eq!(format_decimal(Decimal::new(1300500, 4)), "130.05");
        assert_eq!(format_decimal(Decimal::new(0, 3)), "0");
    }

    #[test]
    fn integer_literals_cover_64_bits() {
        assert_eq!(parse_integer("3000000000"), Some(3_000_000_000));
        assert_eq!(parse_integer("9223372036854775808"), None);
        assert_eq!(parse_integer("1.0"), None);
        assert_eq!(parse_integer("-"), None);
    }

    #[test]
    fn raw_table_checks_width() {
        let schema = TableSchema::of("t", &[("a", SemanticType::Text)]).unwrap();
        let err = RawTable::new(schema, vec![vec![Cell::Null, Cell::Null]], "").unwrap_err();
        assert_eq!(err.expected, 1);
        assert_eq!(err.got, 2);
    }
}
