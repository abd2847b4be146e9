//! Bulk loading of delimited files into typed [`RawTable`]s.
//!
//! Mirrors a `LOAD DATA LOCAL INFILE ... FIELDS TERMINATED BY ',' ENCLOSED BY
//! '"' IGNORE 1 ROWS` load: the header line is skipped, every remaining
//! well-formed record becomes a row, and cells are coerced to the column types.

mod csv;
mod schema;

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use self::csv::{parse_csv_stream, CsvDialect, CsvReader, LineTerminator, RawRecord};
pub use self::schema::{infer_column_type, infer_schema, infer_schema_from_file, Overrides};

use crate::table::{
    parse_decimal, parse_integer, Cell, RawTable, SchemaError, SemanticType, TableSchema,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line_no}: unbalanced quote")]
    UnbalancedQuote { line_no: u64 },
    #[error("line {line_no}: expected {expected} fields, got {got}")]
    RaggedRow {
        line_no: u64,
        expected: usize,
        got: usize,
        raw: String,
    },
    #[error("line {line_no}: line terminator does not match the dialect")]
    BadTerminator { line_no: u64 },
    #[error("line {line_no}: field is not valid UTF-8")]
    InvalidUtf8 { line_no: u64 },
    #[error("line {line_no}: cannot coerce `{value}` in column `{column}` to {expected}")]
    TypeCoercionFailure {
        line_no: u64,
        column: String,
        value: String,
        expected: SemanticType,
    },
    #[error("schema inference needs at least one sample row")]
    EmptySample,
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl IngestError {
    pub fn is_io(&self) -> bool {
        matches!(self, IngestError::File { .. } | IngestError::Io(_))
    }
}

/// A record that did not load, kept for the reject file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub line_no: u64,
    pub reason: String,
    pub raw_line: String,
}

impl Reject {
    pub fn schema() -> TableSchema {
        TableSchema::of(
            "rejects",
            &[
                ("line_no", SemanticType::Integer),
                ("reason", SemanticType::Text),
                ("raw_line", SemanticType::Text),
            ],
        )
        .expect("static schema")
    }

    /// Rejects as a table matching the reject-file layout `(line_no, reason, raw_line)`.
    pub fn to_table(rejects: &[Reject]) -> RawTable {
        let rows = rejects
            .iter()
            .map(|r| {
                vec![
                    Cell::Int(r.line_no as i64),
                    Cell::Text(r.reason.clone()),
                    Cell::Text(r.raw_line.clone()),
                ]
            })
            .collect();
        RawTable::new(Self::schema(), rows, "").expect("fixed width")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub dialect: CsvDialect,
    pub skip_header: bool,
    /// Route malformed records to rejects instead of failing the load.
    pub lenient: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            dialect: CsvDialect::usda(),
            skip_header: true,
            lenient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOutcome {
    pub table: RawTable,
    pub rejects: Vec<Reject>,
}

/// Loads `path` under `schema` with the default dialect in strict mode.
pub fn load_table(
    path: impl AsRef<Path>,
    schema: &TableSchema,
    skip_header: bool,
) -> Result<RawTable, IngestError> {
    let opts = LoadOptions {
        skip_header,
        ..LoadOptions::default()
    };
    load_table_with(path, schema, &opts).map(|o| o.table)
}

pub fn load_table_with(
    path: impl AsRef<Path>,
    schema: &TableSchema,
    opts: &LoadOptions,
) -> Result<LoadOutcome, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::File {
        path: path.to_path_buf(),
        source,
    })?;
    load_reader(BufReader::new(file), schema, opts, &path.display().to_string()).map_err(
        |e| match e {
            IngestError::Io(source) => IngestError::File {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        },
    )
}

/// Loads from any buffered reader; `source_path` is recorded on the table.
pub fn load_reader<R: BufRead>(
    reader: R,
    schema: &TableSchema,
    opts: &LoadOptions,
    source_path: &str,
) -> Result<LoadOutcome, IngestError> {
    let mut records = parse_csv_stream(reader, opts.dialect).expect_width(schema.len());
    let mut rows = Vec::new();
    let mut rejects = Vec::new();

    if opts.skip_header {
        match records.next() {
            None => return Ok(empty_outcome(schema, source_path)),
            Some(Ok(_)) | Some(Err(IngestError::RaggedRow { .. })) => {}
            Some(Err(e)) => return Err(e),
        }
    }

    for item in records {
        let failure = match item {
            Ok(rec) => match coerce_record(&rec, schema) {
                Ok(row) => {
                    rows.push(row);
                    continue;
                }
                Err(e) => (e, rec.raw),
            },
            Err(IngestError::RaggedRow {
                line_no,
                expected,
                got,
                raw,
            }) => (
                IngestError::RaggedRow {
                    line_no,
                    expected,
                    got,
                    raw: String::new(),
                },
                raw,
            ),
            Err(e @ IngestError::InvalidUtf8 { .. }) => (e, String::new()),
            Err(fatal) => return Err(fatal),
        };
        let (err, raw_line) = failure;
        if !opts.lenient {
            return Err(restore_raw(err, raw_line));
        }
        let line_no = match &err {
            IngestError::RaggedRow { line_no, .. }
            | IngestError::TypeCoercionFailure { line_no, .. }
            | IngestError::InvalidUtf8 { line_no } => *line_no,
            _ => 0,
        };
        rejects.push(Reject {
            line_no,
            reason: rejected_reason(&err),
            raw_line,
        });
    }

    let table = RawTable::new(schema.clone(), rows, source_path)
        .expect("reader enforces the schema width");
    Ok(LoadOutcome { table, rejects })
}

fn restore_raw(err: IngestError, raw_line: String) -> IngestError {
    match err {
        IngestError::RaggedRow {
            line_no,
            expected,
            got,
            ..
        } => IngestError::RaggedRow {
            line_no,
            expected,
            got,
            raw: raw_line,
        },
        other => other,
    }
}

fn rejected_reason(e: &IngestError) -> String {
    match e {
        IngestError::RaggedRow { expected, got, .. } => {
            format!("ragged row: expected {expected} fields, got {got}")
        }
        other => other.to_string(),
    }
}

fn empty_outcome(schema: &TableSchema, source_path: &str) -> LoadOutcome {
    LoadOutcome {
        table: RawTable::new(schema.clone(), Vec::new(), source_path).expect("empty"),
        rejects: Vec::new(),
    }
}

fn coerce_record(rec: &RawRecord, schema: &TableSchema) -> Result<Vec<Cell>, IngestError> {
    rec.fields
        .iter()
        .zip(schema.columns())
        .map(|(field, col)| {
            coerce_cell(field.as_deref(), col.semantic_type).ok_or_else(|| {
                IngestError::TypeCoercionFailure {
                    line_no: rec.line_no,
                    column: col.name.clone(),
                    value: field.clone().unwrap_or_default(),
                    expected: col.semantic_type,
                }
            })
        })
        .collect()
}

/// Converts one field to a cell; `None` when the text does not fit the type.
/// Empty numeric fields are null; enclosed empty text stays an empty string.
pub fn coerce_cell(field: Option<&str>, ty: SemanticType) -> Option<Cell> {
    let Some(text) = field else {
        return Some(Cell::Null);
    };
    match ty {
        SemanticType::Text => Some(Cell::Text(text.to_string())),
        SemanticType::UnitCode => Some(if text.is_empty() {
            Cell::Null
        } else {
            Cell::Unit(text.to_string())
        }),
        _ if text.is_empty() => Some(Cell::Null),
        SemanticType::Id64 => parse_integer(text).map(Cell::Id),
        SemanticType::Integer => parse_integer(text).map(Cell::Int),
        SemanticType::Decimal => parse_decimal(text).map(Cell::Dec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn schema() -> TableSchema {
        TableSchema::of(
            "food",
            &[
                ("fdc_id", SemanticType::Id64),
                ("description", SemanticType::Text),
                ("kcal", SemanticType::Decimal),
            ],
        )
        .unwrap()
    }

    fn load_str(input: &str, opts: &LoadOptions) -> Result<LoadOutcome, IngestError> {
        load_reader(input.as_bytes(), &schema(), opts, "mem")
    }

    #[test]
    fn header_is_ignored() {
        let out = load_str(
            "fdc_id,description,kcal\n1,a,1.5\n2,b,\n",
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(out.table.loaded_row_count(), 2);
        assert_eq!(out.table.rows()[1][2], Cell::Null);
    }

    #[test]
    fn large_fdc_id_is_exact() {
        let out = load_str("h,h,h\n3000000000,x,1\n", &LoadOptions::default()).unwrap();
        assert_eq!(out.table.rows()[0][0], Cell::Id(3_000_000_000));
    }

    #[test]
    fn empty_data_section() {
        let out = load_str("fdc_id,description,kcal\n", &LoadOptions::default()).unwrap();
        assert_eq!(out.table.loaded_row_count(), 0);
        let out = load_str("", &LoadOptions::default()).unwrap();
        assert_eq!(out.table.loaded_row_count(), 0);
    }

    #[test]
    fn coercion_failure_names_line_and_column() {
        let err = load_str("h,h,h\n1,a,1\n2,b,lots\n", &LoadOptions::default()).unwrap_err();
        match err {
            IngestError::TypeCoercionFailure {
                line_no, column, ..
            } => {
                assert_eq!(line_no, 3);
                assert_eq!(column, "kcal");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn text_columns_never_fail_coercion() {
        let s = TableSchema::of("t", &[("a", SemanticType::Text)]).unwrap();
        let out = load_reader("a\n12\noz\n".as_bytes(), &s, &LoadOptions::default(), "").unwrap();
        assert_eq!(out.table.rows()[1][0], Cell::Text("oz".into()));
    }

    #[test]
    fn strict_mode_fails_on_ragged_row() {
        let err = load_str("h,h,h\n1,a\n", &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, IngestError::RaggedRow { line_no: 2, .. }));
    }

    #[test]
    fn lenient_mode_routes_rejects_with_line_numbers() {
        let opts = LoadOptions {
            lenient: true,
            ..LoadOptions::default()
        };
        let out = load_str("h,h,h\n1,a,1\n2,b\n3,c,x\n4,d,4\n", &opts).unwrap();
        assert_eq!(out.table.loaded_row_count(), 2);
        let lines: Vec<u64> = out.rejects.iter().map(|r| r.line_no).collect();
        assert_eq!(lines, vec![3, 4]);
        assert_eq!(out.rejects[0].raw_line, "2,b");
        assert_eq!(out.rejects[1].raw_line, "3,c,x");
        assert_eq!(Reject::to_table(&out.rejects).loaded_row_count(), 2);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_table("/definitely/not/here.csv", &schema(), true).unwrap_err();
        assert!(err.is_io());
    }

    #[test]
    fn loads_from_disk_deterministically() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "\"fdc_id\",\"description\",\"kcal\"").unwrap();
        writeln!(f, "\"1\",\"BROTH, BEEF\",\"9.6\"").unwrap();
        let a = load_table(f.path(), &schema(), true).unwrap();
        let b = load_table(f.path(), &schema(), true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows()[0][1], Cell::Text("BROTH, BEEF".into()));
    }
}
