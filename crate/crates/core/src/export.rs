//! CSV and SQL dump writers for built tables.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::table::{Cell, RawTable, SemanticType};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("dialect `{dialect}` has no type for {semantic_type} (column `{column}`)")]
    UnmappableType {
        dialect: String,
        column: String,
        semantic_type: SemanticType,
    },
    #[error("unknown SQL dialect `{0}`")]
    UnknownDialect(String),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn needs_quotes(field: &str) -> bool {
    field.is_empty() || field.bytes().any(|b| matches!(b, b',' | b'"' | b'\n' | b'\r'))
}

fn write_field<W: Write>(out: &mut W, field: &str) -> io::Result<()> {
    if needs_quotes(field) {
        out.write_all(b"\"")?;
        out.write_all(field.replace('"', "\"\"").as_bytes())?;
        out.write_all(b"\"")
    } else {
        out.write_all(field.as_bytes())
    }
}

fn write_record<'a, W: Write>(
    out: &mut W,
    fields: impl IntoIterator<Item = Option<&'a str>>,
) -> io::Result<()> {
    for (i, field) in fields.into_iter().enumerate() {
        if i > 0 {
            out.write_all(b",")?;
        }
        // Null is an empty unquoted field; an empty string is `""`.
        if let Some(f) = field {
            write_field(out, f)?;
        }
    }
    out.write_all(b"\n")
}

/// Writes the header then every row in stored order, RFC-4180 quoted, `\n` terminated.
pub fn emit_csv<W: Write>(table: &RawTable, mut out: W) -> io::Result<()> {
    write_record(&mut out, table.schema().column_names().map(Some))?;
    for row in table.rows() {
        let rendered: Vec<Option<String>> = row.iter().map(Cell::render).collect();
        write_record(&mut out, rendered.iter().map(|f| f.as_deref()))?;
    }
    out.flush()
}

pub fn csv_bytes(table: &RawTable) -> Vec<u8> {
    let mut buf = Vec::new();
    emit_csv(table, &mut buf).expect("writing to memory");
    buf
}

/// Quoting, type names and literal escaping for one SQL flavour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlDialect {
    pub name: String,
    pub identifier_quote: char,
    pub type_names: BTreeMap<SemanticType, String>,
    pub terminator: String,
    /// Backslash is an escape character inside string literals (MySQL default mode).
    pub escape_backslash: bool,
    pub rows_per_insert: usize,
}

impl SqlDialect {
    fn build(name: &str, quote: char, types: [&str; 5], escape_backslash: bool) -> Self {
        use SemanticType::*;
        let type_names = [Id64, Integer, Decimal, Text, UnitCode]
            .into_iter()
            .zip(types.into_iter().map(String::from))
            .collect();
        Self {
            name: name.to_string(),
            identifier_quote: quote,
            type_names,
            terminator: ";".to_string(),
            escape_backslash,
            rows_per_insert: 500,
        }
    }

    pub fn mysql() -> Self {
        Self::build(
            "mysql",
            '`',
            ["BIGINT", "BIGINT", "DECIMAL(38,10)", "TEXT", "VARCHAR(32)"],
            true,
        )
    }

    pub fn postgres() -> Self {
        Self::build(
            "postgres",
            '"',
            ["BIGINT", "BIGINT", "NUMERIC", "TEXT", "VARCHAR(32)"],
            false,
        )
    }

    pub fn sqlite() -> Self {
        Self::build(
            "sqlite",
            '"',
            ["INTEGER", "INTEGER", "NUMERIC", "TEXT", "TEXT"],
            false,
        )
    }

    pub fn by_name(name: &str) -> Result<Self, ExportError> {
        match name {
            "mysql" => Ok(Self::mysql()),
            "postgres" | "postgresql" => Ok(Self::postgres()),
            "sqlite" => Ok(Self::sqlite()),
            other => Err(ExportError::UnknownDialect(other.to_string())),
        }
    }

    pub fn with_rows_per_insert(mut self, n: usize) -> Self {
        self.rows_per_insert = n.max(1);
        self
    }

    pub fn quote_ident(&self, ident: &str) -> String {
        let q = self.identifier_quote;
        let doubled: String = [q, q].iter().collect();
        format!("{q}{}{q}", ident.replace(q, &doubled))
    }

    pub fn literal(&self, cell: &Cell) -> String {
        match cell {
            Cell::Null => "NULL".to_string(),
            Cell::Id(_) | Cell::Int(_) | Cell::Dec(_) => cell.render().expect("non-null"),
            Cell::Text(s) | Cell::Unit(s) => {
                let mut escaped = s.replace('\'', "''");
                if self.escape_backslash {
                    escaped = escaped.replace('\\', "\\\\");
                }
                format!("'{escaped}'")
            }
        }
    }
}

/// `CREATE TABLE` followed by multi-row `INSERT`s in stored row order.
pub fn emit_sql_dump(table: &RawTable, dialect: &SqlDialect) -> Result<String, ExportError> {
    let schema = table.schema();
    let mut columns = Vec::with_capacity(schema.len());
    for col in schema.columns() {
        let ty = dialect.type_names.get(&col.semantic_type).ok_or_else(|| {
            ExportError::UnmappableType {
                dialect: dialect.name.clone(),
                column: col.name.clone(),
                semantic_type: col.semantic_type,
            }
        })?;
        columns.push(format!("  {} {}", dialect.quote_ident(&col.name), ty));
    }
    let name = dialect.quote_ident(table.name());
    let mut out = format!(
        "CREATE TABLE {name} (\n{}\n){}\n",
        columns.join(",\n"),
        dialect.terminator
    );
    let column_list = schema
        .column_names()
        .map(|c| dialect.quote_ident(c))
        .collect::<Vec<_>>()
        .join(", ");
    for chunk in table.rows().chunks(dialect.rows_per_insert.max(1)) {
        out.push_str(&format!("INSERT INTO {name} ({column_list}) VALUES\n"));
        let values: Vec<String> = chunk
            .iter()
            .map(|row| {
                let cells: Vec<String> = row.iter().map(|c| dialect.literal(c)).collect();
                format!("({})", cells.join(", "))
            })
            .collect();
        out.push_str(&values.join(",\n"));
        out.push_str(&dialect.terminator);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Sql,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Sql => "sql",
        }
    }
}

/// Writes each table to `<dir>/<table>.<ext>`; returns the written paths in input order.
pub fn export_tables(
    tables: &[&RawTable],
    format: ExportFormat,
    dialect: &SqlDialect,
    dir: &Path,
) -> Result<Vec<PathBuf>, ExportError> {
    fs::create_dir_all(dir).map_err(|source| ExportError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let rendered: Vec<Result<(PathBuf, Vec<u8>), ExportError>> = std::thread::scope(|s| {
        let handles: Vec<_> = tables
            .iter()
            .map(|t| {
                s.spawn(move || {
                    let path = dir.join(format!("{}.{}", t.name(), format.extension()));
                    let bytes = match format {
                        ExportFormat::Csv => csv_bytes(t),
                        ExportFormat::Sql => emit_sql_dump(t, dialect)?.into_bytes(),
                    };
                    Ok((path, bytes))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("export worker panicked"))
            .collect()
    });
    let mut paths = Vec::with_capacity(rendered.len());
    for item in rendered {
        let (path, bytes) = item?;
        fs::write(&path, bytes).map_err(|source| ExportError::File {
            path: path.clone(),
            source,
        })?;
        paths.push(path);
    }
    Ok(paths)
}
