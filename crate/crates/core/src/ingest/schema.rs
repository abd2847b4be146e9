use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use super::{parse_csv_stream, CsvDialect, IngestError};
use crate::table::{parse_decimal, parse_integer, ColumnSpec, SemanticType, TableSchema};

pub type Overrides = BTreeMap<String, SemanticType>;

fn is_id_name(name: &str) -> bool {
    name == "fdc_id" || name.ends_with("_id")
}

fn is_unit_name(name: &str) -> bool {
    name == "unit" || name == "unit_name" || name.ends_with("_unit")
}

/// Types one column. Name rules first: `*_id` is always `id64` (identifiers
/// exceed 32 bits), `*_unit` is a unit code. Otherwise scans the non-null
/// values: all integers, all decimals, or text. An all-null column is text.
pub fn infer_column_type<'a>(name: &str, values: impl IntoIterator<Item = &'a str>) -> SemanticType {
    if is_id_name(name) {
        return SemanticType::Id64;
    }
    if is_unit_name(name) {
        return SemanticType::UnitCode;
    }
    let mut all_int = true;
    let mut all_dec = true;
    let mut any = false;
    for v in values.into_iter().filter(|v| !v.is_empty()) {
        any = true;
        if all_int && parse_integer(v).is_none() {
            all_int = false;
        }
        if parse_decimal(v).is_none() {
            all_dec = false;
            break;
        }
    }
    match (any, all_int, all_dec) {
        (false, _, _) => SemanticType::Text,
        (true, true, _) => SemanticType::Integer,
        (true, false, true) => SemanticType::Decimal,
        _ => SemanticType::Text,
    }
}

/// Infers a schema from a header and sample rows; `overrides` win over every rule.
pub fn infer_schema(
    table_name: &str,
    header: &[String],
    sample_rows: &[Vec<Option<String>>],
    overrides: &Overrides,
) -> Result<TableSchema, IngestError> {
    if sample_rows.is_empty() {
        return Err(IngestError::EmptySample);
    }
    let columns = header
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let ty = overrides.get(name).copied().unwrap_or_else(|| {
                infer_column_type(
                    name,
                    sample_rows
                        .iter()
                        .filter_map(|r| r.get(i).and_then(|f| f.as_deref())),
                )
            });
            ColumnSpec::new(name.clone(), ty)
        })
        .collect();
    Ok(TableSchema::new(table_name, columns, true)?)
}

/// Reads the header and up to `sample_size` records of `path` and infers its schema.
pub fn infer_schema_from_file(
    path: impl AsRef<Path>,
    dialect: CsvDialect,
    sample_size: usize,
    overrides: &Overrides,
) -> Result<TableSchema, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::File {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = parse_csv_stream(BufReader::new(file), dialect);
    let header = match records.next() {
        Some(rec) => rec?.texts(),
        None => return Err(IngestError::EmptySample),
    };
    let sample = records
        .take(sample_size)
        .map(|r| r.map(|rec| rec.fields))
        .collect::<Result<Vec<_>, _>>()?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    infer_schema(&name, &header, &sample, overrides)
}
