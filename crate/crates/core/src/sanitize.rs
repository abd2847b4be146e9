//! Repairs restaurant CSV exports before they are loaded.
//!
//! The byte-visibility transform follows `cat -v`: control bytes become `^X`
//! (`^M` for carriage return, `^?` for DEL) and bytes that are not valid UTF-8
//! become `M-` followed by the rendering of their low seven bits. Tabs and
//! newlines pass through, as do well-formed multi-byte UTF-8 sequences.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::ingest::{self, parse_csv_stream, IngestError, LoadOptions};
use crate::ingest::infer_column_type;
use crate::table::{Cell, ColumnSpec, RawTable, SchemaError, SemanticType, TableSchema};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SanitizeReport {
    pub bytes_replaced: u64,
    pub lines_with_trailing_cr: u64,
    pub rows_in: u64,
    pub rows_out: u64,
}

impl SanitizeReport {
    pub fn merge(&mut self, other: &SanitizeReport) {
        self.bytes_replaced += other.bytes_replaced;
        self.lines_with_trailing_cr += other.lines_with_trailing_cr;
        self.rows_in += other.rows_in;
        self.rows_out += other.rows_out;
    }
}

fn push_low(out: &mut String, b: u8) {
    match b {
        0x7f => out.push_str("^?"),
        0x00..=0x1f => {
            out.push('^');
            out.push(char::from(b + 0x40));
        }
        _ => out.push(char::from(b)),
    }
}

/// Caret rendering of one byte.
pub fn caret_escape(b: u8) -> String {
    let mut out = String::with_capacity(4);
    if b >= 0x80 {
        out.push_str("M-");
    }
    push_low(&mut out, b & 0x7f);
    out
}

/// Renders one line body (no `\n`) into `out`, returning the number of escaped bytes.
fn render_into(out: &mut String, bytes: &[u8]) -> u64 {
    let mut replaced = 0;
    for chunk in bytes.utf8_chunks() {
        for c in chunk.valid().chars() {
            if c.is_ascii_control() && c != '\t' && c != '\n' {
                push_low(out, c as u8);
                replaced += 1;
            } else {
                out.push(c);
            }
        }
        for &b in chunk.invalid() {
            out.push_str(&caret_escape(b));
            replaced += 1;
        }
    }
    replaced
}

fn split_lines(data: &[u8]) -> impl Iterator<Item = (&[u8], bool)> {
    let mut rest = data;
    std::iter::from_fn(move || {
        if rest.is_empty() {
            return None;
        }
        match rest.iter().position(|&b| b == b'\n') {
            Some(i) => {
                let line = &rest[..i];
                rest = &rest[i + 1..];
                Some((line, true))
            }
            None => {
                let line = rest;
                rest = &[];
                Some((line, false))
            }
        }
    })
}

/// Makes arbitrary bytes valid text with visible escapes (carriage returns included).
pub fn normalize_encoding(data: &[u8]) -> (String, SanitizeReport) {
    let mut out = String::with_capacity(data.len());
    let mut report = SanitizeReport::default();
    for (line, terminated) in split_lines(data) {
        report.rows_in += 1;
        if line.last() == Some(&b'\r') {
            report.lines_with_trailing_cr += 1;
        }
        report.bytes_replaced += render_into(&mut out, line);
        if terminated {
            out.push('\n');
        }
        report.rows_out += 1;
    }
    (out, report)
}

/// Removes one trailing carriage return, raw or rendered as `^M`.
pub fn strip_trailing_cr(line: &str) -> String {
    line.strip_suffix('\r')
        .or_else(|| line.strip_suffix("^M"))
        .unwrap_or(line)
        .to_string()
}

/// Full byte-level repair: drops one trailing carriage return per line, then
/// applies [`normalize_encoding`] to the rest. Idempotent, never drops a line.
pub fn sanitize_bytes(data: &[u8]) -> (String, SanitizeReport) {
    let mut out = String::with_capacity(data.len());
    let mut report = SanitizeReport::default();
    for (line, terminated) in split_lines(data) {
        report.rows_in += 1;
        let (body, had_cr) = match line.strip_suffix(b"\r") {
            Some(b) => {
                report.lines_with_trailing_cr += 1;
                (b, true)
            }
            None => (line, false),
        };
        report.bytes_replaced += render_into(&mut out, body);
        // A final line ending in a bare CR keeps its line break.
        if terminated || had_cr {
            out.push('\n');
        }
        report.rows_out += 1;
    }
    (out, report)
}

/// Streaming form of [`sanitize_bytes`]; memory is bounded by the longest line.
pub fn sanitize_stream<R: BufRead, W: Write>(mut input: R, mut output: W) -> io::Result<SanitizeReport> {
    let mut report = SanitizeReport::default();
    let mut line = Vec::new();
    loop {
        line.clear();
        if input.read_until(b'\n', &mut line)? == 0 {
            break;
        }
        let (text, r) = sanitize_bytes(&line);
        report.merge(&r);
        output.write_all(text.as_bytes())?;
    }
    output.flush()?;
    Ok(report)
}

/// Same columns, every one typed as text.
pub fn widen_to_text(schema: &TableSchema) -> Result<TableSchema, SchemaError> {
    TableSchema::new(
        schema.table_name(),
        schema
            .columns()
            .iter()
            .map(|c| ColumnSpec::new(c.name.clone(), SemanticType::Text))
            .collect(),
        schema.has_header(),
    )
}

/// Retypes each text column by scanning all of its values with the schema
/// inference rules. Columns whose values do not all convert stay text; nulls
/// never block a conversion.
pub fn refine_types(table: RawTable) -> RawTable {
    let (schema, mut rows, source) = table.into_parts();
    let mut types: Vec<SemanticType> = schema.columns().iter().map(|c| c.semantic_type).collect();
    for (i, col) in schema.columns().iter().enumerate() {
        if col.semantic_type != SemanticType::Text {
            continue;
        }
        let candidate = infer_column_type(
            &col.name,
            rows.iter().filter_map(|r| r[i].as_str()),
        );
        if candidate == SemanticType::Text {
            continue;
        }
        let converted: Option<Vec<Cell>> = rows
            .iter()
            .map(|r| match &r[i] {
                Cell::Text(s) => ingest::coerce_cell(Some(s), candidate),
                other => Some(other.clone()),
            })
            .collect();
        if let Some(cells) = converted {
            for (row, cell) in rows.iter_mut().zip(cells) {
                row[i] = cell;
            }
            types[i] = candidate;
        }
    }
    let schema = schema.with_types(&types);
    RawTable::new(schema, rows, source).expect("widths unchanged")
}

/// Sanitizes `path`, loads it with every column as text using its own header,
/// then refines the column types.
pub fn load_sanitized(
    path: impl AsRef<Path>,
    table_name: &str,
    lenient: bool,
) -> Result<(ingest::LoadOutcome, SanitizeReport), IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| IngestError::File {
        path: path.to_path_buf(),
        source,
    })?;
    let (text, report) = sanitize_bytes(&bytes);
    let opts = LoadOptions {
        lenient,
        ..LoadOptions::default()
    };
    let outcome = load_text(&text, table_name, &opts, &path.display().to_string())?;
    Ok((outcome, report))
}

/// Loads already-clean text: header names become an all-text schema, then types are refined.
pub fn load_text(
    text: &str,
    table_name: &str,
    opts: &LoadOptions,
    source_path: &str,
) -> Result<ingest::LoadOutcome, IngestError> {
    let header = match parse_csv_stream(text.as_bytes(), opts.dialect).next() {
        Some(rec) => rec?.texts(),
        None => return Err(IngestError::Schema(SchemaError::EmptySchema)),
    };
    let columns = header
        .into_iter()
        .map(|n| ColumnSpec::new(n.trim().to_string(), SemanticType::Text))
        .collect();
    let schema = widen_to_text(&TableSchema::new(table_name, columns, true)?)?;
    let opts = LoadOptions {
        skip_header: true,
        ..*opts
    };
    let mut outcome = ingest::load_reader(text.as_bytes(), &schema, &opts, source_path)?;
    outcome.table = refine_types(outcome.table);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_input_is_identity() {
        let input = b"restaurant,item\nTaco Bell,Border Sauce\n";
        let (out, r) = normalize_encoding(input);
        assert_eq!(out.as_bytes(), input);
        assert_eq!(r.bytes_replaced, 0);
        assert_eq!(r.rows_in, 2);
    }

    #[test]
    fn carriage_return_renders_as_caret_m() {
        let (out, r) = normalize_encoding(b"a,b\r\nc,d\r\n");
        assert_eq!(out, "a,b^M\nc,d^M\n");
        assert_eq!(r.lines_with_trailing_cr, 2);
        assert_eq!(r.bytes_replaced, 2);
    }

    #[test]
    fn high_bytes_use_meta_prefix() {
        let (out, r) = normalize_encoding(b"Wendy\x92s\n");
        assert_eq!(out, "WendyM-^Rs\n");
        assert_eq!(r.bytes_replaced, 1);
        assert_eq!(caret_escape(0x93), "M-^S");
        assert_eq!(caret_escape(0xe9), "M-i");
        assert_eq!(caret_escape(0x7f), "^?");
        assert_eq!(caret_escape(0xff), "M-^?");
    }

    #[test]
    fn valid_utf8_survives() {
        let (out, r) = normalize_encoding("Café\n".as_bytes());
        assert_eq!(out, "Café\n");
        assert_eq!(r.bytes_replaced, 0);
    }

    #[test]
    fn strip_only_the_trailing_occurrence() {
        assert_eq!(strip_trailing_cr("abc^M"), "abc");
        assert_eq!(strip_trailing_cr("abc"), "abc");
        assert_eq!(strip_trailing_cr("a^Mb^M"), "a^Mb");
        assert_eq!(strip_trailing_cr("abc\r"), "abc");
    }

    #[test]
    fn pipeline_is_idempotent_and_keeps_rows() {
        let input = b"a\r\r\nb\x93\r\nlast";
        let (once, r1) = sanitize_bytes(input);
        let (twice, r2) = sanitize_bytes(once.as_bytes());
        assert_eq!(once, twice);
        assert_eq!(once, "a^M\nbM-^S\nlast");
        assert_eq!(r1.rows_in, r1.rows_out);
        assert_eq!(r2.bytes_replaced, 0);
    }

    #[test]
    fn stream_matches_bytes() {
        let input = b"x\r\ny\x81\nz";
        let mut out = Vec::new();
        let r = sanitize_stream(&input[..], &mut out).unwrap();
        assert_eq!((String::from_utf8(out).unwrap(), r), sanitize_bytes(input));
    }

    #[test]
    fn widen_all_columns() {
        let s = TableSchema::of(
            "t",
            &[("fdc_id", SemanticType::Id64), ("kcal", SemanticType::Decimal)],
        )
        .unwrap();
        let w = widen_to_text(&s).unwrap();
        assert!(w.columns().iter().all(|c| c.semantic_type == SemanticType::Text));
        assert_eq!(w.column_names().collect::<Vec<_>>(), vec!["fdc_id", "kcal"]);
        assert_eq!(widen_to_text(&w).unwrap(), w);
    }

    #[test]
    fn refine_kcal_with_nulls() {
        let s = TableSchema::of(
            "t",
            &[("kcal", SemanticType::Text), ("size", SemanticType::Text)],
        )
        .unwrap();
        let rows = vec![
            vec![Cell::Text("340".into()), Cell::Text("20".into())],
            vec![Cell::Text("840".into()), Cell::Text("oz".into())],
            vec![Cell::Null, Cell::Null],
        ];
        let t = refine_types(RawTable::new(s, rows, "").unwrap());
        assert_eq!(t.schema().columns()[0].semantic_type, SemanticType::Integer);
        assert_eq!(t.schema().columns()[1].semantic_type, SemanticType::Text);
        assert_eq!(t.rows()[1][0], Cell::Int(840));
        assert_eq!(t.rows()[2][0], Cell::Null);
    }

    #[test]
    fn refine_keeps_bad_id_column_as_text() {
        let s = TableSchema::of("t", &[("restaurant_id", SemanticType::Text)]).unwrap();
        let rows = vec![vec![Cell::Text("11".into())], vec![Cell::Text("n/a".into())]];
        let t = refine_types(RawTable::new(s, rows, "").unwrap());
        assert_eq!(t.schema().columns()[0].semantic_type, SemanticType::Text);
    }

    #[test]
    fn load_text_types_columns() {
        let out = load_text(
            "restaurant_id,restaurant,kcal\n2,Taco Bell,840\n4,Dunkin' Donuts,\n",
            "menustat",
            &LoadOptions::default(),
            "",
        )
        .unwrap();
        let types: Vec<_> = out.table.schema().columns().iter().map(|c| c.semantic_type).collect();
        assert_eq!(
            types,
            vec![SemanticType::Id64, SemanticType::Text, SemanticType::Integer]
        );
    }
}
