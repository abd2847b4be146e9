//! Streaming record reader for delimiter-separated text.
//!
//! Records are produced one at a time from a [`BufRead`]; the reader holds at
//! most one physical line plus the record being assembled, so memory is bounded
//! by the longest record rather than the size of the input.

use std::io::BufRead;

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineTerminator {
    /// `\n` only; a `\r` before it is kept as data.
    Lf,
    /// `\r\n` only; a bare `\n` is a parse error.
    CrLf,
    /// `\n` with an optional preceding `\r`.
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvDialect {
    pub delimiter: u8,
    /// Enclosing quote character. Inside an enclosed field, a doubled quote is a literal quote.
    pub quote: Option<u8>,
    pub terminator: LineTerminator,
}

impl CsvDialect {
    /// Comma-separated, double-quote enclosed, `\n` or `\r\n` lines.
    pub const fn usda() -> Self {
        Self {
            delimiter: b',',
            quote: Some(b'"'),
            terminator: LineTerminator::Any,
        }
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }

    pub fn without_quotes(mut self) -> Self {
        self.quote = None;
        self
    }
}

impl Default for CsvDialect {
    fn default() -> Self {
        Self::usda()
    }
}

/// One parsed record. `None` marks an unenclosed empty field, which loads as
/// null; an enclosed empty field (`""`) is `Some("")`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    /// 1-based physical line on which the record starts.
    pub line_no: u64,
    pub fields: Vec<Option<String>>,
    /// The record as read, terminator removed (for reject files).
    pub raw: String,
}

impl RawRecord {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Field texts with nulls rendered empty.
    pub fn texts(&self) -> Vec<String> {
        self.fields
            .iter()
            .map(|f| f.clone().unwrap_or_default())
            .collect()
    }
}

/// Lazy record iterator. Width is taken from the first record unless fixed
/// with [`CsvReader::expect_width`]; a record of a different width yields
/// [`IngestError::RaggedRow`] and iteration continues with the next record.
pub struct CsvReader<R> {
    source: R,
    dialect: CsvDialect,
    expected: Option<usize>,
    line_no: u64,
    buf: Vec<u8>,
    done: bool,
}

/// Parses `source` lazily under `dialect`.
pub fn parse_csv_stream<R: BufRead>(source: R, dialect: CsvDialect) -> CsvReader<R> {
    CsvReader::new(source, dialect)
}

impl<R: BufRead> CsvReader<R> {
    pub fn new(source: R, dialect: CsvDialect) -> Self {
        Self {
            source,
            dialect,
            expected: None,
            line_no: 0,
            buf: Vec::new(),
            done: false,
        }
    }

    pub fn expect_width(mut self, width: usize) -> Self {
        self.expected = Some(width);
        self
    }

    /// Reads one physical line into `buf` (appending). Returns false at EOF.
    fn read_line(&mut self) -> Result<bool, IngestError> {
        let n = self.source.read_until(b'\n', &mut self.buf)?;
        if n > 0 {
            self.line_no += 1;
        }
        Ok(n > 0)
    }

    /// Length of the line terminator at the end of `buf`, if any.
    fn terminator_len(&self) -> usize {
        let b = &self.buf;
        if !b.ends_with(b"\n") {
            return 0;
        }
        let has_cr = b.len() >= 2 && b[b.len() - 2] == b'\r';
        match self.dialect.terminator {
            LineTerminator::Lf => 1,
            LineTerminator::Any | LineTerminator::CrLf => {
                if has_cr {
                    2
                } else {
                    1
                }
            }
        }
    }

    fn next_record(&mut self) -> Result<Option<RawRecord>, IngestError> {
        loop {
            self.buf.clear();
            if !self.read_line()? {
                return Ok(None);
            }
            // Blank lines carry no record.
            if self.buf.len() > self.terminator_len() {
                break;
            }
        }
        let start_line = self.line_no;
        let mut fields: Vec<Option<String>> = Vec::new();
        let mut field: Vec<u8> = Vec::new();
        let mut enclosed = false;
        let mut in_quotes = false;
        let mut pos = 0usize;
        let quote = self.dialect.quote;
        let delim = self.dialect.delimiter;

        loop {
            let end = self.buf.len() - self.terminator_len();
            while pos < end {
                let c = self.buf[pos];
                if in_quotes {
                    if Some(c) == quote {
                        if pos + 1 < end && self.buf[pos + 1] == c {
                            field.push(c);
                            pos += 2;
                            continue;
                        }
                        in_quotes = false;
                    } else {
                        field.push(c);
                    }
                } else if c == delim {
                    fields.push(finish_field(&mut field, enclosed, start_line)?);
                    enclosed = false;
                } else if Some(c) == quote && field.is_empty() && !enclosed {
                    in_quotes = true;
                    enclosed = true;
                } else {
                    field.push(c);
                }
                pos += 1;
            }
            if !in_quotes {
                break;
            }
            // The line break sits inside an enclosed field, so it is data.
            field.extend_from_slice(&self.buf[end..]);
            let resume = self.buf.len();
            if !self.read_line()? {
                return Err(IngestError::UnbalancedQuote {
                    line_no: start_line,
                });
            }
            pos = resume;
        }
        fields.push(finish_field(&mut field, enclosed, start_line)?);

        let term = self.terminator_len();
        if self.dialect.terminator == LineTerminator::CrLf && term == 1 {
            return Err(IngestError::BadTerminator {
                line_no: self.line_no,
            });
        }
        let raw = String::from_utf8_lossy(&self.buf[..self.buf.len() - term]).into_owned();
        Ok(Some(RawRecord {
            line_no: start_line,
            fields,
            raw,
        }))
    }
}

fn finish_field(
    field: &mut Vec<u8>,
    enclosed: bool,
    line_no: u64,
) -> Result<Option<String>, IngestError> {
    let bytes = std::mem::take(field);
    if bytes.is_empty() && !enclosed {
        return Ok(None);
    }
    String::from_utf8(bytes)
        .map(Some)
        .map_err(|_| IngestError::InvalidUtf8 { line_no })
}

impl<R: BufRead> Iterator for CsvReader<R> {
    type Item = Result<RawRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_record() {
            Ok(None) => {
                self.done = true;
                None
            }
            Ok(Some(rec)) => {
                let expected = *self.expected.get_or_insert(rec.len());
                if rec.len() != expected {
                    return Some(Err(IngestError::RaggedRow {
                        line_no: rec.line_no,
                        expected,
                        got: rec.len(),
                        raw: rec.raw,
                    }));
                }
                Some(Ok(rec))
            }
            Err(e) => {
                // Recoverable per-record errors keep the stream alive.
                if !matches!(e, IngestError::InvalidUtf8 { .. }) {
                    self.done = true;
                }
                Some(Err(e))
            }
        }
    }
}
