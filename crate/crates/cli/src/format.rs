//! On-disk formats.
//!
//! Records are JSONL: an optional header line `{"meta": {...}}` followed by
//! one object per throw,
//!
//! ```text
//! {"throw_id":0,"first_setting":"A","first_outcome":1,"second_setting":"C","second_outcome":-1}
//! ```
//!
//! Reports are pretty-printed JSON. Every float is written with 17
//! significant digits in exponent form (`1.4142135623730951e0`).

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use tbell_core::{Model, SettingTriple, ThrowRecord};

use crate::error::{CliError, Result};

/// `v` with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON formatter writing floats with 17 significant digits.
pub struct SigDigits<F> {
    inner: F,
}

impl SigDigits<CompactFormatter> {
    pub fn compact() -> Self {
        SigDigits { inner: CompactFormatter }
    }
}

impl SigDigits<PrettyFormatter<'static>> {
    pub fn pretty() -> Self {
        SigDigits {
            inner: PrettyFormatter::new(),
        }
    }
}

impl<F: Formatter> Formatter for SigDigits<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn end_object_key<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_key(writer)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

fn write_with<W: Write, F: Formatter, T: Serialize + ?Sized>(w: W, f: F, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(w, f);
    value.serialize(&mut ser).map_err(io::Error::other)
}

pub fn write_compact<W: Write, T: Serialize + ?Sized>(w: W, value: &T) -> io::Result<()> {
    write_with(w, SigDigits::compact(), value)
}

pub fn write_pretty<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> io::Result<()> {
    write_with(&mut w, SigDigits::pretty(), value)?;
    w.write_all(b"\n")
}

pub fn to_pretty_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    write_pretty(&mut buf, value).expect("in-memory write");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Header carried on the first line of a record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub seed: u64,
    pub triple: [[f64; 3]; 3],
    pub model: Model,
    pub n_throws: u64,
    #[serde(default)]
    pub second_flip: f64,
}

impl Meta {
    pub fn triple(&self) -> std::result::Result<SettingTriple, tbell_core::Error> {
        use tbell_core::Direction;
        Ok(SettingTriple::new(
            Direction::from_array(self.triple[0])?,
            Direction::from_array(self.triple[1])?,
            Direction::from_array(self.triple[2])?,
        ))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaLine<M> {
    meta: M,
}

/// Writes the optional header and one line per record.
pub fn write_records<W: Write>(mut w: W, meta: Option<&Meta>, records: &[ThrowRecord]) -> io::Result<()> {
    if let Some(m) = meta {
        write_compact(&mut w, &MetaLine { meta: m })?;
        w.write_all(b"\n")?;
    }
    for r in records {
        write_compact(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Parsed record file.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordFile {
    pub meta: Option<serde_json::Value>,
    pub records: Vec<ThrowRecord>,
}

/// Reads a JSONL record stream. `source` names the input in error messages;
/// line numbers are 1-based. Blank lines are skipped. A `{"meta": ...}`
/// line is accepted only before the first record.
pub fn read_records<R: BufRead>(reader: R, source: &str) -> Result<RecordFile> {
    let mut meta = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CliError::io(source, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parse_err = |message: String| CliError::Parse {
            path: source.to_string(),
            line: lineno,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| parse_err(format!("invalid JSON: {e}")))?;
        if value.get("meta").is_some() {
            if !records.is_empty() || meta.is_some() {
                return Err(parse_err("meta line must be the first line".into()));
            }
            let MetaLine { meta: m } = serde_json::from_value::<MetaLine<serde_json::Value>>(value)
                .map_err(|e| parse_err(format!("invalid meta line: {e}")))?;
            meta = Some(m);
            continue;
        }
        let record: ThrowRecord =
            serde_json::from_value(value).map_err(|e| parse_err(format!("invalid record: {e}")))?;
        records.push(record);
    }
    Ok(RecordFile { meta, records })
}
