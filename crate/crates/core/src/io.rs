//! Measure and coupling CSV files, and JSON documents with fixed float formatting.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::martingale::Coupling;
use crate::measures::DiscreteMeasure;

pub const SCHEMA_VERSION: u32 = 1;

fn parse_rows(text: &str, width: usize) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(k + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != width {
            return Err(Error::Parse { line, message: format!("expected {width} fields, found {}", rec.len()) });
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if v.iter().all(|x| x.is_finite()) => rows.push((line, v)),
            Ok(_) => return Err(Error::Parse { line, message: "non-finite number".into() }),
            // a non-numeric first row is a header
            Err(_) if rows.is_empty() && k == 0 => continue,
            Err(e) => return Err(Error::Parse { line, message: format!("{e}: {:?}", rec.iter().collect::<Vec<_>>()) }),
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, message: "no data rows".into() });
    }
    Ok(rows)
}

/// Parses `atom,weight` rows in any order; an optional header is skipped.
pub fn parse_measure_csv(text: &str) -> Result<DiscreteMeasure> {
    let rows = parse_rows(text, 2)?;
    DiscreteMeasure::from_pairs(rows.iter().map(|(_, v)| (v[0], v[1])))
        .map_err(|e| Error::Parse { line: 0, message: e.to_string() })
}

pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    parse_measure_csv(&std::fs::read_to_string(path)?)
}

pub fn measure_to_csv(m: &DiscreteMeasure) -> String {
    let mut s = String::from("atom,weight\n");
    for (x, w) in m.iter() {
        s.push_str(&format!("{},{}\n", sci(x), sci(w)));
    }
    s
}

/// Parses `source_atom,target_atom,mass` rows.
pub fn parse_coupling_csv(text: &str) -> Result<Coupling> {
    let rows = parse_rows(text, 3)?;
    let triplets: Vec<(f64, f64, f64)> = rows.iter().map(|(_, v)| (v[0], v[1], v[2])).collect();
    Coupling::from_triplets(&triplets)
}

pub fn read_coupling(path: &Path) -> Result<Coupling> {
    parse_coupling_csv(&std::fs::read_to_string(path)?)
}

pub fn coupling_to_csv(c: &Coupling) -> String {
    let mut s = String::from("source_atom,target_atom,mass\n");
    for (x, y, m) in c.triplets() {
        s.push_str(&format!("{},{},{}\n", sci(x), sci(y), sci(m)));
    }
    s
}

/// Fixed scientific notation with 17 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

struct SciFormatter(serde_json::ser::PrettyFormatter<'static>);

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        w.write_all(sci(v).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        self.write_f64(w, v as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    schema: u32,
    kind: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with every float in fixed scientific notation, so identical
/// inputs give byte-identical output. Non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Io(e.into()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("json output is utf-8"))
}

/// A versioned document: `{"schema": 1, "kind": ..., <fields of body>}`.
pub fn to_document<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    to_json(&Document { schema: SCHEMA_VERSION, kind, body })
}
