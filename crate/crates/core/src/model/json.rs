//! Dataset JSON.
//!
//! ```text
//! {"version":1,"lines":[{"id":<int>,"points":[[x,y],...],"importance":<number>|[<number>,...],"cluster":<string?>}]}
//! ```
//!
//! Canonical output keeps keys in that order, writes one line object per
//! text line, rounds numbers to 9 significant digits and ends with LF.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Deserialize;

use super::{invalid, Importance, LineSet, ModelError, Point2, Polyline};

const FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
struct RawLineSet {
    version: u32,
    lines: Vec<RawLine>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct RawLine {
    id: i64,
    points: Vec<[f64; 2]>,
    importance: RawImportance,
    #[serde(default)]
    cluster: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawImportance {
    Scalar(f64),
    List(Vec<f64>),
}

pub fn load_lineset<R: Read>(mut source: R) -> Result<LineSet, ModelError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    LineSet::from_json(&bytes)
}

pub fn save_lineset<W: Write>(lineset: &LineSet, mut sink: W) -> Result<(), ModelError> {
    sink.write_all(lineset.to_canonical_json().as_bytes())?;
    Ok(())
}

impl LineSet {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ModelError> {
        let raw: RawLineSet =
            serde_json::from_slice(bytes).map_err(|e| ModelError::Parse(e.to_string()))?;
        if raw.version != FORMAT_VERSION {
            return Err(invalid(
                None,
                "version",
                format!("unsupported version {}", raw.version),
            ));
        }
        let lines = raw
            .lines
            .into_iter()
            .map(|l| {
                let importance = match l.importance {
                    RawImportance::Scalar(v) => Importance::Scalar(v),
                    RawImportance::List(v) => Importance::PerVertex(v),
                };
                let points = l.points.iter().map(|p| Point2::new(p[0], p[1])).collect();
                Polyline::new(l.id, points, importance, l.cluster)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut set = LineSet::new(lines)?;
        set.metadata = raw.metadata;
        Ok(set)
    }

    pub fn to_canonical_json(&self) -> String {
        let mut out = String::with_capacity(64 + self.lines.len() * 160);
        out.push_str("{\"version\":1,\"lines\":[\n");
        for (i, line) in self.lines.iter().enumerate() {
            if i > 0 {
                out.push_str(",\n");
            }
            write_line(&mut out, line);
        }
        out.push_str("\n]");
        if !self.metadata.is_empty() {
            out.push_str(",\"metadata\":{");
            for (i, (k, v)) in self.metadata.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&json_string(k));
                out.push(':');
                out.push_str(&json_string(v));
            }
            out.push('}');
        }
        out.push_str("}\n");
        out
    }
}

fn write_line(out: &mut String, line: &Polyline) {
    out.push_str("{\"id\":");
    out.push_str(&line.id.to_string());
    out.push_str(",\"points\":[");
    for (i, p) in line.points().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        out.push_str(&canonical_number(p.x));
        out.push(',');
        out.push_str(&canonical_number(p.y));
        out.push(']');
    }
    out.push_str("],\"importance\":");
    match line.importance() {
        Importance::Scalar(v) => out.push_str(&canonical_number(*v)),
        Importance::PerVertex(values) => {
            out.push('[');
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&canonical_number(*v));
            }
            out.push(']');
        }
    }
    if let Some(c) = &line.cluster {
        out.push_str(",\"cluster\":");
        out.push_str(&json_string(c));
    }
    out.push('}');
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Rounds to 9 significant digits.
pub(crate) fn quantize(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

/// Shortest decimal text for `quantize(v)`; never uses an exponent.
pub(crate) fn canonical_number(v: f64) -> String {
    format!("{}", quantize(v))
}
