//! Versioned JSON envelopes and their canonical text form.
//!
//! Canonical text: keys sorted, two-space indentation, arrays of scalars
//! (or of arrays of scalars) on one line, integers verbatim and every other
//! number as `{:.16e}` (17 significant digits).

use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Representation,
    LocalConnection,
    WeightedBundle,
    FuchsianSystem,
    Report,
}

impl Kind {
    pub const ALL: [Kind; 5] = [
        Kind::Representation,
        Kind::LocalConnection,
        Kind::WeightedBundle,
        Kind::FuchsianSystem,
        Kind::Report,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Kind::Representation => "representation",
            Kind::LocalConnection => "local-connection",
            Kind::WeightedBundle => "weighted-bundle",
            Kind::FuchsianSystem => "fuchsian-system",
            Kind::Report => "report",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub kind: Kind,
    pub payload: Value,
}

impl Envelope {
    pub fn new(kind: Kind, payload: Value) -> Self {
        Self { kind, payload }
    }

    pub fn from_value(v: Value) -> CliResult<Self> {
        let Value::Object(mut obj) = v else {
            return Err(CliError::schema("document must be a JSON object"));
        };
        let kind = match obj.remove("kind") {
            Some(Value::String(s)) => Kind::from_tag(&s).ok_or_else(|| CliError::schema(format!("unknown kind {s:?}")))?,
            _ => return Err(CliError::schema("document lacks a string \"kind\"")),
        };
        match obj.remove("version") {
            Some(Value::String(s)) if s == FORMAT_VERSION => {}
            Some(other) => return Err(CliError::schema(format!("unsupported version {other}"))),
            None => return Err(CliError::schema("document lacks a \"version\"")),
        }
        let payload = obj
            .remove("payload")
            .ok_or_else(|| CliError::schema("document lacks a \"payload\""))?;
        if let Some(extra) = obj.keys().next() {
            return Err(CliError::schema(format!("unexpected top-level field {extra:?}")));
        }
        Ok(Self { kind, payload })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        Self::from_value(parse_json(text)?)
    }

    /// The payload, provided the kind is `expected`.
    pub fn expect(self, expected: Kind) -> CliResult<Value> {
        if self.kind != expected {
            return Err(CliError::schema(format!(
                "expected a {} document, got {}",
                expected.tag(),
                self.kind.tag()
            )));
        }
        Ok(self.payload)
    }

    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::String(self.kind.tag().into()));
        obj.insert("version".into(), Value::String(FORMAT_VERSION.into()));
        obj.insert("payload".into(), self.payload.clone());
        Value::Object(obj)
    }

    pub fn to_canonical(&self) -> String {
        canonical(&self.to_value())
    }
}

pub fn parse_json(text: &str) -> CliResult<Value> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn is_inline(v: &Value) -> bool {
    match v {
        Value::Array(items) => items
            .iter()
            .all(|x| is_scalar(x) || matches!(x, Value::Array(inner) if inner.iter().all(is_scalar))),
        Value::Object(m) => m.is_empty(),
        _ => true,
    }
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if n.is_i64() || n.is_u64() {
        let _ = write!(out, "{n}");
    } else {
        let x = n.as_f64().expect("JSON numbers are finite");
        let _ = write!(out, "{x:.16e}");
    }
}

fn write_inline(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_inline(out, x);
            }
            out.push(']');
        }
        Value::Object(_) => out.push_str("{}"),
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    if is_inline(v) {
        write_inline(out, v);
        return;
    }
    let pad = "  ".repeat(indent + 1);
    match v {
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad);
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(m) => {
            // serde_json's default map is ordered by key.
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&serde_json::to_string(k).expect("strings serialize"));
                out.push_str(": ");
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
        _ => unreachable!("scalars are inline"),
    }
}

/// Canonical text of a JSON value, with a trailing newline.
pub fn canonical(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}
