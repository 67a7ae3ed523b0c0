//! Report emission: JSON (default) or CSV on stdout.
//!
//! Output is byte-identical for identical argv and seed. Every numeric in
//! JSON is a finite double; logs of exact zeros are emitted as null rather
//! than -inf, and probabilities always travel with their log values so tiny
//! magnitudes survive serialization.

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// A finite f64 as a JSON number, anything else as null.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn num_vec(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|&v| num(v)).collect())
}

/// Emit a report: JSON verbatim, or CSV as `key,value` rows with one row
/// per array element (`key[i]`) and table-valued fields expanded by the
/// caller beforehand.
pub fn emit(report: &Value, format: OutputFormat) {
    match format {
        OutputFormat::Json => println!("{report}"),
        OutputFormat::Csv => {
            println!("key,value");
            let obj = report.as_object().expect("reports are objects");
            emit_csv_object("", obj);
        }
    }
}

fn emit_csv_object(prefix: &str, obj: &Map<String, Value>) {
    for (k, v) in obj {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        emit_csv_value(&key, v);
    }
}

fn emit_csv_value(key: &str, v: &Value) {
    match v {
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                emit_csv_value(&format!("{key}[{i}]"), item);
            }
        }
        Value::Object(obj) => emit_csv_object(key, obj),
        Value::Null => println!("{key},"),
        other => println!("{key},{other}"),
    }
}
