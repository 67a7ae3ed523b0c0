//! Count-data ingestion: CSV (one count per line, or `value,frequency`
//! pairs) and JSON (array of nonnegative integers).

use ecomp::inference::CountData;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum IngestError {
    /// Line- or element-addressed parse failure.
    ParseError {
        location: String,
        message: String,
    },
    Io(std::io::Error),
    Domain(ecomp::EcompError),
}

impl IngestError {
    pub fn name(&self) -> &'static str {
        match self {
            IngestError::ParseError { .. } => "ParseError",
            IngestError::Io(_) => "IoError",
            IngestError::Domain(e) => e.name(),
        }
    }
}

impl fmt::Display for IngestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IngestError::ParseError { location, message } => {
                write!(f, "{location}: {message}")
            }
            IngestError::Io(e) => write!(f, "{e}"),
            IngestError::Domain(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    Csv,
    Json,
}

pub fn ingest_counts(path: &Path, format: InputFormat) -> Result<CountData, IngestError> {
    let content = std::fs::read_to_string(path).map_err(IngestError::Io)?;
    match format {
        InputFormat::Csv => parse_csv(&content),
        InputFormat::Json => parse_json(&content),
    }
}

fn parse_csv(content: &str) -> Result<CountData, IngestError> {
    let mut pairs: Vec<(u64, u64)> = Vec::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |field: &str, what: &str| -> Result<u64, IngestError> {
            field.parse::<u64>().map_err(|_| IngestError::ParseError {
                location: format!("line {}", idx + 1),
                message: format!("{what} must be a nonnegative integer, got {field:?}"),
            })
        };
        match fields.as_slice() {
            [value] => pairs.push((parse(value, "count")?, 1)),
            [value, freq] => pairs.push((parse(value, "count")?, parse(freq, "frequency")?)),
            _ => {
                return Err(IngestError::ParseError {
                    location: format!("line {}", idx + 1),
                    message: format!("expected `value` or `value,frequency`, got {line:?}"),
                })
            }
        }
    }
    CountData::from_pairs(pairs).map_err(IngestError::Domain)
}

fn parse_json(content: &str) -> Result<CountData, IngestError> {
    let values: Vec<serde_json::Value> =
        serde_json::from_str(content).map_err(|e| IngestError::ParseError {
            location: "json".to_string(),
            message: e.to_string(),
        })?;
    let mut counts = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let c = v.as_u64().ok_or_else(|| IngestError::ParseError {
            location: format!("element {i}"),
            message: format!("expected a nonnegative integer, got {v}"),
        })?;
        counts.push(c);
    }
    if counts.is_empty() {
        return Err(IngestError::Domain(ecomp::EcompError::EmptyData));
    }
    CountData::from_counts(&counts).map_err(IngestError::Domain)
}
