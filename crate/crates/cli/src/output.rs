use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;

use crate::config::{ExperimentConfig, Format};

/// One cell of an output row.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
    /// A short list of reals: `a:b` in CSV, an array in JSON.
    Reals(Vec<f64>),
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<u32> for Value {
    fn from(x: u32) -> Self {
        Value::Int(x as i64)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

/// Reals carry 17 significant digits so doubles round-trip exactly.
fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Int(x) => x.to_string(),
            Value::Real(x) => real(*x),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Value::Text(s) => s.clone(),
            Value::Reals(v) => v.iter().map(|x| real(*x)).collect::<Vec<_>>().join(":"),
        }
    }

    fn json(&self) -> String {
        match self {
            Value::Int(x) => x.to_string(),
            Value::Real(x) if x.is_finite() => real(*x),
            Value::Real(_) => "null".into(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => serde_json::Value::String(s.clone()).to_string(),
            Value::Reals(v) => format!(
                "[{}]",
                v.iter()
                    .map(|x| Value::Real(*x).json())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Header line: tool version, resolved config, seed and wall-clock time.
pub fn header(cfg: &ExperimentConfig) -> String {
    let ts = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "tool": "magicflow",
        "version": env!("CARGO_PKG_VERSION"),
        "mode": cfg.mode.to_string(),
        "config": cfg,
        "seed": cfg.seed,
        "timestamp": ts,
    })
    .to_string()
}

/// Writes the header line, then the table as CSV (column line plus rows) or
/// as one JSON object per row. Lines end in LF.
pub fn write_table<W: Write>(
    w: &mut W,
    cfg: &ExperimentConfig,
    table: &Table,
) -> std::io::Result<()> {
    writeln!(w, "{}", header(cfg))?;
    match cfg.format {
        Format::Csv => {
            writeln!(w, "{}", table.columns.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Value::csv).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            for row in &table.rows {
                let fields: Vec<String> = table
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| format!("\"{c}\":{}", v.json()))
                    .collect();
                writeln!(w, "{{{}}}", fields.join(","))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, std::f64::consts::PI] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(real(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn json_rows_parse() {
        let v = Value::Real(0.25).json();
        let parsed: serde_json::Value = serde_json::from_str(&format!("{{\"x\":{v}}}")).unwrap();
        assert_eq!(parsed["x"].as_f64(), Some(0.25));
        assert_eq!(Value::Real(f64::NAN).json(), "null");
        assert_eq!(Value::Text("a,b".into()).csv(), "\"a,b\"");
    }
}
