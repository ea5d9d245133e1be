//! CSV and JSON emission of plot-ready datasets.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{CliError, OutputFormat, RunConfig, VERSION};

/// Rectangular table of doubles with provenance notes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub notes: Vec<String>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    fn check_finite(&self) -> Result<(), CliError> {
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(k) = row.iter().position(|v| !v.is_finite()) {
                return Err(CliError::Config(format!(
                    "non-finite value in column {} of row {i} of {}",
                    self.columns[k], self.name
                )));
            }
        }
        Ok(())
    }
}

/// Seventeen significant digits, enough to round-trip any double.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn config_json(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

pub fn render_csv(data: &Dataset, cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    data.check_finite()?;
    let mut out = Vec::new();
    writeln!(out, "# ergophase {VERSION}").unwrap();
    writeln!(out, "# dataset: {}", data.name).unwrap();
    writeln!(out, "# config: {}", config_json(cfg)).unwrap();
    for n in &data.notes {
        writeln!(out, "# {n}").unwrap();
    }
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(&data.columns).map_err(io)?;
    for row in &data.rows {
        w.write_record(row.iter().map(|&v| format_value(v))).map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Config(format!("csv: {}", e.error())))
}

pub fn render_json(data: &Dataset, cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    data.check_finite()?;
    let rows: Vec<Value> = data
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = data
                .columns
                .iter()
                .zip(row)
                .map(|(c, &v)| (c.clone(), json!(v)))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "tool": "ergophase",
        "version": VERSION,
        "dataset": data.name,
        "config": config_json(cfg),
        "notes": data.notes,
        "columns": data.columns,
        "rows": rows,
    });
    let mut out = serde_json::to_vec_pretty(&doc).expect("dataset serializes");
    out.push(b'\n');
    Ok(out)
}

pub fn render(data: &Dataset, cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    match cfg.output_format {
        OutputFormat::Csv => render_csv(data, cfg),
        OutputFormat::Json => render_json(data, cfg),
    }
}

/// Writes to `cfg.output_path`, or stdout when unset.
pub fn emit(data: &Dataset, cfg: &RunConfig) -> Result<(), CliError> {
    let bytes = render(data, cfg)?;
    match &cfg.output_path {
        Some(path) => write_file(path, &bytes),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Output {
                path: "stdout".into(),
                message: e.to_string(),
            }),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let mut d = Dataset::new("demo", &["x", "y"]);
        d.push(vec![0.1, 1.0 / 3.0]);
        d.push(vec![2.0, -0.0]);
        d.note("series: demo");
        d
    }

    #[test]
    fn csv_has_header_and_round_trips() {
        let cfg = RunConfig::default();
        let text = String::from_utf8(render_csv(&sample(), &cfg).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# ergophase "));
        assert!(lines[2].starts_with("# config: {"));
        assert_eq!(lines[4], "x,y");
        let y: f64 = lines[5].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(y, 1.0 / 3.0);
        let x: f64 = lines[5].split(',').next().unwrap().parse().unwrap();
        assert_eq!(x, 0.1);
    }

    #[test]
    fn json_rows_are_objects() {
        let cfg = RunConfig::default();
        let v: Value = serde_json::from_slice(&render_json(&sample(), &cfg).unwrap()).unwrap();
        assert_eq!(v["rows"][0]["y"].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(v["config"]["gamma0"].as_f64().unwrap(), 0.05);
    }

    #[test]
    fn rejects_non_finite() {
        let mut d = sample();
        d.push(vec![f64::NAN, 1.0]);
        assert!(render_csv(&d, &RunConfig::default()).is_err());
    }

    #[test]
    fn unwritable_path_is_reported() {
        let cfg = RunConfig {
            output_path: Some("/nonexistent-dir/x.csv".into()),
            ..RunConfig::default()
        };
        let err = emit(&sample(), &cfg).unwrap_err();
        assert!(matches!(err, CliError::Output { .. }));
    }
}
