//! Writers for every file the CLI emits. Each artifact carries a `meta` block
//! with the tool version, RNG, seed and the fully resolved configuration.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use shorcert::cert::CertificationReport;
use shorcert::sim::RNG_ALGORITHM;
use shorcert::{Histogram, TOOL_VERSION};

use crate::error::CliError;
use crate::manifest::{ReportFormat, SCHEMA_VERSION};

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool_version: &'static str,
    pub schema: u32,
    pub rng: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
}

impl Meta {
    pub fn new(command: &'static str, seed: Option<u64>, config: Value) -> Self {
        Self {
            tool_version: TOOL_VERSION,
            schema: SCHEMA_VERSION,
            rng: RNG_ALGORITHM,
            command,
            seed,
            config,
        }
    }

    /// `key=value` pairs for comment headers; nested config keys are dotted.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("tool_version".to_string(), self.tool_version.to_string()),
            ("schema".to_string(), self.schema.to_string()),
            ("rng".to_string(), self.rng.to_string()),
            ("command".to_string(), self.command.to_string()),
            (
                "seed".to_string(),
                self.seed.map_or_else(|| "none".to_string(), |s| s.to_string()),
            ),
        ];
        if let Value::Object(map) = &self.config {
            flatten("config", map, &mut out);
        }
        out
    }
}

fn flatten(prefix: &str, map: &Map<String, Value>, out: &mut Vec<(String, String)>) {
    for (k, v) in map {
        let key = format!("{prefix}.{k}");
        match v {
            Value::Object(inner) => flatten(&key, inner, out),
            Value::String(s) => out.push((key, s.clone())),
            Value::Null => out.push((key, "none".into())),
            other => out.push((key, other.to_string())),
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

/// `{"meta": ..., <body fields>}`.
pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, body: &T) -> Result<(), CliError> {
    let mut doc = Map::new();
    doc.insert("meta".into(), serde_json::to_value(meta)?);
    match serde_json::to_value(body)? {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("data".into(), other);
        }
    }
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &Value::Object(doc))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_histogram(dir: &Path, stem: &str, hist: &Histogram, meta: &Meta) -> Result<Vec<PathBuf>, CliError> {
    let csv_path = dir.join(format!("{stem}_histogram.csv"));
    let mut w = create(&csv_path)?;
    hist.write_csv(&mut w, &meta.pairs())?;
    w.flush()?;
    let json_path = dir.join(format!("{stem}_histogram.json"));
    write_json(&json_path, meta, &json!({ "histogram": hist.to_json_value() }))?;
    Ok(vec![csv_path, json_path])
}

fn report_rows(report: &CertificationReport) -> Result<Vec<(String, String)>, CliError> {
    let Value::Object(fields) = serde_json::to_value(report)? else {
        unreachable!("reports serialize to objects");
    };
    Ok(fields
        .into_iter()
        .map(|(k, v)| {
            let v = match v {
                Value::String(s) => s,
                Value::Null => String::new(),
                other => other.to_string(),
            };
            (k, v)
        })
        .collect())
}

/// Writes one report in the requested format and returns its path.
pub fn write_report(
    dir: &Path,
    stem: &str,
    report: &CertificationReport,
    meta: &Meta,
    format: ReportFormat,
) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{stem}_report.{}", format.extension()));
    match format {
        ReportFormat::Json => write_json(&path, meta, report)?,
        ReportFormat::Csv => write_report_table(&path, std::slice::from_ref(report), meta)?,
        ReportFormat::Text => {
            let mut w = create(&path)?;
            writeln!(w, "{}", report.summary_line())?;
            for (k, v) in report_rows(report)? {
                writeln!(w, "{k}: {v}")?;
            }
            for (k, v) in meta.pairs() {
                writeln!(w, "meta.{k}: {v}")?;
            }
            w.flush()?;
        }
    }
    Ok(path)
}

/// Reports as CSV rows under `# key=value` metadata lines.
pub fn write_report_table(path: &Path, reports: &[CertificationReport], meta: &Meta) -> Result<(), CliError> {
    let mut w = create(path)?;
    for (k, v) in meta.pairs() {
        writeln!(w, "# {k}={v}")?;
    }
    let mut table = csv::Writer::from_writer(w);
    for (i, report) in reports.iter().enumerate() {
        let rows = report_rows(report)?;
        if i == 0 {
            table.write_record(rows.iter().map(|(k, _)| k))?;
        }
        table.write_record(rows.iter().map(|(_, v)| v))?;
    }
    table.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}
