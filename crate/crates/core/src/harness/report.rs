//! Result emission: one row per suite, JSON or CSV, stable field order.

use std::io::{self, Write};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected json or csv)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub summary: String,
    pub details: serde_json::Value,
}

impl SuiteResult {
    pub fn new(
        name: impl Into<String>,
        pass: bool,
        summary: impl Into<String>,
        details: impl Serialize,
    ) -> Self {
        Self {
            name: name.into(),
            pass,
            summary: summary.into(),
            details: serde_json::to_value(details).unwrap_or(serde_json::Value::Null),
        }
    }
}

/// Write results in the requested format. The caller's exit code should be
/// zero iff [`all_pass`] holds.
pub fn emit_report(
    results: &[SuiteResult],
    format: ReportFormat,
    out: &mut dyn Write,
) -> io::Result<()> {
    match format {
        ReportFormat::Json => {
            let text = serde_json::to_string_pretty(results)?;
            writeln!(out, "{text}")
        }
        ReportFormat::Csv => {
            writeln!(out, "name,pass,summary")?;
            for r in results {
                writeln!(out, "{},{},{}", csv_field(&r.name), r.pass, csv_field(&r.summary))?;
            }
            Ok(())
        }
    }
}

pub fn all_pass(results: &[SuiteResult]) -> bool {
    results.iter().all(|r| r.pass)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
