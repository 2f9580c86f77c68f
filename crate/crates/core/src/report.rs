//! Versioned JSON report shared by every workflow.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clf::{AlignmentScore, BoundCheckResult};
use crate::error::{Error, Result};
use crate::harness::{CorrelationReport, StructureReport};
use crate::seq::RankingSummary;
use crate::sgns::{StabilitySummary, TrainSummary};
use crate::sim::RecoveryReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct F1Scores {
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<AlignmentScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<F1Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_check: Option<BoundCheckResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<RankingSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<RecoveryReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub correlations: Vec<CorrelationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainSummary>,
}

impl Default for MetricReport {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: None,
            metrics: BTreeMap::new(),
            alignment: None,
            classifier: None,
            bound_check: None,
            ranking: None,
            recovery: None,
            structure: None,
            correlations: Vec::new(),
            stability: None,
            training: None,
        }
    }
}

impl MetricReport {
    pub fn for_command(command: &str) -> Self {
        Self {
            command: Some(command.to_string()),
            ..Self::default()
        }
    }

    pub fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }

    /// Serializes to pretty JSON. JSON has no NaN or infinity, so those are
    /// rejected with the path of the offending field.
    pub fn to_json(&self) -> Result<String> {
        // serde_json maps NaN and infinities to null; optional fields are
        // skipped when absent, so any null marks a non-finite number
        let value = serde_json::to_value(self)?;
        if let Some(path) = find_null(&value, String::new()) {
            return Err(Error::NonFinite(path));
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: MetricReport = serde_json::from_str(text)?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported schema_version {}", r.schema_version)));
        }
        Ok(r)
    }
}

fn find_null(v: &serde_json::Value, path: String) -> Option<String> {
    use serde_json::Value;
    let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    match v {
        Value::Null => Some(path),
        Value::Array(xs) => xs.iter().enumerate().find_map(|(i, x)| find_null(x, join(&i.to_string()))),
        Value::Object(m) => m.iter().find_map(|(k, x)| find_null(x, join(k))),
        _ => None,
    }
}

pub fn write_report_to<W: Write>(report: &MetricReport, mut out: W) -> Result<()> {
    let text = report.to_json()?;
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn write_report(report: &MetricReport, path: impl AsRef<Path>) -> Result<()> {
    // serialize before touching the file so a rejected report leaves nothing behind
    let text = report.to_json()?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<MetricReport> {
    let r: MetricReport = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if r.schema_version != SCHEMA_VERSION {
        return Err(Error::Format(format!("unsupported schema_version {}", r.schema_version)));
    }
    Ok(r)
}
