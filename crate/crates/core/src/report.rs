//! Result sets and their JSON / CSV renderings.
//!
//! CSV output is one header line, one line per record, then a summary
//! block of `# key: <json value>` comment lines. Both renderings are
//! byte-stable for fixed inputs: records keep trial order and summary keys
//! are sorted.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::hilbert::StateJson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

/// One protocol run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub protocol: String,
    pub scenario: String,
    /// Trial index; for per-string sweeps, the query string itself.
    pub trial: u64,
    pub n: u32,
    pub regime: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    pub verdict: String,
    pub oracle_calls: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots_yes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultSet {
    pub scenario: String,
    pub protocol: String,
    pub records: Vec<RunRecord>,
    pub summary: BTreeMap<String, Value>,
    /// Side files (halting tables, certificates) to write next to the report.
    #[serde(skip)]
    pub artifacts: Vec<(PathBuf, String)>,
    /// `(trial, |χ⟩)` pairs, filled only with `--dump-state`.
    #[serde(skip)]
    pub state_dumps: Vec<(u64, StateJson)>,
}

pub const CSV_HEADER: [&str; 10] = [
    "scenario",
    "trial",
    "n",
    "regime",
    "inner_re",
    "inner_im",
    "probability",
    "verdict",
    "oracle_calls",
    "seed",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

// Shortest round-trip form, identical to the JSON rendering.
fn float(v: Option<f64>) -> String {
    v.map(|v| serde_json::Number::from_f64(v).map_or_else(|| v.to_string(), |n| n.to_string()))
        .unwrap_or_default()
}

pub fn render(results: &ResultSet, format: Format) -> Result<String> {
    if results.records.is_empty() {
        return Err(Error::Domain("refusing to emit an empty result set".into()));
    }
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(results)? + "\n"),
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(CSV_HEADER)?;
            for r in &results.records {
                writer.write_record([
                    r.scenario.clone(),
                    r.trial.to_string(),
                    r.n.to_string(),
                    r.regime.clone(),
                    float(r.inner.map(|c| c[0])),
                    float(r.inner.map(|c| c[1])),
                    float(r.probability),
                    r.verdict.clone(),
                    r.oracle_calls.to_string(),
                    opt(r.seed),
                ])?;
            }
            let mut out = writer
                .into_inner()
                .map_err(|e| Error::Domain(format!("csv buffer: {e}")))?;
            writeln!(out, "# summary").expect("write to Vec");
            for (key, value) in &results.summary {
                writeln!(out, "# {key}: {}", serde_json::to_string(value)?).expect("write to Vec");
            }
            String::from_utf8(out).map_err(|e| Error::Domain(e.to_string()))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the report to `path` (stdout when `None`) plus every artifact.
/// Relative artifact paths resolve against the report's directory.
pub fn emit_report(results: &ResultSet, format: Format, path: Option<&Path>) -> Result<()> {
    let text = render(results, format)?;
    match path {
        Some(p) => write_file(p, &text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    let base = path.and_then(Path::parent).unwrap_or(Path::new(""));
    for (artifact, contents) in &results.artifacts {
        write_file(&base.join(artifact), contents)?;
    }
    Ok(())
}
