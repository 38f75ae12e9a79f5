//! Flat report rows and their two on-disk encodings.
//!
//! Delimited text starts with a `#` comment line carrying the schema version
//! and units, then a header row. Reals are written with 17 significant
//! digits, which round-trips every `f64`. Structured records are one JSON
//! object per line, each with its own `schema_version` field.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Report encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// Comma-separated text with a header row.
    #[default]
    Csv,
    /// One JSON object per line.
    Jsonl,
    /// Both of the above.
    Both,
}

impl Format {
    pub fn encodings(self) -> &'static [Format] {
        match self {
            Format::Csv => &[Format::Csv],
            Format::Jsonl => &[Format::Jsonl],
            Format::Both => &[Format::Csv, Format::Jsonl],
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv | Format::Both => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

/// A row type with a fixed column order.
pub trait ReportRow: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
    /// Free text placed in the leading comment line.
    const NOTE: &'static str;
    fn cells(&self) -> Vec<String>;
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

/// One audit outcome for one scenario, ε and flavor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub schema_version: u32,
    pub scenario: String,
    /// Which audit produced the row.
    pub audit: String,
    /// Which property the row checks.
    pub flavor: String,
    pub mode: String,
    pub x: String,
    pub y: String,
    pub z: String,
    pub epsilon: f64,
    /// `ok`, `inconclusive`, `not_applicable` or `error`.
    pub status: String,
    pub verdict: String,
    /// First-order prediction of `realized`.
    pub predicted: Option<f64>,
    /// The realized change whose sign the flavor constrains; nonnegative
    /// means monotone.
    pub realized: Option<f64>,
    pub relative_residual: Option<f64>,
    pub alpha: Option<f64>,
    pub rate_beta: Option<f64>,
    /// Whether the sufficient conditions of the guarantee hold.
    pub predicate: Option<bool>,
    pub within_basin: Option<bool>,
    pub detail: String,
}

impl ReportRow for AuditRecord {
    const HEADER: &'static [&'static str] = &[
        "schema_version",
        "scenario",
        "audit",
        "flavor",
        "mode",
        "x",
        "y",
        "z",
        "epsilon",
        "status",
        "verdict",
        "predicted",
        "realized",
        "relative_residual",
        "alpha",
        "rate_beta",
        "predicate",
        "within_basin",
        "detail",
    ];
    const NOTE: &'static str = "audit records; scores, deltas and rates in raw model units (dimensionless)";

    fn cells(&self) -> Vec<String> {
        vec![
            self.schema_version.to_string(),
            self.scenario.clone(),
            self.audit.clone(),
            self.flavor.clone(),
            self.mode.clone(),
            self.x.clone(),
            self.y.clone(),
            self.z.clone(),
            format_f64(self.epsilon),
            self.status.clone(),
            self.verdict.clone(),
            opt_f64(self.predicted),
            opt_f64(self.realized),
            opt_f64(self.relative_residual),
            opt_f64(self.alpha),
            opt_f64(self.rate_beta),
            opt_bool(self.predicate),
            opt_bool(self.within_basin),
            self.detail.clone(),
        ]
    }
}

/// One explicit gradient step of the synthetic training-trace analog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTraceRecord {
    pub schema_version: u32,
    pub step: usize,
    pub x: String,
    pub chosen: String,
    pub rejected: String,
    pub chosen_score_before: f64,
    pub rejected_score_before: f64,
    pub chosen_delta: f64,
    pub rejected_delta: f64,
    /// Recomputed from the score difference itself, not from the two deltas.
    pub pairwise_delta: f64,
    pub alpha: f64,
    pub chosen_alignment: f64,
    pub rejected_alignment: f64,
    pub min_chosen_versus_alignment: f64,
    pub predicate_pairwise: bool,
    pub predicate_chosen: bool,
    pub predicate_rejected: bool,
    pub predicate_fully_pairwise: bool,
    pub verdict_pairwise: String,
    pub verdict_chosen: String,
    pub verdict_rejected: String,
    pub verdict_fully_pairwise: String,
    pub verdict_probability: String,
}

impl ReportRow for StepTraceRecord {
    const HEADER: &'static [&'static str] = &[
        "schema_version",
        "step",
        "x",
        "chosen",
        "rejected",
        "chosen_score_before",
        "rejected_score_before",
        "chosen_delta",
        "rejected_delta",
        "pairwise_delta",
        "alpha",
        "chosen_alignment",
        "rejected_alignment",
        "min_chosen_versus_alignment",
        "predicate_pairwise",
        "predicate_chosen",
        "predicate_rejected",
        "predicate_fully_pairwise",
        "verdict_pairwise",
        "verdict_chosen",
        "verdict_rejected",
        "verdict_fully_pairwise",
        "verdict_probability",
    ];
    const NOTE: &'static str = "qualitative synthetic analog of score changes during preference fine-tuning; \
        not a reproduction of any large-model experiment; scores in raw model units (dimensionless)";

    fn cells(&self) -> Vec<String> {
        vec![
            self.schema_version.to_string(),
            self.step.to_string(),
            self.x.clone(),
            self.chosen.clone(),
            self.rejected.clone(),
            format_f64(self.chosen_score_before),
            format_f64(self.rejected_score_before),
            format_f64(self.chosen_delta),
            format_f64(self.rejected_delta),
            format_f64(self.pairwise_delta),
            format_f64(self.alpha),
            format_f64(self.chosen_alignment),
            format_f64(self.rejected_alignment),
            format_f64(self.min_chosen_versus_alignment),
            self.predicate_pairwise.to_string(),
            self.predicate_chosen.to_string(),
            self.predicate_rejected.to_string(),
            self.predicate_fully_pairwise.to_string(),
            self.verdict_pairwise.clone(),
            self.verdict_chosen.clone(),
            self.verdict_rejected.clone(),
            self.verdict_fully_pairwise.clone(),
            self.verdict_probability.clone(),
        ]
    }
}

pub fn write_csv<R: ReportRow, W: Write>(records: &[R], mut out: W) -> std::io::Result<()> {
    writeln!(out, "# schema_version={SCHEMA_VERSION}; {}", R::NOTE)?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(R::HEADER)?;
    for r in records {
        writer.write_record(r.cells())?;
    }
    writer.flush()
}

pub fn write_jsonl<R: ReportRow, W: Write>(records: &[R], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_csv<R: ReportRow, In: Read>(input: In) -> std::result::Result<Vec<R>, String> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(R::HEADER.iter().copied()) {
        return Err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()));
    }
    reader.deserialize().map(|row| row.map_err(|e| e.to_string())).collect()
}

pub fn read_jsonl<R: ReportRow, In: Read>(input: In) -> std::result::Result<Vec<R>, String> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}

/// Writes `records` to `path` in one encoding (`Both` is treated as CSV).
pub fn emit_report<R: ReportRow>(records: &[R], format: Format, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let out = BufWriter::new(file);
    match format {
        Format::Csv | Format::Both => write_csv(records, out),
        Format::Jsonl => write_jsonl(records, out),
    }
    .map_err(|e| Error::io(path, e))
}

/// Reads a report back, choosing the encoding from the file extension.
pub fn parse_report<R: ReportRow>(path: &Path) -> Result<Vec<R>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed = match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => read_jsonl(file),
        _ => read_csv(file),
    };
    parsed.map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })
}
