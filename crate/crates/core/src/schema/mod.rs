//! Unified instance artifact: `instance.json`, `model.md`, `data/` tables.

mod cr;
mod emit;
mod validate;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use cr::{compute_cr, corpus_stats, CompressionRecord, CorpusStats, InstanceStats, SizeUnit, Summary};
pub use emit::{emit_instance, render_abstract, EmitOptions};
pub use validate::{validate_instance, SchemaViolation};
pub(crate) use emit::{num_value, write_slots};

pub const INSTANCE_FILE: &str = "instance.json";
pub const MODEL_MD: &str = "model.md";
pub const SOLVER_FILE: &str = "solve.py";
pub const GENERATOR_FILE: &str = "generator.py";
pub const MPS_FILE: &str = "model.mps";
pub const DATA_DIR: &str = "data";
pub const LOGS_DIR: &str = "logs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemType {
    pub major_category: String,
    pub subcategory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRef {
    pub path: String,
    pub description: String,
    #[serde(default)]
    pub schema: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    Open,
    Unknown,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "OPTIMAL",
            Status::Infeasible => "INFEASIBLE",
            Status::Unbounded => "UNBOUNDED",
            Status::Open => "OPEN",
            Status::Unknown => "UNKNOWN",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        [Status::Optimal, Status::Infeasible, Status::Unbounded, Status::Open, Status::Unknown]
            .into_iter()
            .find(|x| x.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default)]
    pub log_paths: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub problem_type: ProblemType,
    pub abstract_problem: String,
    pub parameters: BTreeMap<String, Value>,
    pub files: Vec<FileRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concrete_problem: Option<String>,
    pub mathematical_formulation: String,
    pub solver_code: String,
    pub generator_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_value: Option<f64>,
    pub verification: Verification,
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid instance.json: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: csv error: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}: no MPS size recorded and no model.mps present")]
    MissingMpsSize(PathBuf),
    #[error("{path}: missing metadata field `{field}`")]
    MissingMetadata { path: PathBuf, field: String },
    #[error("{0}: NL and data sizes are both zero")]
    ZeroDenominator(PathBuf),
    #[error("{path}: {message}")]
    InvalidMps { path: PathBuf, message: String },
    #[error("empty corpus")]
    EmptyCorpus,
}

impl SchemaError {
    pub fn code(&self) -> &'static str {
        match self {
            SchemaError::Io { .. } => "IO",
            SchemaError::Json { .. } => "INVALID_JSON",
            SchemaError::Csv { .. } => "CSV",
            SchemaError::MissingMpsSize(_) => "MISSING_MPS_SIZE",
            SchemaError::MissingMetadata { .. } => "MISSING_METADATA",
            SchemaError::ZeroDenominator(_) => "ZERO_DENOMINATOR",
            SchemaError::InvalidMps { .. } => "INVALID_MPS",
            SchemaError::EmptyCorpus => "EMPTY_CORPUS",
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SchemaError + '_ {
    move |source| SchemaError::Io { path: path.to_path_buf(), source }
}

/// Pretty JSON with a trailing newline; map keys are sorted, floats shortest round-trip.
pub fn record_to_string(record: &InstanceRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("record serializes");
    s.push('\n');
    s
}

pub fn write_record(dir: &Path, record: &InstanceRecord) -> Result<(), SchemaError> {
    let path = dir.join(INSTANCE_FILE);
    fs::write(&path, record_to_string(record)).map_err(io_err(&path))
}

pub fn load_record(dir: &Path) -> Result<InstanceRecord, SchemaError> {
    let path = dir.join(INSTANCE_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|source| SchemaError::Json { path, source })
}

/// Writes a CSV table (UTF-8, LF, comma, minimal quoting, header first).
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), SchemaError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let csv_err = |source| SchemaError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv_header(path: &Path) -> Result<Vec<String>, SchemaError> {
    let csv_err = |source| SchemaError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(csv_err)?;
    Ok(r.headers().map_err(csv_err)?.iter().map(str::to_string).collect())
}

/// Creates the directory skeleton: `data/` and an empty `logs/`.
pub fn create_layout(dir: &Path) -> Result<(), SchemaError> {
    for sub in [DATA_DIR, LOGS_DIR] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    Ok(())
}

/// Instance directories under `root`: `root` itself when it holds an
/// `instance.json`, otherwise its immediate subdirectories that do, sorted.
pub fn discover_instances(root: &Path) -> Result<Vec<PathBuf>, SchemaError> {
    if root.join(INSTANCE_FILE).is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let p = entry.map_err(io_err(root))?.path();
        if p.join(INSTANCE_FILE).is_file() {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// `n_vars + n_rows` from the metadata, else from parsing `model.mps`.
pub fn instance_size(dir: &Path, record: &InstanceRecord) -> Result<usize, SchemaError> {
    let field = |k: &str| record.metadata.get(k).and_then(Value::as_u64);
    if let (Some(v), Some(r)) = (field("n_vars"), field("n_rows")) {
        return Ok((v + r) as usize);
    }
    let path = dir.join(MPS_FILE);
    if !path.is_file() {
        return Err(SchemaError::MissingMetadata { path: dir.join(INSTANCE_FILE), field: "n_vars".into() });
    }
    let model = crate::mps::read_mps_file(&path, &Default::default())
        .map_err(|e| SchemaError::InvalidMps { path: path.clone(), message: e.to_string() })?;
    Ok(model.stats().size())
}

/// Backticked references in an NL description.
pub fn references(text: &str) -> Vec<&str> {
    text.split('`').skip(1).step_by(2).filter(|s| !s.is_empty()).collect()
}

pub fn is_file_reference(token: &str) -> bool {
    token.contains('/') || token.ends_with(".csv")
}
