use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::{is_file_reference, read_csv_header, references, Status, INSTANCE_FILE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SchemaViolation {
    MissingField { field: String },
    InvalidField { field: String, message: String },
    InvalidJson { message: String },
    MissingFile { path: String },
    ColumnMismatch { path: String, expected: Vec<String>, found: Vec<String> },
    EmptySchema { path: String },
    EmptyDescription { path: String },
    UnresolvedReference { name: String },
    DuplicateFile { path: String },
    StatusValueInconsistent { status: String, has_value: bool },
}

impl SchemaViolation {
    pub fn code(&self) -> &'static str {
        match self {
            SchemaViolation::MissingField { .. } => "MISSING_FIELD",
            SchemaViolation::InvalidField { .. } => "INVALID_FIELD",
            SchemaViolation::InvalidJson { .. } => "INVALID_JSON",
            SchemaViolation::MissingFile { .. } => "MISSING_FILE",
            SchemaViolation::ColumnMismatch { .. } => "COLUMN_MISMATCH",
            SchemaViolation::EmptySchema { .. } => "EMPTY_SCHEMA",
            SchemaViolation::EmptyDescription { .. } => "EMPTY_DESCRIPTION",
            SchemaViolation::UnresolvedReference { .. } => "UNRESOLVED_REFERENCE",
            SchemaViolation::DuplicateFile { .. } => "DUPLICATE_FILE",
            SchemaViolation::StatusValueInconsistent { .. } => "STATUS_VALUE_INCONSISTENT",
        }
    }
}

impl std::fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemaViolation::MissingField { field } => write!(f, "missing field `{field}`"),
            SchemaViolation::InvalidField { field, message } => write!(f, "field `{field}`: {message}"),
            SchemaViolation::InvalidJson { message } => write!(f, "instance.json: {message}"),
            SchemaViolation::MissingFile { path } => write!(f, "missing file {path}"),
            SchemaViolation::ColumnMismatch { path, expected, found } => {
                write!(f, "{path}: header [{}] differs from schema [{}]", found.join(","), expected.join(","))
            }
            SchemaViolation::EmptySchema { path } => write!(f, "{path}: empty schema"),
            SchemaViolation::EmptyDescription { path } => write!(f, "{path}: empty description"),
            SchemaViolation::UnresolvedReference { name } => write!(f, "reference `{name}` resolves to no file or parameter"),
            SchemaViolation::DuplicateFile { path } => write!(f, "{path} listed twice"),
            SchemaViolation::StatusValueInconsistent { status, has_value } => {
                write!(f, "status {status} with optimal_value {}", if *has_value { "set" } else { "missing" })
            }
        }
    }
}

const REQUIRED: &[&str] = &[
    "id",
    "problem_type",
    "abstract_problem",
    "parameters",
    "files",
    "mathematical_formulation",
    "solver_code",
    "generator_code",
    "verification",
    "metadata",
];

struct Checker<'a> {
    dir: &'a Path,
    out: Vec<SchemaViolation>,
}

impl Checker<'_> {
    fn missing(&mut self, field: &str) {
        self.out.push(SchemaViolation::MissingField { field: field.into() });
    }

    fn invalid(&mut self, field: &str, message: &str) {
        self.out.push(SchemaViolation::InvalidField { field: field.into(), message: message.into() });
    }

    fn string<'v>(&mut self, obj: &'v serde_json::Map<String, Value>, key: &str, path: &str) -> Option<&'v str> {
        match obj.get(key) {
            None => {
                self.missing(path);
                None
            }
            Some(Value::String(s)) => Some(s),
            Some(_) => {
                self.invalid(path, "expected a string");
                None
            }
        }
    }

    fn existing_path(&mut self, rel: &str) -> bool {
        let ok = !rel.is_empty() && !Path::new(rel).is_absolute() && self.dir.join(rel).is_file();
        if !ok {
            self.out.push(SchemaViolation::MissingFile { path: rel.into() });
        }
        ok
    }
}

/// Every schema violation of the instance directory; empty when compliant.
pub fn validate_instance(dir: &Path) -> Vec<SchemaViolation> {
    let mut c = Checker { dir, out: Vec::new() };
    let path = dir.join(INSTANCE_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(_) => {
            c.out.push(SchemaViolation::MissingFile { path: INSTANCE_FILE.into() });
            return c.out;
        }
    };
    let root: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            c.out.push(SchemaViolation::InvalidJson { message: e.to_string() });
            return c.out;
        }
    };
    let Some(obj) = root.as_object() else {
        c.out.push(SchemaViolation::InvalidJson { message: "top level is not an object".into() });
        return c.out;
    };
    for f in REQUIRED {
        if !obj.contains_key(*f) {
            c.missing(f);
        }
    }
    if let Some(id) = obj.get("id") {
        if id.as_str().map_or(true, str::is_empty) {
            c.invalid("id", "expected a nonempty string");
        }
    }
    match obj.get("problem_type") {
        Some(Value::Object(pt)) => {
            c.string(pt, "major_category", "problem_type.major_category");
            c.string(pt, "subcategory", "problem_type.subcategory");
        }
        Some(_) => c.invalid("problem_type", "expected an object"),
        None => {}
    }
    let mut params = BTreeSet::new();
    match obj.get("parameters") {
        Some(Value::Object(p)) => {
            for (k, v) in p {
                if v.is_object() || v.is_array() || v.is_null() {
                    c.invalid(&format!("parameters.{k}"), "expected a scalar");
                }
                params.insert(k.clone());
            }
        }
        Some(_) => c.invalid("parameters", "expected an object"),
        None => {}
    }
    let mut file_paths = BTreeSet::new();
    match obj.get("files") {
        Some(Value::Array(files)) => {
            for (n, f) in files.iter().enumerate() {
                let Some(f) = f.as_object() else {
                    c.invalid(&format!("files[{n}]"), "expected an object");
                    continue;
                };
                let Some(p) = c.string(f, "path", &format!("files[{n}].path")) else { continue };
                if !file_paths.insert(p.to_string()) {
                    c.out.push(SchemaViolation::DuplicateFile { path: p.into() });
                }
                match c.string(f, "description", &format!("files[{n}].description")) {
                    Some(d) if d.trim().is_empty() => c.out.push(SchemaViolation::EmptyDescription { path: p.into() }),
                    _ => {}
                }
                let schema: Vec<String> = match f.get("schema") {
                    Some(Value::Array(cols)) => cols.iter().filter_map(|x| x.as_str().map(str::to_string)).collect(),
                    Some(_) => {
                        c.invalid(&format!("files[{n}].schema"), "expected a list of column names");
                        vec![]
                    }
                    None => vec![],
                };
                let tabular = p.ends_with(".csv");
                if tabular && schema.is_empty() {
                    c.out.push(SchemaViolation::EmptySchema { path: p.into() });
                }
                if c.existing_path(p) && tabular && !schema.is_empty() {
                    match read_csv_header(&dir.join(p)) {
                        Ok(found) if found == schema => {}
                        Ok(found) => c.out.push(SchemaViolation::ColumnMismatch { path: p.into(), expected: schema, found }),
                        Err(_) => c.out.push(SchemaViolation::ColumnMismatch { path: p.into(), expected: schema, found: vec![] }),
                    }
                }
            }
        }
        Some(_) => c.invalid("files", "expected a list"),
        None => {}
    }
    for key in ["mathematical_formulation", "solver_code", "generator_code"] {
        if let Some(v) = obj.get(key) {
            match v.as_str() {
                Some(p) => {
                    c.existing_path(p);
                }
                None => c.invalid(key, "expected a path"),
            }
        }
    }
    if let Some(v) = obj.get("abstract_problem") {
        match v.as_str() {
            Some(text) => {
                for r in references(text) {
                    let ok = if is_file_reference(r) { file_paths.contains(r) } else { params.contains(r) };
                    if !ok {
                        c.out.push(SchemaViolation::UnresolvedReference { name: r.into() });
                    }
                }
            }
            None => c.invalid("abstract_problem", "expected a string"),
        }
    }
    if let Some(v) = obj.get("concrete_problem") {
        if !v.is_string() && !v.is_null() {
            c.invalid("concrete_problem", "expected a string");
        }
    }
    let value = obj.get("optimal_value").filter(|v| !v.is_null());
    if let Some(v) = value {
        if !v.is_number() {
            c.invalid("optimal_value", "expected a number");
        }
    }
    match obj.get("verification") {
        Some(Value::Object(ver)) => {
            if let Some(s) = c.string(ver, "status", "verification.status") {
                match Status::parse(s) {
                    None => c.invalid("verification.status", "unknown status"),
                    Some(st) => {
                        let has = value.is_some();
                        let bad = match st {
                            Status::Optimal => !has,
                            Status::Infeasible | Status::Open => has,
                            _ => false,
                        };
                        if bad {
                            c.out.push(SchemaViolation::StatusValueInconsistent { status: s.into(), has_value: has });
                        }
                    }
                }
            }
            for key in ["runtime", "gap"] {
                if ver.get(key).is_some_and(|v| !v.is_number() && !v.is_null()) {
                    c.invalid(&format!("verification.{key}"), "expected a number");
                }
            }
            match ver.get("log_paths") {
                Some(Value::Array(logs)) => {
                    for l in logs {
                        match l.as_str() {
                            Some(p) => {
                                c.existing_path(p);
                            }
                            None => c.invalid("verification.log_paths", "expected paths"),
                        }
                    }
                }
                Some(_) => c.invalid("verification.log_paths", "expected a list"),
                None => c.missing("verification.log_paths"),
            }
        }
        Some(_) => c.invalid("verification", "expected an object"),
        None => {}
    }
    if obj.get("metadata").is_some_and(|m| !m.is_object()) {
        c.invalid("metadata", "expected an object");
    }
    c.out
}
