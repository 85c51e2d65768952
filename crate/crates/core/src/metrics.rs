//! Pass@N, error classes and scale-bucket aggregation over run artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use std::path::PathBuf;

use crate::mps::ModelStats;
use crate::schema::{instance_size, load_record, SchemaError, Status};

pub const DEFAULT_REL_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("non-finite objective value ({0})")]
    NonFinite(f64),
    #[error("line {line}: {message}")]
    InvalidArtifact { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::NonFinite(_) => "NON_FINITE",
            MetricsError::InvalidArtifact { .. } => "INVALID_ARTIFACT",
            MetricsError::Io(_) => "IO",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ExitStatus {
    Ok,
    Crash,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub instance_id: String,
    pub attempt: usize,
    pub exit_status: ExitStatus,
    #[serde(default)]
    pub reported_objective: Option<f64>,
    pub wall_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr_excerpt: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorClass {
    Execution,
    Modeling,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScaleBucket {
    Small,
    Medium,
    Large,
    VeryLarge,
}

impl ScaleBucket {
    pub const ALL: [ScaleBucket; 4] = [ScaleBucket::Small, ScaleBucket::Medium, ScaleBucket::Large, ScaleBucket::VeryLarge];

    pub fn as_str(self) -> &'static str {
        match self {
            ScaleBucket::Small => "SMALL",
            ScaleBucket::Medium => "MEDIUM",
            ScaleBucket::Large => "LARGE",
            ScaleBucket::VeryLarge => "VERY_LARGE",
        }
    }

    pub fn of_size(size: usize) -> ScaleBucket {
        match size {
            0..=499 => ScaleBucket::Small,
            500..=999 => ScaleBucket::Medium,
            1000..=9999 => ScaleBucket::Large,
            _ => ScaleBucket::VeryLarge,
        }
    }
}

/// Bucket on `n_vars + n_rows`.
pub fn bucket_by_scale(stats: &ModelStats) -> ScaleBucket {
    ScaleBucket::of_size(stats.size())
}

/// `|candidate - truth| <= rel_tol * max(1, |truth|)`.
pub fn compare_objective(candidate: f64, truth: f64, rel_tol: f64) -> Result<bool, MetricsError> {
    for v in [candidate, truth, rel_tol] {
        if !v.is_finite() {
            return Err(MetricsError::NonFinite(v));
        }
    }
    Ok((candidate - truth).abs() <= rel_tol * truth.abs().max(1.0))
}

fn matches(a: &RunArtifact, truth: f64, rel_tol: f64) -> bool {
    a.exit_status == ExitStatus::Ok
        && a.reported_objective.is_some_and(|c| compare_objective(c, truth, rel_tol).unwrap_or(false))
}

/// True iff one of the first `n` attempts ran OK and matched `truth`.
pub fn pass_at_n(artifacts: &[RunArtifact], truth: f64, n: usize, rel_tol: f64) -> bool {
    artifacts.iter().take(n).any(|a| matches(a, truth, rel_tol))
}

pub fn classify_error(a: &RunArtifact, truth: f64, rel_tol: f64) -> Option<ErrorClass> {
    match a.exit_status {
        ExitStatus::Crash => Some(ErrorClass::Execution),
        ExitStatus::Timeout => Some(ErrorClass::Timeout),
        ExitStatus::Ok if matches(a, truth, rel_tol) => None,
        ExitStatus::Ok => Some(ErrorClass::Modeling),
    }
}

/// Reads JSON-lines artifacts; blank lines are skipped.
pub fn read_artifacts<R: BufRead>(reader: R) -> Result<Vec<RunArtifact>, MetricsError> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| MetricsError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let a: RunArtifact = serde_json::from_str(&line)
            .map_err(|e| MetricsError::InvalidArtifact { line: n + 1, message: e.to_string() })?;
        if a.exit_status == ExitStatus::Ok && a.reported_objective.is_none() {
            return Err(MetricsError::InvalidArtifact { line: n + 1, message: "OK run without reported_objective".into() });
        }
        out.push(a);
    }
    Ok(out)
}

/// Groups artifacts by instance, each list sorted by attempt index.
pub fn group_by_instance(artifacts: Vec<RunArtifact>) -> BTreeMap<String, Vec<RunArtifact>> {
    let mut map: BTreeMap<String, Vec<RunArtifact>> = BTreeMap::new();
    for a in artifacts {
        map.entry(a.instance_id.clone()).or_default().push(a);
    }
    for v in map.values_mut() {
        v.sort_by_key(|a| a.attempt);
    }
    map
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceOutcome {
    pub id: String,
    pub bucket: ScaleBucket,
    pub status: Status,
    pub truth: Option<f64>,
    pub artifacts: Vec<RunArtifact>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSet {
    /// Sorted by instance id.
    pub outcomes: Vec<InstanceOutcome>,
    /// Artifact instance ids with no matching instance directory.
    pub orphan_ids: Vec<String>,
}

/// Joins run artifacts with the instance records in `dirs`. Records are read
/// in parallel; an instance without artifacts gets an empty attempt list.
pub fn load_outcomes(dirs: &[PathBuf], artifacts: Vec<RunArtifact>) -> Result<OutcomeSet, SchemaError> {
    let records = dirs
        .par_iter()
        .map(|d| {
            let r = load_record(d)?;
            let size = instance_size(d, &r)?;
            Ok((r, size))
        })
        .collect::<Result<Vec<_>, SchemaError>>()?;
    let mut by_id = group_by_instance(artifacts);
    let mut outcomes: Vec<InstanceOutcome> = records
        .into_iter()
        .map(|(r, size)| InstanceOutcome {
            artifacts: by_id.remove(&r.id).unwrap_or_default(),
            bucket: ScaleBucket::of_size(size),
            status: r.verification.status,
            truth: r.optimal_value,
            id: r.id,
        })
        .collect();
    outcomes.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(OutcomeSet { outcomes, orphan_ids: by_id.into_keys().collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketRow {
    pub bucket: String,
    pub n_instances: usize,
    pub n_passed: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsTable {
    pub n: usize,
    pub rel_tol: f64,
    pub buckets: Vec<BucketRow>,
    pub overall: BucketRow,
    pub n_excluded: usize,
    pub n_attempts: usize,
    pub n_ok_attempts: usize,
    /// Instances whose first attempt exited OK, over evaluated instances.
    pub executability: Option<f64>,
    pub n_failed: usize,
    pub error_counts: BTreeMap<ErrorClass, usize>,
    /// Shares normalized over failed instances; empty without failures.
    pub error_shares: BTreeMap<ErrorClass, f64>,
}

fn row(label: &str, n: usize, passed: usize) -> BucketRow {
    BucketRow {
        bucket: label.into(),
        n_instances: n,
        n_passed: passed,
        accuracy: (n > 0).then(|| passed as f64 / n as f64),
    }
}

struct Scored {
    bucket: ScaleBucket,
    passed: bool,
    first_ok: bool,
    attempts: usize,
    ok_attempts: usize,
    error: Option<ErrorClass>,
}

/// Aggregates Pass@N per bucket over the first `n` attempts of each
/// instance. Instances that are INFEASIBLE, OPEN or lack a reference value
/// are excluded and counted in `n_excluded`.
pub fn aggregate(outcomes: &[InstanceOutcome], n: usize, rel_tol: f64) -> MetricsTable {
    let evaluated: Vec<&InstanceOutcome> = outcomes
        .iter()
        .filter(|o| !matches!(o.status, Status::Infeasible | Status::Open) && o.truth.is_some())
        .collect();
    let scored: Vec<Scored> = evaluated
        .par_iter()
        .map(|o| {
            let truth = o.truth.expect("filtered");
            let first = &o.artifacts[..n.min(o.artifacts.len())];
            let passed = pass_at_n(first, truth, n, rel_tol);
            Scored {
                bucket: o.bucket,
                passed,
                first_ok: first.first().is_some_and(|a| a.exit_status == ExitStatus::Ok),
                attempts: first.len(),
                ok_attempts: first.iter().filter(|a| a.exit_status == ExitStatus::Ok).count(),
                error: if passed { None } else { first.first().and_then(|a| classify_error(a, truth, rel_tol)) },
            }
        })
        .collect();
    let buckets = ScaleBucket::ALL
        .iter()
        .map(|&b| {
            let in_b: Vec<&Scored> = scored.iter().filter(|s| s.bucket == b).collect();
            row(b.as_str(), in_b.len(), in_b.iter().filter(|s| s.passed).count())
        })
        .collect();
    let n_passed = scored.iter().filter(|s| s.passed).count();
    let mut error_counts = BTreeMap::new();
    for e in scored.iter().filter_map(|s| s.error) {
        *error_counts.entry(e).or_insert(0) += 1;
    }
    let n_failed = scored.len() - n_passed;
    let error_shares = if n_failed == 0 {
        BTreeMap::new()
    } else {
        [ErrorClass::Execution, ErrorClass::Modeling, ErrorClass::Timeout]
            .into_iter()
            .map(|e| (e, *error_counts.get(&e).unwrap_or(&0) as f64 / n_failed as f64))
            .collect()
    };
    MetricsTable {
        n,
        rel_tol,
        buckets,
        overall: row("ALL", scored.len(), n_passed),
        n_excluded: outcomes.len() - evaluated.len(),
        n_attempts: scored.iter().map(|s| s.attempts).sum(),
        n_ok_attempts: scored.iter().map(|s| s.ok_attempts).sum(),
        executability: (!scored.is_empty())
            .then(|| scored.iter().filter(|s| s.first_ok).count() as f64 / scored.len() as f64),
        n_failed,
        error_counts,
        error_shares,
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{:.1}%", 100.0 * x))
}

impl MetricsTable {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pass@{} (rel_tol {:e})", self.n, self.rel_tol);
        let _ = writeln!(s, "{:<12} {:>9} {:>7} {:>9}", "bucket", "instances", "passed", "accuracy");
        for r in self.buckets.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(s, "{:<12} {:>9} {:>7} {:>9}", r.bucket, r.n_instances, r.n_passed, pct(r.accuracy));
        }
        let _ = writeln!(s, "excluded     {}", self.n_excluded);
        let _ = writeln!(
            s,
            "executability {} ({}/{} attempts OK)",
            pct(self.executability),
            self.n_ok_attempts,
            self.n_attempts
        );
        let _ = writeln!(s, "failed       {}", self.n_failed);
        for (e, share) in &self.error_shares {
            let _ = writeln!(s, "  {:<10} {:>4} {:>7}", format!("{e:?}").to_uppercase(), self.error_counts.get(e).unwrap_or(&0), pct(Some(*share)));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn art(id: &str, attempt: usize, status: ExitStatus, obj: Option<f64>) -> RunArtifact {
        RunArtifact {
            instance_id: id.into(),
            attempt,
            exit_status: status,
            reported_objective: obj,
            wall_seconds: 1.0,
            stderr_excerpt: None,
        }
    }

    #[test]
    fn compare_examples() {
        assert!(compare_objective(345.0000001, 345.0, DEFAULT_REL_TOL).unwrap());
        assert!(!compare_objective(310.0, 345.0, DEFAULT_REL_TOL).unwrap());
        assert!(compare_objective(0.0, 0.0, DEFAULT_REL_TOL).unwrap());
        assert_eq!(compare_objective(f64::NAN, 0.0, 1e-6).unwrap_err().code(), "NON_FINITE");
    }

    #[test]
    fn buckets_at_boundaries() {
        let cases = [(0, "SMALL"), (499, "SMALL"), (500, "MEDIUM"), (999, "MEDIUM"), (1000, "LARGE"), (9999, "LARGE"), (10000, "VERY_LARGE")];
        for (size, want) in cases {
            assert_eq!(ScaleBucket::of_size(size).as_str(), want);
        }
        let s = ModelStats { n_vars: 400, n_rows: 100, ..Default::default() };
        assert_eq!(bucket_by_scale(&s), ScaleBucket::Medium);
    }

    #[test]
    fn pass_at_eight_with_one_match() {
        let mut a: Vec<_> = (0..7).map(|i| art("p", i, ExitStatus::Crash, None)).collect();
        a.push(art("p", 7, ExitStatus::Ok, Some(345.0)));
        assert!(pass_at_n(&a, 345.0, 8, DEFAULT_REL_TOL));
        assert!(!pass_at_n(&a, 345.0, 7, DEFAULT_REL_TOL));
        let wrong: Vec<_> = (0..8).map(|i| art("p", i, ExitStatus::Ok, Some(310.0))).collect();
        assert!(!pass_at_n(&wrong, 345.0, 8, DEFAULT_REL_TOL));
    }

    #[test]
    fn error_classes() {
        let t = 345.0;
        assert_eq!(classify_error(&art("a", 0, ExitStatus::Crash, None), t, 1e-6), Some(ErrorClass::Execution));
        assert_eq!(classify_error(&art("a", 0, ExitStatus::Ok, Some(310.0)), t, 1e-6), Some(ErrorClass::Modeling));
        assert_eq!(classify_error(&art("a", 0, ExitStatus::Timeout, None), t, 1e-6), Some(ErrorClass::Timeout));
        assert_eq!(classify_error(&art("a", 0, ExitStatus::Ok, Some(t)), t, 1e-6), None);
    }

    #[test]
    fn aggregate_shares_and_exclusions() {
        let mk = |id: &str, status: Status, a: RunArtifact| InstanceOutcome {
            id: id.into(),
            bucket: ScaleBucket::Small,
            status,
            truth: Some(1.0),
            artifacts: vec![a],
        };
        let outcomes = vec![
            mk("a", Status::Optimal, art("a", 0, ExitStatus::Crash, None)),
            mk("b", Status::Optimal, art("b", 0, ExitStatus::Crash, None)),
            mk("c", Status::Optimal, art("c", 0, ExitStatus::Ok, Some(2.0))),
            mk("d", Status::Optimal, art("d", 0, ExitStatus::Ok, Some(3.0))),
            mk("e", Status::Optimal, art("e", 0, ExitStatus::Ok, Some(1.0))),
            mk("f", Status::Infeasible, art("f", 0, ExitStatus::Ok, Some(1.0))),
        ];
        let t = aggregate(&outcomes, 1, DEFAULT_REL_TOL);
        assert_eq!(t.n_excluded, 1);
        assert_eq!(t.overall.n_instances, 5);
        assert_eq!(t.overall.accuracy, Some(0.2));
        assert_eq!(t.error_shares[&ErrorClass::Execution], 0.5);
        assert_eq!(t.error_shares[&ErrorClass::Modeling], 0.5);
        assert_eq!(t.error_shares[&ErrorClass::Timeout], 0.0);
        assert_eq!(t.executability, Some(0.6));
        assert!(t.to_text().contains("SMALL"));
    }

    #[test]
    fn jsonl_round_trip_and_validation() {
        let a = art("x", 0, ExitStatus::Ok, Some(1.5));
        let text = format!("{}\n\n{}\n", serde_json::to_string(&a).unwrap(), serde_json::to_string(&a).unwrap());
        assert_eq!(read_artifacts(text.as_bytes()).unwrap(), vec![a.clone(), a]);
        let bad = r#"{"instance_id":"x","attempt":0,"exit_status":"OK","wall_seconds":1}"#;
        assert_eq!(read_artifacts(bad.as_bytes()).unwrap_err().code(), "INVALID_ARTIFACT");
    }
}
