//! Contradiction-driven comparison of a candidate model against a reference.
//!
//! The objective values of both models decide the verdict. A solution of the
//! looser model is then mapped into the tighter one, and the rows it violates
//! point at the offending constraint.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::mps::{evaluate_solution, EvalError, Model, ObjectiveSense, Solution, Violation};

pub const DEFAULT_REL_TOL: f64 = 1e-6;

/// Variable renaming from reference names to candidate names.
pub type NameMap = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Match,
    OverConstrained,
    UnderConstrained,
    DirectionMismatch,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Match => "MATCH",
            Verdict::OverConstrained => "OVER_CONSTRAINED",
            Verdict::UnderConstrained => "UNDER_CONSTRAINED",
            Verdict::DirectionMismatch => "DIRECTION_MISMATCH",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Anomaly {
    /// The mapped solution satisfies every row of the target model.
    AnomalyNoViolation,
    /// OVER_CONSTRAINED or DIRECTION_MISMATCH without a reference solution to map.
    NoReferenceSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosisReport {
    pub verdict: Verdict,
    pub candidate_objective: f64,
    pub reference_objective: f64,
    pub relative_deviation: f64,
    pub rel_tol: f64,
    /// Violations of the reference solution mapped into the candidate.
    pub violated_in_candidate: Option<Vec<Violation>>,
    /// Violations of the candidate solution mapped into the reference.
    pub violated_in_reference: Option<Vec<Violation>>,
    pub anomaly: Option<Anomaly>,
}

#[derive(Debug, Error, PartialEq)]
pub enum InspectError {
    #[error("candidate solution is infeasible for the candidate model ({} violations)", .0.len())]
    InfeasibleCandidateSolution(Vec<Violation>),
    #[error("reference solution is infeasible for the reference model ({} violations)", .0.len())]
    InfeasibleReferenceSolution(Vec<Violation>),
    #[error("no reference objective value: pass a reference solution or a stored optimal value")]
    MissingReferenceValue,
    #[error("name map does not cover: {}", .0.join(", "))]
    NameMapIncomplete(Vec<String>),
    #[error("name map sends several names to `{0}`")]
    NameMapNotInjective(String),
    #[error("objective value {0} is not finite")]
    NonFinite(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl InspectError {
    pub fn code(&self) -> &'static str {
        match self {
            InspectError::InfeasibleCandidateSolution(_) => "INFEASIBLE_CANDIDATE_SOLUTION",
            InspectError::InfeasibleReferenceSolution(_) => "INFEASIBLE_REFERENCE_SOLUTION",
            InspectError::MissingReferenceValue => "MISSING_REFERENCE_VALUE",
            InspectError::NameMapIncomplete(_) => "NAME_MAP_INCOMPLETE",
            InspectError::NameMapNotInjective(_) => "NAME_MAP_NOT_INJECTIVE",
            InspectError::NonFinite(_) => "NON_FINITE",
            InspectError::Eval(e) => e.code(),
        }
    }
}

/// `|a - b| / max(1, |b|)`.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Verdict from objective values alone.
pub fn classify_deviation(
    candidate: f64,
    reference: f64,
    sense: ObjectiveSense,
    rel_tol: f64,
) -> Result<Verdict, InspectError> {
    for v in [candidate, reference] {
        if !v.is_finite() {
            return Err(InspectError::NonFinite(v));
        }
    }
    if relative_deviation(candidate, reference) <= rel_tol {
        return Ok(Verdict::Match);
    }
    if relative_deviation(-candidate, reference) <= rel_tol {
        return Ok(Verdict::DirectionMismatch);
    }
    let worse = match sense {
        ObjectiveSense::Min => candidate > reference,
        ObjectiveSense::Max => candidate < reference,
    };
    Ok(if worse { Verdict::OverConstrained } else { Verdict::UnderConstrained })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappedSolution {
    pub solution: Solution,
    /// Keys the map did not cover, kept under their own names.
    pub unmapped: Vec<String>,
}

/// Renames the keys of `sol`. Keys outside `name_map` keep their name when
/// `identity_fallback` is set and fail with NAME_MAP_INCOMPLETE otherwise.
pub fn map_solution(sol: &Solution, name_map: &NameMap, identity_fallback: bool) -> Result<MappedSolution, InspectError> {
    let mut out = Solution::new();
    let mut unmapped = Vec::new();
    for (k, &v) in &sol.values {
        let target = match name_map.get(k) {
            Some(t) => t.clone(),
            None => {
                unmapped.push(k.clone());
                k.clone()
            }
        };
        if out.values.insert(target.clone(), v).is_some() {
            return Err(InspectError::NameMapNotInjective(target));
        }
    }
    if !identity_fallback && !unmapped.is_empty() {
        return Err(InspectError::NameMapIncomplete(unmapped));
    }
    Ok(MappedSolution { solution: out, unmapped })
}

/// Candidate-to-reference direction of a reference-to-candidate map.
pub fn invert_map(name_map: &NameMap) -> Result<NameMap, InspectError> {
    let mut inv = NameMap::new();
    for (k, v) in name_map {
        if inv.insert(v.clone(), k.clone()).is_some() {
            return Err(InspectError::NameMapNotInjective(v.clone()));
        }
    }
    Ok(inv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseOptions {
    pub sense: ObjectiveSense,
    pub rel_tol: f64,
    /// Stored reference optimum; takes precedence over the reference solution.
    pub reference_value: Option<f64>,
    /// Reference names to candidate names. None means identity.
    pub name_map: Option<NameMap>,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions { sense: ObjectiveSense::Min, rel_tol: DEFAULT_REL_TOL, reference_value: None, name_map: None }
    }
}

fn map_into(sol: &Solution, map: Option<&NameMap>, target: &Model) -> Result<Solution, InspectError> {
    let mapped = match map {
        Some(m) => map_solution(sol, m, false)?.solution,
        None => sol.clone(),
    };
    let missing: Vec<String> =
        mapped.values.keys().filter(|k| target.variable_index(k).is_none()).cloned().collect();
    if !missing.is_empty() {
        return Err(InspectError::NameMapIncomplete(missing));
    }
    Ok(mapped)
}

fn violations_in(model: &Model, sol: &Solution, tol: f64) -> Result<Vec<Violation>, InspectError> {
    Ok(evaluate_solution(model, sol, tol)?.violations)
}

/// Compares `candidate` with `reference`. `cand_sol` must be feasible for the
/// candidate at `rel_tol`.
pub fn diagnose(
    candidate: &Model,
    reference: &Model,
    cand_sol: &Solution,
    ref_sol: Option<&Solution>,
    opts: &DiagnoseOptions,
) -> Result<DiagnosisReport, InspectError> {
    let tol = opts.rel_tol;
    let cand_eval = evaluate_solution(candidate, cand_sol, tol)?;
    if !cand_eval.is_feasible() {
        return Err(InspectError::InfeasibleCandidateSolution(cand_eval.violations));
    }
    let reference_objective = match (opts.reference_value, ref_sol) {
        (Some(v), _) => v,
        (None, Some(s)) => {
            let e = evaluate_solution(reference, s, tol)?;
            if !e.is_feasible() {
                return Err(InspectError::InfeasibleReferenceSolution(e.violations));
            }
            e.objective
        }
        (None, None) => return Err(InspectError::MissingReferenceValue),
    };
    let candidate_objective = cand_eval.objective;
    let verdict = classify_deviation(candidate_objective, reference_objective, opts.sense, tol)?;
    let mut report = DiagnosisReport {
        verdict,
        candidate_objective,
        reference_objective,
        relative_deviation: relative_deviation(candidate_objective, reference_objective),
        rel_tol: tol,
        violated_in_candidate: None,
        violated_in_reference: None,
        anomaly: None,
    };
    match verdict {
        Verdict::Match => {}
        Verdict::OverConstrained | Verdict::DirectionMismatch => match ref_sol {
            Some(s) => {
                let mapped = map_into(s, opts.name_map.as_ref(), candidate)?;
                let v = violations_in(candidate, &mapped, tol)?;
                if v.is_empty() && verdict == Verdict::OverConstrained {
                    report.anomaly = Some(Anomaly::AnomalyNoViolation);
                }
                report.violated_in_candidate = Some(v);
            }
            None => report.anomaly = Some(Anomaly::NoReferenceSolution),
        },
        Verdict::UnderConstrained => {
            let inv = opts.name_map.as_ref().map(invert_map).transpose()?;
            let mapped = map_into(cand_sol, inv.as_ref(), reference)?;
            let v = violations_in(reference, &mapped, tol)?;
            if v.is_empty() {
                report.anomaly = Some(Anomaly::AnomalyNoViolation);
            }
            report.violated_in_reference = Some(v);
        }
    }
    Ok(report)
}

impl DiagnosisReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "verdict: {}\ncandidate objective: {}\nreference objective: {}\nrelative deviation: {:e}\n",
            self.verdict.as_str(),
            self.candidate_objective,
            self.reference_objective,
            self.relative_deviation
        );
        for (label, list) in [("violated in candidate", &self.violated_in_candidate), ("violated in reference", &self.violated_in_reference)] {
            if let Some(list) = list {
                s.push_str(&format!("{label}: {}\n", list.len()));
                for v in list {
                    s.push_str(&format!("  {} {:?} value={} bounds=[{}, {}]\n", v.name, v.kind, v.value, v.lower, v.upper));
                }
            }
        }
        if let Some(a) = self.anomaly {
            s.push_str(&format!("anomaly: {}\n", serde_json::to_value(a).expect("anomaly serializes").as_str().unwrap_or("")));
        }
        s
    }
}
