//! JSON report types emitted by the command line tool.
//!
//! The schema is versioned via `schema_version`; polynomials and elements
//! are serialized in the textual syntax of the definition format. All maps
//! are ordered, so identical inputs yield byte-identical reports.

use crate::conformal::{CapStatus, ConformalAlgebra};
use crate::modify::{ModificationTrace};
use crate::module::{format_element, Submodule};
use crate::repweight::{Decomposition, LieFiltration};
use crate::vertex::{RootDecomposition, VertexAxiomReport};
use serde::Serialize;
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub command: String,
    pub name: String,
    pub kind: String,
    pub warnings: Vec<String>,
    pub passes: bool,
    pub violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locality_orders: Option<BTreeMap<String, i64>>,
}

#[derive(Serialize)]
pub struct ClassifyReport {
    pub schema_version: u32,
    pub command: String,
    pub name: String,
    pub warnings: Vec<String>,
    pub axioms_verified: bool,
    pub solvable: bool,
    pub nilpotent: bool,
    pub abelian: bool,
    pub derived_length: Option<usize>,
    pub stabilized_ideal_rank: usize,
    pub stabilized_ideal: Vec<String>,
    pub centre: Vec<String>,
    pub centre_status: String,
}

#[derive(Serialize)]
pub struct SeriesReport {
    pub schema_version: u32,
    pub command: String,
    pub name: String,
    pub warnings: Vec<String>,
    pub axioms_verified: bool,
    pub derived_series: Vec<Vec<String>>,
    pub central_series: Vec<Vec<String>>,
    pub stabilized_ideal: Vec<String>,
}

#[derive(Serialize)]
pub struct DecomposeReport {
    pub schema_version: u32,
    pub command: String,
    pub name: String,
    pub warnings: Vec<String>,
    pub axioms_verified: bool,
    pub element: String,
    pub modified: String,
    pub modification_steps: Vec<StepReport>,
    pub weights: BTreeMap<String, Vec<String>>,
    pub covers: bool,
    pub u_part: Vec<String>,
    pub n_part: Vec<String>,
    pub singularity: usize,
    pub filtration_weights: Vec<String>,
    pub status: String,
}

#[derive(Serialize)]
pub struct ModifyReport {
    pub schema_version: u32,
    pub command: String,
    pub name: String,
    pub warnings: Vec<String>,
    pub axioms_verified: bool,
    pub original: String,
    pub result: String,
    pub steps: Vec<StepReport>,
    pub singularity: usize,
}

#[derive(Serialize)]
pub struct StepReport {
    pub case: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lift_correction: Option<String>,
}

#[derive(Serialize)]
pub struct RootReport {
    pub schema_version: u32,
    pub command: String,
    pub name: String,
    pub warnings: Vec<String>,
    pub vertex_axioms_pass: bool,
    pub candidate: String,
    pub modified: String,
    pub singularity: usize,
    pub u_part: Vec<String>,
    pub n_part: Vec<String>,
}

#[derive(Serialize)]
pub struct ExampleReport {
    pub schema_version: u32,
    pub command: String,
    pub name: String,
    pub definition: String,
}

pub fn submodule_generators(s: &Submodule) -> Vec<String> {
    s.generators().iter().map(|g| g.to_string()).collect()
}

pub fn cap_status(s: CapStatus) -> String {
    match s {
        CapStatus::HeuristicStable => "heuristic-stable".to_string(),
        CapStatus::CapReached => "cap-reached-lower-bound".to_string(),
    }
}

pub fn steps(trace: &ModificationTrace) -> Vec<StepReport> {
    trace
        .steps
        .iter()
        .map(|s| StepReport {
            case: s.case.tag().to_string(),
            correction: s.correction.as_ref().map(|c| c.to_string()),
            lift_correction: s.lift_correction.as_ref().map(|c| c.to_string()),
        })
        .collect()
}

pub fn weight_parts(dec: &Decomposition) -> BTreeMap<String, Vec<String>> {
    dec.parts
        .iter()
        .map(|(w, s)| (w.to_string(), submodule_generators(s)))
        .collect()
}

pub fn filtration_weights(f: &LieFiltration) -> Vec<String> {
    f.weights().iter().map(|w| w.to_string()).collect()
}

pub fn axiom_violations(algebra: &ConformalAlgebra) -> Vec<String> {
    let report = algebra.check_axioms();
    let carrier = algebra.carrier();
    let mut out = vec![];
    for (rel, side, g) in &report.relation_violations {
        out.push(format!(
            "bracket ill-defined against relation {rel} ({side} slot, generator {})",
            carrier.label(*g)
        ));
    }
    for (i, j) in &report.skew_violations {
        out.push(format!(
            "skew-symmetry fails for ({}, {})",
            carrier.label(*i),
            carrier.label(*j)
        ));
    }
    for (i, j, k) in &report.jacobi_violations {
        out.push(format!(
            "Jacobi identity fails for ({}, {}, {})",
            carrier.label(*i),
            carrier.label(*j),
            carrier.label(*k)
        ));
    }
    out
}

pub fn vertex_violations(report: &VertexAxiomReport) -> Vec<String> {
    report
        .failures
        .iter()
        .map(|(axiom, detail)| format!("{axiom}: {detail}"))
        .collect()
}

pub fn locality_orders(report: &VertexAxiomReport) -> BTreeMap<String, i64> {
    report
        .locality_orders
        .iter()
        .map(|((a, b), n)| (format!("{a},{b}"), *n))
        .collect()
}

pub fn root_report(name: &str, warnings: Vec<String>, axioms_pass: bool, dec: &RootDecomposition) -> RootReport {
    RootReport {
        schema_version: SCHEMA_VERSION,
        command: "decompose".to_string(),
        name: name.to_string(),
        warnings,
        vertex_axioms_pass: axioms_pass,
        candidate: dec.candidate.to_string(),
        modified: dec.trace.result.to_string(),
        singularity: dec.singularity,
        u_part: submodule_generators(&dec.u_part),
        n_part: submodule_generators(&dec.n_part),
    }
}

pub fn element_string(coords: &[crate::poly::RatPoly], labels: &[String]) -> String {
    format_element(coords, labels)
}

use crate::conformal::CapConfig;
use crate::error::Result;
use crate::modify::{modify, ModifyConfig};
use crate::repweight::LambdaAction;
use crate::textio;
use crate::vertex::{RootConfig, VertexAlgebra};
use std::sync::Arc;

pub fn build_check_conformal(
    name: &str,
    warnings: &[String],
    algebra: &ConformalAlgebra,
) -> CheckReport {
    let violations = axiom_violations(algebra);
    CheckReport {
        schema_version: SCHEMA_VERSION,
        command: "check".into(),
        name: name.to_string(),
        kind: "conformal".into(),
        warnings: warnings.to_vec(),
        passes: violations.is_empty(),
        violations,
        locality_orders: None,
    }
}

pub fn build_check_vertex(
    name: &str,
    warnings: &[String],
    algebra: &VertexAlgebra,
    truncation: i64,
) -> Result<CheckReport> {
    let check = algebra.check_vertex_axioms(truncation)?;
    let violations = vertex_violations(&check);
    Ok(CheckReport {
        schema_version: SCHEMA_VERSION,
        command: "check".into(),
        name: name.to_string(),
        kind: "vertex".into(),
        warnings: warnings.to_vec(),
        passes: violations.is_empty(),
        violations,
        locality_orders: Some(locality_orders(&check)),
    })
}

pub fn build_classify(
    name: &str,
    warnings: &[String],
    algebra: &ConformalAlgebra,
    cap: CapConfig,
) -> ClassifyReport {
    let (centre, status) = algebra.centre(cap);
    let stabilized = algebra.stabilized_ideal();
    ClassifyReport {
        schema_version: SCHEMA_VERSION,
        command: "classify".into(),
        name: name.to_string(),
        warnings: warnings.to_vec(),
        axioms_verified: algebra.check_axioms().passes(),
        solvable: algebra.is_solvable(),
        nilpotent: algebra.is_nilpotent(),
        abelian: algebra.is_abelian(),
        derived_length: algebra.derived_length(),
        stabilized_ideal_rank: stabilized.module_rank(),
        stabilized_ideal: submodule_generators(&stabilized),
        centre: submodule_generators(&centre),
        centre_status: cap_status(status),
    }
}

pub fn build_series(name: &str, warnings: &[String], algebra: &ConformalAlgebra) -> SeriesReport {
    SeriesReport {
        schema_version: SCHEMA_VERSION,
        command: "series".into(),
        name: name.to_string(),
        warnings: warnings.to_vec(),
        axioms_verified: algebra.check_axioms().passes(),
        derived_series: algebra
            .derived_series()
            .iter()
            .map(submodule_generators)
            .collect(),
        central_series: algebra
            .central_series()
            .iter()
            .map(submodule_generators)
            .collect(),
        stabilized_ideal: submodule_generators(&algebra.stabilized_ideal()),
    }
}

pub fn build_modify(
    name: &str,
    warnings: &[String],
    algebra: Arc<ConformalAlgebra>,
    element: &str,
    cap: CapConfig,
    seed: u64,
) -> Result<ModifyReport> {
    let verified = algebra.check_axioms().passes();
    let a = textio::parse_element(element, algebra.carrier())?;
    let action = LambdaAction::adjoint(algebra, a)?;
    let trace = modify(&action, ModifyConfig { cap, seed })?;
    let new_action = action.with_element(trace.result.clone())?;
    Ok(ModifyReport {
        schema_version: SCHEMA_VERSION,
        command: "modify".into(),
        name: name.to_string(),
        warnings: warnings.to_vec(),
        axioms_verified: verified,
        original: trace.original.to_string(),
        result: trace.result.to_string(),
        steps: steps(&trace),
        singularity: new_action.singularity(cap)?,
    })
}

/// Adjoint decomposition pipeline: modify the element when its image is
/// not already nilpotent, then decompose, reporting the U/N split.
pub fn build_decompose(
    name: &str,
    warnings: &[String],
    algebra: Arc<ConformalAlgebra>,
    element: &str,
    cap: CapConfig,
    seed: u64,
) -> Result<DecomposeReport> {
    let verified = algebra.check_axioms().passes();
    let a = textio::parse_element(element, algebra.carrier())?;
    let action = LambdaAction::adjoint(algebra, a.clone())?;
    let trace = if action.image_is_nilpotent(cap)? {
        ModificationTrace { original: a.clone(), result: a.clone(), steps: vec![] }
    } else {
        modify(&action, ModifyConfig { cap, seed })?
    };
    let new_action = action.with_element(trace.result.clone())?;
    let dec = new_action.decompose(cap)?;
    let (filt, _) = new_action.lie_filtration(cap)?;
    let u_part = dec
        .parts
        .iter()
        .find(|(w, _)| w.is_zero())
        .map(|(_, s)| submodule_generators(s))
        .unwrap_or_default();
    let n_part = submodule_generators(&dec.nonzero_weight_sum(new_action.target()));
    Ok(DecomposeReport {
        schema_version: SCHEMA_VERSION,
        command: "decompose".into(),
        name: name.to_string(),
        warnings: warnings.to_vec(),
        axioms_verified: verified,
        element: a.to_string(),
        modified: trace.result.to_string(),
        modification_steps: steps(&trace),
        weights: weight_parts(&dec),
        covers: dec.covers,
        u_part,
        n_part,
        singularity: new_action.singularity(cap)?,
        filtration_weights: filtration_weights(&filt),
        status: cap_status(dec.status),
    })
}

pub fn build_root(
    name: &str,
    warnings: &[String],
    algebra: &VertexAlgebra,
    cfg: RootConfig,
) -> Result<RootReport> {
    let check = algebra.check_vertex_axioms(cfg.truncation)?;
    let dec = algebra.root_space_decomposition(cfg)?;
    Ok(root_report(name, warnings.to_vec(), check.passes(), &dec))
}
