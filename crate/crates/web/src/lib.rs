//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string or an error message; the page renders it.

use ncup::algebra::{AlgebraSignature, C64};
use ncup::explorer::{minimize_margin, SearchSpec};
use ncup::hilbert_module::{ModuleElement, State};
use ncup::instance::to_canonical_json;
use ncup::morphism::Morphism;
use ncup::tolerance::Tolerances;
use ncup::verifier::{fuzz, verify_instance, Evaluation, StatementId};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn pauli(name: &str) -> Result<Morphism, String> {
    let (z, one, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    let rows: [[C64; 2]; 2] = match name.trim().to_ascii_lowercase().as_str() {
        "x" => [[z, one], [one, z]],
        "y" => [[z, -i], [i, z]],
        "z" => [[one, z], [z, -one]],
        other => return Err(format!("unknown Pauli operator {other:?}; use x, y or z")),
    };
    Morphism::from_scalar_matrix(&[&rows[0], &rows[1]]).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct RowView {
    statement: String,
    status: &'static str,
    margin: Option<f64>,
    detail: String,
}

#[derive(Serialize)]
struct BlochView {
    delta_a: f64,
    delta_b: f64,
    product: f64,
    commutator_bound: f64,
    rows: Vec<RowView>,
}

/// Margins of every statement for two Pauli operators at the Bloch-sphere
/// state `(cos θ/2, e^{iφ} sin θ/2)`.
#[wasm_bindgen]
pub fn bloch_margins(a: &str, b: &str, theta: f64, phi: f64) -> Result<String, String> {
    let (a, b) = (pauli(a)?, pauli(b)?);
    let s = AlgebraSignature::scalar();
    let entries = [
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ];
    let x = ModuleElement::new(
        s.clone(),
        entries.iter().map(|&c| ncup::algebra::AlgebraElement::scalar(&s, c)).collect(),
    )
    .map_err(|e| e.to_string())?;
    let x = State::from_normalized(x, 1e-12).map_err(|e| e.to_string())?;
    let report = verify_instance(&a, &b, &x, &Tolerances::default()).map_err(|e| e.to_string())?;
    let rows = report
        .rows
        .iter()
        .map(|r| {
            let (status, detail) = match (&r.evaluation, r.passed()) {
                (Evaluation::NotApplicable { reason }, _) => ("n/a", reason.clone()),
                (Evaluation::Failed { reason, .. }, _) => ("failed", reason.clone()),
                (Evaluation::Evaluated { links, .. }, Some(true)) => ("pass", format!("{} links", links.len())),
                (Evaluation::Evaluated { .. }, _) => ("fail", String::new()),
            };
            RowView {
                statement: r.statement.label().into(),
                status,
                margin: r.margin(),
                detail,
            }
        })
        .collect();
    let view = BlochView {
        delta_a: report.delta_a,
        delta_b: report.delta_b,
        product: report.delta_a * report.delta_b,
        commutator_bound: report.terms.c_term.operator_norm() / 2.0,
        rows,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct FuzzRowView {
    statement: String,
    evaluated: usize,
    not_applicable: usize,
    violations: usize,
    failures: usize,
    identity_failures: usize,
    min_margin: Option<f64>,
}

#[derive(Serialize)]
struct FuzzView {
    signature: String,
    rank: usize,
    count: usize,
    seed: u64,
    digest: String,
    rows: Vec<FuzzRowView>,
}

/// Seeded fuzz sweep, summarized per statement.
#[wasm_bindgen]
pub fn fuzz_summary(signature: &str, rank: usize, count: usize, seed: u64) -> Result<String, String> {
    let s = AlgebraSignature::parse_csv(signature).map_err(|e| e.to_string())?;
    if count > 5000 {
        return Err("count is capped at 5000 in the browser".into());
    }
    let report = fuzz(&s, rank, count, seed, &Tolerances::default()).map_err(|e| e.to_string())?;
    let view = FuzzView {
        signature: s.to_string(),
        rank,
        count,
        seed,
        digest: report.digest.clone(),
        rows: report
            .statements
            .iter()
            .map(|a| FuzzRowView {
                statement: a.statement.label().into(),
                evaluated: a.evaluated,
                not_applicable: a.not_applicable,
                violations: a.violations,
                failures: a.failed_evaluations,
                identity_failures: a.identity_failures,
                min_margin: a.min_margin,
            })
            .collect(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Joint Nelder–Mead search on one statement; returns the full search result.
#[wasm_bindgen]
pub fn explore(statement: &str, signature: &str, rank: usize, iterations: usize, restarts: usize, seed: u64) -> Result<String, String> {
    let id: StatementId = statement.parse().map_err(|e: ncup::error::Error| e.to_string())?;
    let s = AlgebraSignature::parse_csv(signature).map_err(|e| e.to_string())?;
    if iterations.saturating_mul(restarts) > 100_000 {
        return Err("iterations x restarts is capped at 100000 in the browser".into());
    }
    let spec = SearchSpec {
        iterations,
        restarts,
        seed,
        ..SearchSpec::joint(id, s, rank)
    };
    let result = minimize_margin(&spec).map_err(|e| e.to_string())?;
    Ok(to_canonical_json(&result))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bloch_north_pole_is_the_pauli_equality() {
        let v: serde_json::Value = serde_json::from_str(&bloch_margins("x", "y", 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(v["delta_a"], 1.0);
        assert_eq!(v["commutator_bound"], 1.0);
        let nh_v = v["rows"].as_array().unwrap().iter().find(|r| r["statement"] == "NH-v").unwrap();
        assert_eq!(nh_v["margin"], 0.0);
        assert_eq!(nh_v["status"], "pass");
    }

    #[test]
    fn bloch_equator_commutator_vanishes() {
        let v: serde_json::Value =
            serde_json::from_str(&bloch_margins("x", "y", std::f64::consts::FRAC_PI_2, 0.0).unwrap()).unwrap();
        assert!(v["commutator_bound"].as_f64().unwrap() < 1e-15);
        assert!(v["rows"].as_array().unwrap().iter().all(|r| r["status"] != "fail"));
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(bloch_margins("q", "y", 0.0, 0.0).is_err());
        assert!(fuzz_summary("2,x", 2, 10, 0).is_err());
        assert!(fuzz_summary("1", 2, 0, 0).is_err());
        assert!(explore("NH-x", "1", 2, 10, 1, 0).is_err());
    }

    #[test]
    fn fuzz_and_explore_round_trip() {
        let v: serde_json::Value = serde_json::from_str(&fuzz_summary("2,1", 2, 20, 1).unwrap()).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 16);
        let r: serde_json::Value = serde_json::from_str(&explore("NH-v", "1", 2, 50, 2, 3).unwrap()).unwrap();
        assert!(r["best_margin"].as_f64().unwrap().is_finite());
    }
}
