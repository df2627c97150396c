//! Browser bindings for three l2lab operations: the spectral density of a
//! Laurent polynomial's compression, determinant convergence against the
//! Mahler measure, and the torsion report of a small complex.
//!
//! Each binding is a thin wrapper over a plain Rust function returning JSON,
//! so the logic is testable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use l2lab::invariants::{compress_at, fk_determinant, l2_torsion, Evaluation, Schedule, Scheme};
use l2lab::io::{parse_complex_file, parse_laurent, round_json};
use l2lab::oracles::{mahler_report, LaurentPolynomial};
use l2lab::spectral::eigenvalues;
use l2lab::RingMatrix;

/// Keeps the page responsive: a dense eigensolve at this size takes a few
/// seconds in the browser.
const DEMO_CAP: usize = 1200;

fn to_json(value: &impl Serialize) -> Result<String, String> {
    let mut v = serde_json::to_value(value).map_err(|e| e.to_string())?;
    round_json(&mut v);
    Ok(v.to_string())
}

fn schedule(scheme: &str, levels: &[u64]) -> Result<Schedule, String> {
    let scheme: Scheme = scheme.parse().map_err(|e: l2lab::Error| e.to_string())?;
    Schedule::new(scheme, levels.to_vec()).map(|s| s.with_cap(DEMO_CAP)).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct DensityView {
    n_m: usize,
    threshold: f64,
    f_at_0: f64,
    steps: Vec<(f64, f64)>,
}

/// Step function `F_m` of the compressed operator; `poly` must be
/// self-adjoint, e.g. `[[1],-1,1],[[0],2,1],[[-1],-1,1]`.
pub fn density_json(poly: &str, scheme: &str, level: u64) -> Result<String, String> {
    let a = RingMatrix::scalar(parse_laurent(poly).map_err(|e| e.to_string())?);
    let sched = schedule(scheme, &[level])?;
    let c = compress_at(&a, &sched, level, true).map_err(|e| e.to_string())?;
    let s = eigenvalues(&c, DEMO_CAP).map_err(|e| e.to_string())?;
    let threshold = s.default_threshold();
    to_json(&DensityView { n_m: s.normalization(), threshold, f_at_0: s.eval(threshold), steps: s.steps() })
}

#[derive(Serialize)]
struct ConvergenceView {
    levels: Vec<u64>,
    log_det: Vec<f64>,
    mahler: f64,
    low_precision: bool,
}

/// Polar determinant estimates across levels next to the Mahler measure.
pub fn convergence_json(poly: &str, scheme: &str, levels: &[u64]) -> Result<String, String> {
    let element = parse_laurent(poly).map_err(|e| e.to_string())?;
    let sched = schedule(scheme, levels)?;
    let est = fk_determinant(&RingMatrix::scalar(element.clone()), &sched, Evaluation::Polar).map_err(|e| e.to_string())?;
    let p = LaurentPolynomial::from_element(&element).map_err(|e| e.to_string())?;
    let oracle = mahler_report(&p, 256).map_err(|e| e.to_string())?;
    to_json(&ConvergenceView {
        levels: est.levels.iter().map(|r| r.m).collect(),
        log_det: est.levels.iter().map(|r| r.log_det).collect(),
        mahler: oracle.value,
        low_precision: oracle.low_precision,
    })
}

/// Torsion report of a complex given in the JSON file format.
pub fn torsion_json(complex: &str, scheme: &str, levels: &[u64]) -> Result<String, String> {
    let c = parse_complex_file(complex).map_err(|e| e.to_string())?;
    let report = l2_torsion(&c, &schedule(scheme, levels)?).map_err(|e| e.to_string())?;
    to_json(&report)
}

#[wasm_bindgen]
pub fn density(poly: &str, scheme: &str, level: u32) -> Result<String, JsValue> {
    density_json(poly, scheme, level as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn convergence(poly: &str, scheme: &str, levels: Vec<u32>) -> Result<String, JsValue> {
    let levels: Vec<u64> = levels.into_iter().map(u64::from).collect();
    convergence_json(poly, scheme, &levels).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn torsion(complex: &str, scheme: &str, levels: Vec<u32>) -> Result<String, JsValue> {
    let levels: Vec<u64> = levels.into_iter().map(u64::from).collect();
    torsion_json(complex, scheme, &levels).map_err(|e| JsValue::from_str(&e))
}
