//! Browser entry points. Every export takes plain numbers or strings and
//! returns a JSON document, so the page needs no bindings beyond these.

use gzsc::combinatorics::{enumerate_patterns, weyl_dimension, HighestWeight};
use gzsc::harness::{parse_g, parse_ints, run_comparison, ExperimentConfig};
use gzsc::intersect::{toric_intersections, SolverConfig};
use gzsc::linalg::{c, CMat, CVec};
use num_complex::Complex64;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

type Out = Result<Value, String>;

fn bloch(u: &CVec) -> [f64; 3] {
    let x = u[0].conj() * u[1];
    [2.0 * x.re, 2.0 * x.im, u[0].norm_sqr() - u[1].norm_sqr()]
}

fn fibre(level: f64, theta: f64) -> CVec {
    CVec::from_vec(vec![c((1.0 - level).sqrt(), 0.0), Complex64::from_polar(level.sqrt(), theta)])
}

/// Scaled Wigner elements against the two-term prediction, swept over `p`.
pub fn wigner_sweep_value(beta: f64, v: f64, w: f64, p_min: i64, p_max: i64) -> Out {
    if p_max - p_min < 4 || p_min < 2 {
        return Err("need p_min >= 2 and at least five scales".into());
    }
    let text = format!("mode = wigner\ng = rotation:{beta}\nv = {v}\nw = {w}\np = {p_min}..{p_max}\ncalibrate_count = 3\n");
    let cfg = ExperimentConfig::parse(&text).map_err(|e| e.to_string())?;
    let report = run_comparison(&cfg, None).map_err(|e| e.to_string())?;
    let rows: Vec<Value> = report
        .records
        .iter()
        .map(|r| {
            let exact = Complex64::new(r.exact[0], r.exact[1]);
            let z = Complex64::new(r.alignment[0], r.alignment[1]);
            let scale = if exact.norm() > 0.0 { r.abs_scaled_exact / exact.norm() } else { 0.0 };
            let aligned = z * exact * scale;
            json!({
                "p": r.p,
                "exact": r.exact[0],
                "scaled": aligned.re,
                "predicted": r.predicted[0],
                "residual": r.residual,
                "components": r.components.len(),
            })
        })
        .collect();
    Ok(json!({ "records": rows, "slope": report.summary.slope, "calibration": report.summary.calibration }))
}

/// Circles `g . fibre(v)` and `fibre(w)` on the Bloch sphere and the points
/// where they cross.
pub fn sphere_value(g_spec: &str, v: f64, w: f64) -> Out {
    let g: CMat = parse_g(g_spec, 2).map_err(|e| e.to_string())?;
    let found = toric_intersections(&g, &[v], &[w], &SolverConfig::for_dim(1)).map_err(|e| e.to_string())?;
    let steps = 180;
    let circle = |f: &dyn Fn(f64) -> CVec| -> Vec<[f64; 3]> { (0..=steps).map(|k| bloch(&f(std::f64::consts::TAU * k as f64 / steps as f64))).collect() };
    let moved = circle(&|t| &g * fibre(v, t));
    let fixed = circle(&|t| fibre(w, t));
    let points: Vec<Value> = found
        .points
        .iter()
        .filter_map(|q| q.vector.as_ref().map(|u| json!({ "xyz": bloch(u), "jac_det": q.jac_det, "residual": q.residual })))
        .collect();
    Ok(json!({ "moved": moved, "fixed": fixed, "points": points, "count": points.len() }))
}

/// GZ patterns of `lambda` (comma list), at most `limit` of them listed.
pub fn patterns_value(lambda: &str, limit: usize) -> Out {
    let hw = HighestWeight::new(parse_ints(lambda).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    if hw.n() > 6 {
        return Err("n is capped at 6 in the browser".into());
    }
    let dim = weyl_dimension(&hw);
    if dim > 200_000u32.into() {
        return Err(format!("dimension {dim} is too large to enumerate here"));
    }
    let pats = enumerate_patterns(&hw);
    let listed: Vec<Value> = pats.iter().take(limit).map(|g| json!({ "rows": g.rows(), "weight": g.weight() })).collect();
    Ok(json!({ "lambda": hw.as_slice(), "count": pats.len(), "weyl": dim.to_string(), "patterns": listed }))
}

fn export(v: Out) -> Result<String, JsError> {
    v.map(|x| x.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn wigner_sweep(beta: f64, v: f64, w: f64, p_min: i32, p_max: i32) -> Result<String, JsError> {
    export(wigner_sweep_value(beta, v, w, p_min as i64, p_max as i64))
}

#[wasm_bindgen]
pub fn sphere(g_spec: &str, v: f64, w: f64) -> Result<String, JsError> {
    export(sphere_value(g_spec, v, w))
}

#[wasm_bindgen]
pub fn patterns(lambda: &str, limit: u32) -> Result<String, JsError> {
    export(patterns_value(lambda, limit as usize))
}
