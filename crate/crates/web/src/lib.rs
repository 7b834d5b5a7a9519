//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain strings or numbers and returns a JSON string; the
//! page renders the result. Failures come back as a rejected value carrying
//! the engine's error message.

use jetforms::analysis::{
    classify_b_system, highest_hessian, is_regular_at, omega2_kernel_dim_at, on_constraint_point, select_b_columns,
    verify_selection, b_system_matrix,
};
use jetforms::eleuler::euler_lagrange;
use jetforms::jetmodel::BundleSpec;
use jetforms::problem::parse_problem;
use jetforms::symexpr::{Expr, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn text(e: &Expr) -> String {
    e.normalize().map(|n| n.to_string()).unwrap_or_else(|_| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

#[derive(Serialize)]
struct ElView {
    equations: Vec<String>,
    max_order: u32,
}

/// Euler-Lagrange equations of a problem file.
pub fn el_json(problem: &str) -> Result<String, String> {
    let p = parse_problem(problem).map_err(|e| e.to_string())?;
    let el = euler_lagrange(&p.lagrangian, p.spec()).map_err(|e| e.to_string())?;
    Ok(to_json(&ElView { equations: el.components.iter().map(text).collect(), max_order: 2 * p.spec().k }))
}

#[derive(Serialize)]
struct BSystemView {
    unknowns: usize,
    equations: usize,
    verdict: String,
    rows: Vec<String>,
    columns: Vec<String>,
    matrix: Vec<Vec<u8>>,
    /// Chosen column per row, when the selection applies.
    selected: Option<Vec<String>>,
    selection_verified: Option<bool>,
}

/// Counting verdict, full 0/1 matrix and column selection of the `B` system.
pub fn b_system_json(m: usize, k: u32) -> Result<String, String> {
    if m > 4 || k > 4 {
        return Err("the demo is limited to m, k <= 4".into());
    }
    let spec = BundleSpec::new(m, 1, k).map_err(|e| e.to_string())?;
    let c = classify_b_system(spec);
    let (rows, cols, matrix) = b_system_matrix(spec);
    let (selected, selection_verified) = match select_b_columns(spec) {
        Ok(sel) => {
            let ok = verify_selection(&sel);
            (Some(sel.columns.iter().map(|c| c.to_string()).collect()), Some(ok))
        }
        Err(_) => (None, None),
    };
    Ok(to_json(&BSystemView {
        unknowns: c.b_unknowns,
        equations: c.b_equations,
        verdict: c.verdict.to_string(),
        rows: rows.iter().map(|r| r.to_string()).collect(),
        columns: cols.iter().map(|c| c.to_string()).collect(),
        matrix,
        selected,
        selection_verified,
    }))
}

#[derive(Serialize)]
struct SampleView {
    regular: bool,
    kernel_dim: Option<usize>,
}

#[derive(Serialize)]
struct RegularityView {
    labels: Vec<String>,
    hessian: Vec<Vec<String>>,
    samples: Vec<SampleView>,
}

/// Hessian in the top jets, plus regularity and kernel dimension at a few
/// random points of the final constraint submanifold.
pub fn regularity_json(problem: &str, seed: u32, samples: u32) -> Result<String, String> {
    let p = parse_problem(problem).map_err(|e| e.to_string())?;
    let spec = p.spec();
    let h = highest_hessian(&p.lagrangian, spec).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let mut out = Vec::new();
    if p.undefined_fields().is_empty() {
        for _ in 0..samples.min(20) {
            let pt: Point = on_constraint_point(&p.catalog, &p.lagrangian, &p.field_values, &p.fixed, &mut rng)
                .map_err(|e| e.to_string())?;
            let regular = is_regular_at(&p.lagrangian, spec, &pt, &p.field_values).map_err(|e| e.to_string())?;
            let kernel_dim = if spec.m >= 2 {
                Some(omega2_kernel_dim_at(&p.lagrangian, &p.catalog, &pt, &p.field_values).map_err(|e| e.to_string())?)
            } else {
                None
            };
            out.push(SampleView { regular, kernel_dim });
        }
    }
    Ok(to_json(&RegularityView {
        labels: h.labels.iter().map(|(a, k)| if spec.n > 1 { format!("u{k}@{}", a + 1) } else { format!("u{k}") }).collect(),
        hessian: h.entries.iter().map(|row| row.iter().map(text).collect()).collect(),
        samples: out,
    }))
}

#[wasm_bindgen]
pub fn euler_lagrange_equations(problem: &str) -> Result<String, JsValue> {
    el_json(problem).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn b_system(m: usize, k: u32) -> Result<String, JsValue> {
    b_system_json(m, k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn regularity(problem: &str, seed: u32, samples: u32) -> Result<String, JsValue> {
    regularity_json(problem, seed, samples).map_err(|e| JsValue::from_str(&e))
}
