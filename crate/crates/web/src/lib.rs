//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export wraps a plain Rust function of the same name with a `_impl`
//! suffix, so the logic is testable natively.

use serde::Serialize;
use tht_core::discretization::{uniform_matrix, GridShift, UniformParams};
use tht_core::spectrum::{compute_svd, zero_count, zero_count_outside};
use tht_core::sturm::{first_eigenvalues, SolverParams};
use tht_core::Configuration;
use wasm_bindgen::prelude::*;

/// Largest uniform grid the page may request; the dense SVD is cubic in `n`.
pub const MAX_NODES: usize = 401;

/// One pair of singular functions on their grids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularPair {
    pub index: usize,
    pub sigma: f64,
    pub x_object: Vec<f64>,
    pub f: Vec<f64>,
    pub x_measure: Vec<f64>,
    pub g: Vec<f64>,
    pub zeros_inside_overlap: usize,
    pub zeros_outside_overlap: usize,
}

fn configuration(a: &[f64]) -> Result<Configuration, String> {
    match a {
        [a1, a2, a3, a4] => Configuration::new(*a1, *a2, *a3, *a4).map_err(|e| e.to_string()),
        _ => Err(format!("expected four endpoints, got {}", a.len())),
    }
}

fn system(cfg: &Configuration, n: usize, step: f64) -> Result<tht_core::spectrum::SingularSystem, String> {
    if n > MAX_NODES {
        return Err(format!("at most {MAX_NODES} nodes per interval"));
    }
    let m = uniform_matrix(
        cfg,
        &UniformParams {
            n,
            step,
            shift: GridShift::Interleaved,
        },
    )
    .map_err(|e| e.to_string())?;
    compute_svd(&m).map_err(|e| e.to_string())
}

/// Descending singular values of the uniform matrix with `n` nodes and spacing `step`.
pub fn spectrum_impl(endpoints: &[f64], n: usize, step: f64) -> Result<Vec<f64>, String> {
    let cfg = configuration(endpoints)?;
    Ok(system(&cfg, n, step)?.sigmas)
}

/// Right and left singular functions with index `index`.
pub fn singular_pair_impl(endpoints: &[f64], n: usize, step: f64, index: usize) -> Result<SingularPair, String> {
    let cfg = configuration(endpoints)?;
    let s = system(&cfg, n, step)?;
    if index >= s.len() {
        return Err(format!("index {index} out of range 0..{}", s.len()));
    }
    let (x_object, f) = s.right_function(index);
    let (x_measure, g) = s.left_function(index);
    let overlap = (cfg.a2(), cfg.a3());
    Ok(SingularPair {
        index,
        sigma: s.sigmas[index],
        zeros_inside_overlap: zero_count(&x_object, &f, overlap, 1e-6),
        zeros_outside_overlap: zero_count_outside(&x_object, &f, overlap, 1e-6),
        x_object,
        f,
        x_measure,
        g,
    })
}

/// The `count` Sturm–Liouville eigenvalues of smallest magnitude, ascending.
pub fn eigenvalues_impl(endpoints: &[f64], count: usize) -> Result<Vec<f64>, String> {
    let cfg = configuration(endpoints)?;
    if count > 32 {
        return Err("at most 32 eigenvalues".into());
    }
    first_eigenvalues(&cfg, count, &SolverParams::for_config(&cfg)).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn spectrum(endpoints: &[f64], n: usize, step: f64) -> Result<Vec<f64>, JsError> {
    spectrum_impl(endpoints, n, step).map_err(|e| JsError::new(&e))
}

/// JSON-encoded [`SingularPair`].
#[wasm_bindgen]
pub fn singular_pair(endpoints: &[f64], n: usize, step: f64, index: usize) -> Result<String, JsError> {
    let pair = singular_pair_impl(endpoints, n, step, index).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&pair).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn eigenvalues(endpoints: &[f64], count: usize) -> Result<Vec<f64>, JsError> {
    eigenvalues_impl(endpoints, count).map_err(|e| JsError::new(&e))
}
