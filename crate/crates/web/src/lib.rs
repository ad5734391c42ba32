//! wasm-bindgen bindings for the browser demo in `www/`.

use wasm_bindgen::prelude::*;

pub mod ops;

fn js(r: csg_compress::Result<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = scenePrimitives)]
pub fn scene_primitives() -> String {
    ops::scene_primitives()
}

#[wasm_bindgen(js_name = sceneTruth)]
pub fn scene_truth() -> String {
    ops::scene_truth()
}

#[wasm_bindgen(js_name = coverExample)]
pub fn cover_example() -> String {
    ops::cover_example()
}

/// Runs the full pipeline against a ground-truth tree and returns the report.
#[wasm_bindgen]
pub fn compress(primitives: &str, truth: &str, seed: u64) -> Result<String, JsError> {
    js(ops::compress(primitives, truth, seed))
}

/// Membership raster of the plane `z = const`; see [`ops::slice`].
#[wasm_bindgen]
pub fn slice(primitives: &str, truth: &str, tree: &str, z: f64, size: usize) -> Result<Vec<u8>, JsError> {
    ops::slice(primitives, truth, tree, z, size).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = solveCover)]
pub fn solve_cover(instance: &str, solver: &str, seed: u64) -> Result<String, JsError> {
    js(ops::solve_cover(instance, solver, seed))
}
