//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every operation takes and returns JSON strings. The `*_json` functions are
//! the plain Rust versions the bindings wrap.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use tidyplan::eval::{episode_scene, held_out_templates};
use tidyplan::geom::{alignment_rotation, fit_ellipse, EllipseFit};
use tidyplan::templates::builtin_library;
use tidyplan::{apply_action, ActionSpec, EnvironmentTag, Scene};

const SCATTER_STEPS: usize = 4;

fn err(e: impl ToString) -> String {
    e.to_string()
}

/// A scattered scene built from a held-out template of `env`.
pub fn messy_scene_json(env: &str, seed: u32) -> Result<String, String> {
    let env: EnvironmentTag = env.parse().map_err(err)?;
    let held = held_out_templates(&builtin_library(), 0).map_err(err)?;
    let (scene, _) = episode_scene(&held, env, SCATTER_STEPS, seed as u64).map_err(err)?;
    Ok(scene.to_json())
}

/// Moves one object to a grid cell and rotation bin. Placements that collide
/// or leave the table are rejected.
pub fn place_json(scene: &str, object_id: u32, x: usize, y: usize, rotation_bin: usize) -> Result<String, String> {
    let scene = Scene::from_json(scene).map_err(err)?;
    let next = apply_action(&scene, &ActionSpec::new(object_id, x, y, rotation_bin)).map_err(err)?;
    if !next.is_valid() {
        return Err(format!("object {object_id} does not fit at cell ({x}, {y})"));
    }
    Ok(next.to_json())
}

#[derive(Serialize)]
struct OutlineFit {
    #[serde(flatten)]
    fit: EllipseFit,
    /// Rotation that lines the major axis up with the nearest table axis.
    alignment: f64,
}

/// Ellipse fit of `[[x, y], ...]`.
pub fn fit_outline_json(points: &str) -> Result<String, String> {
    let pts: Vec<(f64, f64)> = serde_json::from_str(points).map_err(err)?;
    let fit = fit_ellipse(&pts).map_err(err)?;
    serde_json::to_string(&OutlineFit { fit, alignment: alignment_rotation(&fit) }).map_err(err)
}

#[wasm_bindgen]
pub fn messy_scene(env: &str, seed: u32) -> Result<String, JsError> {
    messy_scene_json(env, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn place(scene: &str, object_id: u32, x: usize, y: usize, rotation_bin: usize) -> Result<String, JsError> {
    place_json(scene, object_id, x, y, rotation_bin).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fit_outline(points: &str) -> Result<String, JsError> {
    fit_outline_json(points).map_err(|e| JsError::new(&e))
}
