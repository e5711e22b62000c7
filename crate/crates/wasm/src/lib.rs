//! WebAssembly bindings for the browser demo in `www/`. Every export takes
//! and returns JSON text; errors surface as JavaScript exceptions.

pub mod demo;

use serde::de::DeserializeOwned;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn parse<T: DeserializeOwned + Default>(json: &str) -> Result<T, JsError> {
    if json.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(json).map_err(|e| JsError::new(&format!("bad request: {e}")))
}

fn render<T: Serialize>(value: hazborrow::Result<T>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

/// Posterior lump weight curves for a list of prior weights.
#[wasm_bindgen]
pub fn borrowing_profiles(request: &str) -> Result<String, JsError> {
    render(demo::profiles(&parse(request)?))
}

/// Tolerable difference for `p_0`, or with `from_xi` the prior weight for `value` as xi.
#[wasm_bindgen]
pub fn calibrate(value: f64, from_xi: bool, b_tau: f64, d_tau: f64) -> Result<String, JsError> {
    if from_xi {
        render(demo::calibrate_from_xi(value, b_tau, d_tau))
    } else {
        render(demo::calibrate_from_p0(value, b_tau, d_tau))
    }
}

/// Simulates a trial, fits it and returns the posterior curves.
#[wasm_bindgen]
pub fn simulate_and_fit(request: &str) -> Result<String, JsError> {
    render(demo::simulate_and_fit(&parse(request)?))
}
