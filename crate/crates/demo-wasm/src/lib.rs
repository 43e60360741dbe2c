//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes planar parameters `(b1, b2, alpha1, alpha2)` and returns
//! a JSON string; failures come back as a JS exception carrying the message.

use bloch_purity::bangbang::{synthesize, ControlSign, SynthesisOptions};
use bloch_purity::ritz::{RitzProblem, SolveOptions};
use bloch_purity::{PlanarSystem, Trajectory};
use nalgebra::Vector2;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 600;

fn system(b1: f64, b2: f64, alpha1: f64, alpha2: f64) -> Result<PlanarSystem, String> {
    PlanarSystem::new(b1, b2, alpha1, alpha2).map_err(|e| e.to_string())
}

/// At most `MAX_POINTS` evenly strided points, always keeping the last one.
fn polyline(traj: &Trajectory) -> Value {
    let n = traj.len();
    let stride = n.div_ceil(MAX_POINTS).max(1);
    let mut pts: Vec<[f64; 2]> = traj.samples.iter().step_by(stride).map(|s| [s.q.x, s.q.y]).collect();
    if !(n - 1).is_multiple_of(stride) {
        let s = traj.samples[n - 1];
        pts.push([s.q.x, s.q.y]);
    }
    json!(pts)
}

pub fn chimney_json(b1: f64, b2: f64, alpha1: f64, alpha2: f64, samples: usize) -> Result<String, String> {
    let p = system(b1, b2, alpha1, alpha2)?;
    let geo = p.apogee().map_err(|e| e.to_string())?;
    let profile = p.drift().radius_profile(samples.max(3)).map_err(|e| e.to_string())?;
    let boundary: Vec<[f64; 2]> = profile.iter().map(|&(th, g)| [g * th.cos(), g * th.sin()]).collect();
    Ok(json!({
        "apogee": [geo.apogee.x, geo.apogee.y],
        "radius": geo.apogee_radius,
        "degenerate": geo.degenerate,
        "boundary": boundary,
    })
    .to_string())
}

#[allow(clippy::too_many_arguments)]
pub fn ritz_json(
    b1: f64,
    b2: f64,
    alpha1: f64,
    alpha2: f64,
    order: usize,
    restarts: usize,
    seed: u64,
) -> Result<String, String> {
    let p = system(b1, b2, alpha1, alpha2)?;
    let prob = RitzProblem::from_system(p, order, 1e-3, 1e-3).map_err(|e| e.to_string())?;
    let sol = prob
        .solve(&SolveOptions {
            restarts: restarts.max(1),
            seed,
            ..SolveOptions::default()
        })
        .map_err(|e| e.to_string())?;
    let stride = sol.profile.samples.len().div_ceil(MAX_POINTS).max(1);
    let control: Vec<[f64; 2]> = sol.profile.samples.iter().step_by(stride).map(|s| [s.t, s.u]).collect();
    Ok(json!({
        "order": sol.order,
        "time": sol.best.time,
        "energy": sol.best.energy,
        "nu": sol.best.nu,
        "c": sol.best.c,
        "converged": sol.candidates.len(),
        "curve": polyline(&sol.trajectory),
        "control": control,
    })
    .to_string())
}

#[allow(clippy::too_many_arguments)]
pub fn bangbang_json(
    b1: f64,
    b2: f64,
    alpha1: f64,
    alpha2: f64,
    initial_sign: i32,
    horizon: f64,
    q0x: f64,
    q0y: f64,
) -> Result<String, String> {
    let p = system(b1, b2, alpha1, alpha2)?;
    let sign = if initial_sign >= 0 { ControlSign::Plus } else { ControlSign::Minus };
    let q0 = Vector2::new(q0x, q0y);
    let syn = synthesize(q0, sign, &p, horizon, &SynthesisOptions::default()).map_err(|e| e.to_string())?;
    let switches: Vec<Value> = syn
        .schedule
        .switches
        .iter()
        .map(|s| json!({"t": s.t, "gap": s.gap, "x": s.q.x, "y": s.q.y}))
        .collect();
    let arcs: Vec<Value> = syn
        .arcs
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let u = if k % 2 == 0 { sign.value() } else { -sign.value() };
            json!({"u": u, "points": polyline(a)})
        })
        .collect();
    Ok(json!({
        "initial_sign": sign.as_i32(),
        "switches": switches,
        "arcs": arcs,
        "never_switch": [polyline(&syn.never_switch[0]), polyline(&syn.never_switch[1])],
    })
    .to_string())
}

#[wasm_bindgen]
pub fn chimney(b1: f64, b2: f64, alpha1: f64, alpha2: f64, samples: usize) -> Result<String, JsValue> {
    chimney_json(b1, b2, alpha1, alpha2, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn ritz(
    b1: f64,
    b2: f64,
    alpha1: f64,
    alpha2: f64,
    order: usize,
    restarts: usize,
    seed: u64,
) -> Result<String, JsValue> {
    ritz_json(b1, b2, alpha1, alpha2, order, restarts, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn bangbang(
    b1: f64,
    b2: f64,
    alpha1: f64,
    alpha2: f64,
    initial_sign: i32,
    horizon: f64,
    q0x: f64,
    q0y: f64,
) -> Result<String, JsValue> {
    bangbang_json(b1, b2, alpha1, alpha2, initial_sign, horizon, q0x, q0y).map_err(|e| JsValue::from_str(&e))
}
