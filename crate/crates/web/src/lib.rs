//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Results cross the boundary as JSON strings or `Float64Array`s.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use bbm_core::barrier::{ballot_probability, ballot_refinement_mc, BarrierParams};
use bbm_core::kernels::RngStream;
use bbm_core::mc::McPlan;
use bbm_core::model::ModelParams;
use bbm_core::sim::{simulate_tree, tree_to_json, SimConfig, Stop};

/// Largest population the page may ask for.
pub const MAX_POPULATION: u32 = 20_000;

fn js(e: bbm_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Tree JSON (`bbm-tree/1`) of a `d`-dimensional BBM stopped when
/// `population` particles are alive.
#[wasm_bindgen]
pub fn simulate(d: u32, population: u32, grid_step: f64, seed: u32) -> Result<String, JsError> {
    if population == 0 || population > MAX_POPULATION {
        return Err(JsError::new(&format!(
            "population must lie in [1, {MAX_POPULATION}]"
        )));
    }
    let model = ModelParams::new(d).map_err(js)?;
    let cfg = SimConfig::new(model, 0.0)
        .with_stop(Stop::Population(population as usize))
        .with_grid_step(grid_step);
    let tree = simulate_tree(&cfg, RngStream::new(seed as u64, 0).child(0)).map_err(js)?;
    tree_to_json(&tree).map_err(js)
}

/// `[exact, coarse, middle, fine, extrapolated, stderr]` for the event that
/// a Brownian bridge from `x` to `y` over `[0, t]` stays below the line
/// from `a` to `b`; `n` bridges on 32, 64 and 128 steps.
#[wasm_bindgen]
pub fn ballot(
    x: f64,
    y: f64,
    a: f64,
    b: f64,
    t: f64,
    n: u32,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    let exact = ballot_probability(x, y, a, b, t).map_err(js)?;
    let plan = McPlan::new(n as usize, seed as u64);
    let r = ballot_refinement_mc(x, y, a, b, t, 32, &plan).map_err(js)?;
    let mut out = vec![exact];
    out.extend(r.levels.iter().map(|(_, e)| e.value));
    out.push(r.extrapolated.value);
    out.push(r.extrapolated.stderr);
    Ok(out)
}

/// `m_t = √2 t + c_d log t`, or NaN outside its domain.
#[wasm_bindgen]
pub fn centering(d: u32, t: f64) -> f64 {
    ModelParams::new(d)
        .and_then(|m| m.centering(t))
        .map_or(f64::NAN, |c| c.value)
}

#[derive(Serialize)]
struct Curves {
    s: Vec<f64>,
    b0: Vec<f64>,
    q: Vec<f64>,
    upper: Vec<f64>,
    ell1: f64,
    count_time: f64,
}

/// JSON `{s, b0, q, upper, ell1, count_time}`: the barriers `B₀`, `Q_z` and
/// the line `(m_t/t)(s+L) + y` on `points` equally spaced times in
/// `[0, t − L − ℓ]`.
#[wasm_bindgen]
pub fn barrier_curves(
    d: u32,
    t: f64,
    l: f64,
    ell: f64,
    z: f64,
    y: f64,
    points: u32,
) -> Result<String, JsError> {
    let model = ModelParams::new(d).map_err(js)?;
    let p = BarrierParams::new(model, t, l, ell, z, y).map_err(js)?;
    let end = p.count_time();
    let k = points.max(2) as usize;
    let s: Vec<f64> = (0..k).map(|i| end * i as f64 / (k - 1) as f64).collect();
    let eval = |f: &dyn Fn(f64) -> f64| s.iter().map(|&v| f(v)).collect::<Vec<_>>();
    let (b0, q, upper) = (p.b0_curve(), p.q_curve(), p.upper_line_curve());
    let curves = Curves {
        b0: eval(&*b0),
        q: eval(&*q),
        upper: eval(&*upper),
        s,
        ell1: p.ell1(),
        count_time: end,
    };
    serde_json::to_string(&curves).map_err(|e| JsError::new(&e.to_string()))
}
