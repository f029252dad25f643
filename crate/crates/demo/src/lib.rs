//! Browser bindings: each call simulates one path and hands it to the page as
//! a flat `[time, value, is_jump, ...]` array.

use wasm_bindgen::prelude::*;

use bs_coalescent::coalescent::{simulate_coalescent, Mode};
use bs_coalescent::path::{BlockPath, PiecewisePath};
use bs_coalescent::pdmp::{simulate_a, simulate_r, Init};
use bs_coalescent::rng::seeded;
use bs_coalescent::stable::{length_path, TwoParameterStable, DEFAULT_TAIL};

/// Largest `n` the page may request; keeps a click well under a second.
pub const MAX_N: u32 = 100_000;

fn flatten(path: &PiecewisePath) -> Vec<f64> {
    path.knots
        .iter()
        .flat_map(|k| [k.time, k.value, if k.is_jump { 1.0 } else { 0.0 }])
        .collect()
}

fn steps(path: &BlockPath) -> Vec<f64> {
    path.events
        .iter()
        .flat_map(|e| {
            [
                e.time,
                e.block_count as f64,
                if e.merger_size.is_some() { 1.0 } else { 0.0 },
            ]
        })
        .collect()
}

fn js(e: bs_coalescent::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Stationary path of `R` (`which = "R"`) or `A` (`which = "A"`).
#[wasm_bindgen]
pub fn mrca_path(which: &str, horizon: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    let mut rng = seeded(seed as u64);
    let path = match which {
        "R" => simulate_r(0.0, horizon, Init::Stationary, &mut rng),
        "A" => simulate_a(0.0, horizon, Init::Stationary, &mut rng),
        other => return Err(JsError::new(&format!("unknown process `{other}`"))),
    }
    .map_err(js)?;
    Ok(flatten(&path))
}

/// Block count of the coalescent started from `n` singletons, one triple per
/// merger.
#[wasm_bindgen]
pub fn block_count_path(n: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    if !(2..=MAX_N).contains(&n) {
        return Err(JsError::new(&format!("n must lie in 2..={MAX_N}")));
    }
    let run = simulate_coalescent(n as usize, &mut seeded(seed as u64), Mode::CountsOnly).map_err(js)?;
    Ok(steps(&run.path))
}

/// Branch-length limit `L(s)` for `s` in `[0, horizon]` on a grid of 500 steps.
#[wasm_bindgen]
pub fn branch_length_path(eps: f64, horizon: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    if eps.is_nan() || eps < 1e-5 {
        return Err(JsError::new("eps must be at least 1e-5"));
    }
    let mut rng = seeded(seed as u64);
    let tp = TwoParameterStable::simulate(eps, horizon, DEFAULT_TAIL, &mut rng).map_err(js)?;
    let l = length_path(&tp, horizon, horizon / 500.0, DEFAULT_TAIL).map_err(js)?;
    Ok(flatten(&l))
}
