//! Browser bindings: the three operations behind the static demo page.
//!
//! * Wigner grid of a coherent state after dephasing for a time `t`.
//! * Coherence decay curve (purity, largest coherence, overlap) versus time.
//! * Synthetic recovery: simulate noisy probe data, sweep the coupling and
//!   return the objective curve with the recovered bath distribution.
//!
//! Each operation is a plain Rust function (tested natively) with a thin
//! `wasm_bindgen` wrapper that turns errors into JavaScript exceptions.

use std::f64::consts::PI;

use dephaser::estimator::EstimationProblem;
use dephaser::measurement::{phase_probe_family, synth_dataset};
use dephaser::operator::DensityMatrix;
use dephaser::rovib::{coherence_decay, evolve, thermal_distribution_reduced, BathModel, RovibParams};
use dephaser::wigner::{linspace, wigner_grid};
use num_complex::Complex64 as C64;
use wasm_bindgen::prelude::*;

/// Vibrational period of the demo model, s.
pub const VIB_PERIOD_S: f64 = 500e-15;

/// Thermal coherent-state model shared by the demo operations.
#[derive(Debug, Clone, Copy)]
pub struct DemoModel {
    pub dim: usize,
    pub j_max: usize,
    /// Reduced rotational energy `hbar B / (k_B T)`.
    pub beta: f64,
    pub lambda: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
}

impl DemoModel {
    fn params(&self) -> Result<RovibParams, String> {
        RovibParams::new(2.0 * PI / VIB_PERIOD_S, self.lambda, self.dim, self.j_max).map_err(|e| e.to_string())
    }

    fn bath(&self) -> Result<BathModel, String> {
        let w = thermal_distribution_reduced(self.beta, self.j_max).map_err(|e| e.to_string())?.weights;
        BathModel::new(self.lambda, w).map_err(|e| e.to_string())
    }

    fn initial_state(&self) -> Result<DensityMatrix, String> {
        DensityMatrix::coherent(self.dim, C64::new(self.alpha_re, self.alpha_im)).map_err(|e| e.to_string())
    }
}

/// Row-major `points x points` Wigner values (rows follow `p`, columns `q`)
/// of the evolved state on `[-range, range]^2`.
pub fn wigner_after(model: &DemoModel, t_s: f64, range: f64, points: usize) -> Result<Vec<f64>, String> {
    let rho = evolve(&model.initial_state()?, &model.params()?, &model.bath()?, t_s).map_err(|e| e.to_string())?;
    let axis = linspace(-range, range, points);
    let grid = wigner_grid(&rho, &axis, &axis).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(points * points);
    for ip in 0..points {
        for iq in 0..points {
            out.push(grid.values[iq][ip]);
        }
    }
    Ok(out)
}

/// Flat rows `[t, purity, max_offdiag, overlap0]` on `points` times in `[0, t_end]`.
pub fn decay_rows(model: &DemoModel, t_end_s: f64, points: usize) -> Result<Vec<f64>, String> {
    let times = linspace(0.0, t_end_s, points);
    let rows = coherence_decay(&model.initial_state()?, &model.params()?, &model.bath()?, &times)
        .map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| [r.t_s, r.purity, r.max_offdiag, r.overlap0]).collect())
}

/// Outcome of a synthetic recovery sweep.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Recovery {
    grid: Vec<f64>,
    objectives: Vec<f64>,
    p_true: Vec<f64>,
    p_hat: Vec<f64>,
    best_lambda: f64,
    convex: bool,
    boundary: bool,
}

#[wasm_bindgen]
impl Recovery {
    #[wasm_bindgen(getter)]
    pub fn grid(&self) -> Vec<f64> {
        self.grid.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn objectives(&self) -> Vec<f64> {
        self.objectives.clone()
    }

    #[wasm_bindgen(getter, js_name = pTrue)]
    pub fn p_true(&self) -> Vec<f64> {
        self.p_true.clone()
    }

    #[wasm_bindgen(getter, js_name = pHat)]
    pub fn p_hat(&self) -> Vec<f64> {
        self.p_hat.clone()
    }

    #[wasm_bindgen(getter, js_name = bestLambda)]
    pub fn best_lambda(&self) -> f64 {
        self.best_lambda
    }

    #[wasm_bindgen(getter)]
    pub fn convex(&self) -> bool {
        self.convex
    }

    #[wasm_bindgen(getter)]
    pub fn boundary(&self) -> bool {
        self.boundary
    }
}

/// Simulate `probes` phase-probe records (delays in `[0, pi / lambda)`, noise
/// `sigma`) from `model`, then sweep the coupling over `grid_points` values
/// evenly spanning `[grid_lo, grid_hi]`.
pub fn recover(
    model: &DemoModel,
    probes: usize,
    sigma: f64,
    seed: u64,
    grid_lo: f64,
    grid_hi: f64,
    grid_points: usize,
) -> Result<Recovery, String> {
    let params = model.params()?;
    let bath = model.bath()?;
    let rho0 = model.initial_state()?;
    let settings = phase_probe_family(model.dim, probes, PI / model.lambda, seed).map_err(|e| e.to_string())?;
    let ds = synth_dataset(&params, &bath, &rho0, &settings, sigma, seed).map_err(|e| e.to_string())?;
    let grid = linspace(grid_lo, grid_hi, grid_points);
    let sweep = EstimationProblem::new(&ds, &rho0, &params, &settings)
        .and_then(|p| p.sweep(&grid))
        .map_err(|e| e.to_string())?;
    Ok(Recovery {
        grid: sweep.lambda_grid,
        objectives: sweep.objectives,
        p_true: bath.weights,
        p_hat: sweep.best_result.weights,
        best_lambda: sweep.best_lambda,
        convex: sweep.convex_flag,
        boundary: sweep.boundary_flag,
    })
}

fn js_err(e: String) -> JsError {
    JsError::new(&e)
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = wignerAfter)]
pub fn wigner_after_js(
    dim: usize,
    j_max: usize,
    beta: f64,
    lambda: f64,
    alpha_re: f64,
    alpha_im: f64,
    t_s: f64,
    range: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let model = DemoModel { dim, j_max, beta, lambda, alpha_re, alpha_im };
    wigner_after(&model, t_s, range, points).map_err(js_err)
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = decayCurve)]
pub fn decay_curve_js(
    dim: usize,
    j_max: usize,
    beta: f64,
    lambda: f64,
    alpha_re: f64,
    alpha_im: f64,
    t_end_s: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let model = DemoModel { dim, j_max, beta, lambda, alpha_re, alpha_im };
    decay_rows(&model, t_end_s, points).map_err(js_err)
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = recoverySweep)]
pub fn recovery_sweep_js(
    dim: usize,
    j_max: usize,
    beta: f64,
    lambda: f64,
    probes: usize,
    sigma: f64,
    seed: u32,
    grid_lo: f64,
    grid_hi: f64,
    grid_points: usize,
) -> Result<Recovery, JsError> {
    let model = DemoModel { dim, j_max, beta, lambda, alpha_re: 1.0, alpha_im: 0.3 };
    recover(&model, probes, sigma, u64::from(seed), grid_lo, grid_hi, grid_points).map_err(js_err)
}
