//! Browser demo of `iphfit`, compiled to WebAssembly with `wasm-bindgen`.
//!
//! The page in `www/` calls three exports: an IPH curve explorer, a contour
//! grid of the bivariate block density and a simulate-then-fit round trip.
//! Matrices cross the boundary as row-major `Float64Array`s.

// Negated comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// `[x, density, survival]` triples, flattened, on `points` equally spaced
/// points of `[from, to]` for `g(Y)`, `Y ~ PH(pi, t)` with the named
/// transform.
#[wasm_bindgen(js_name = iphCurve)]
pub fn iph_curve(
    family: &str,
    params: &[f64],
    pi: &[f64],
    t: &[f64],
    from: f64,
    to: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let model = demo::iph_model(family, params, pi, t).map_err(js)?;
    demo::curve(&model, from, to, points).map_err(js)
}

/// Joint density of the bivariate block model on an `n1 × n2` grid,
/// row-major with `x1` varying slowest.
#[wasm_bindgen(js_name = blockContour)]
#[allow(clippy::too_many_arguments)]
pub fn block_contour(
    alpha: &[f64],
    t11: &[f64],
    t12: &[f64],
    t22: &[f64],
    x1_to: f64,
    n1: usize,
    x2_to: f64,
    n2: usize,
) -> Result<Vec<f64>, JsError> {
    let model = demo::block_model(alpha, t11, t12, t22).map_err(js)?;
    demo::contour(&model, x1_to, n1, x2_to, n2).map_err(js)
}

/// Outcome of [`simulate_and_fit`].
#[wasm_bindgen]
pub struct FitSummary(demo::Fit);

#[wasm_bindgen]
impl FitSummary {
    /// The simulated sample.
    #[wasm_bindgen(getter)]
    pub fn sample(&self) -> Vec<f64> {
        self.0.sample.clone()
    }

    /// Log-likelihood of the starting model and after every iteration.
    #[wasm_bindgen(getter, js_name = logLikelihood)]
    pub fn log_likelihood(&self) -> Vec<f64> {
        self.0.log_likelihood.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn pi(&self) -> Vec<f64> {
        self.0.pi.clone()
    }

    /// Fitted sub-intensity matrix, row-major.
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.0.t.clone()
    }

    /// Fitted transform parameters.
    #[wasm_bindgen(getter)]
    pub fn params(&self) -> Vec<f64> {
        self.0.params.clone()
    }
}

/// Draws `n` values from the named IPH law and fits the same family with
/// `phases` phases.
#[wasm_bindgen(js_name = simulateAndFit)]
#[allow(clippy::too_many_arguments)]
pub fn simulate_and_fit(
    family: &str,
    params: &[f64],
    pi: &[f64],
    t: &[f64],
    n: usize,
    phases: usize,
    iterations: usize,
    seed: u64,
) -> Result<FitSummary, JsError> {
    let truth = demo::iph_model(family, params, pi, t).map_err(js)?;
    demo::simulate_and_fit(&truth, n, phases, iterations, seed)
        .map(FitSummary)
        .map_err(js)
}
