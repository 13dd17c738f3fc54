//! WebAssembly bindings for the static page in `www/`.
//!
//! Each exported function returns a JSON string; the `*_json` variants hold
//! the logic and run natively in tests.

use entroq::channels::{depolarizing, LocalStochasticNoise};
use entroq::functionals::{crash_time, temporal_report, zeta, CrashTime, FreeEnergyParams};
use entroq::linalg::random_density;
use entroq::spatial::{eq3_bound, max_qubit_count_for, min_block_size};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Registers up to this size are simulated exactly in the browser.
pub const MAX_DEMO_QUBITS: usize = 4;
pub const MAX_DEMO_STEPS: u64 = 200;

fn js<T>(r: Result<T, String>) -> Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct CurvePoint {
    m: u64,
    gain: Option<f64>,
    bound: f64,
    linearized: f64,
    delta_f: f64,
}

#[derive(Debug, Serialize)]
struct Curve {
    zeta: f64,
    c: f64,
    points: Vec<CurvePoint>,
}

/// Exact entropy gain of a seeded random state under local depolarizing
/// noise, with the closed-form lower bound, for `m = 0..=m_max`.
#[allow(clippy::too_many_arguments)]
pub fn entropy_curve_json(
    qubits: usize,
    rank: usize,
    seed: u64,
    epsilon: f64,
    lambda: f64,
    beta: f64,
    energy: f64,
    m_max: u64,
) -> Result<String, String> {
    if qubits == 0 || qubits > MAX_DEMO_QUBITS {
        return Err(format!("qubits must be in 1..={MAX_DEMO_QUBITS}"));
    }
    if m_max > MAX_DEMO_STEPS {
        return Err(format!("at most {MAX_DEMO_STEPS} steps"));
    }
    let rho = random_density(1 << qubits, rank, seed).map_err(|e| e.to_string())?;
    let channel = depolarizing(lambda, 2).map_err(|e| e.to_string())?;
    let noise = LocalStochasticNoise::new(epsilon, channel, qubits).map_err(|e| e.to_string())?;
    let params = FreeEnergyParams::new(beta, energy).map_err(|e| e.to_string())?;
    let rows = temporal_report(&rho, &noise, &params, m_max).map_err(|e| e.to_string())?;
    let points = rows
        .into_iter()
        .map(|r| CurvePoint {
            m: r.m,
            gain: r.entropy_gain_exact,
            bound: r.eq2_closed_form,
            linearized: r.linearized,
            delta_f: r.free_energy_shift,
        })
        .collect();
    let curve = Curve { zeta: zeta(&rho, qubits).map_err(|e| e.to_string())?, c: 1.0 - lambda, points };
    to_json(&curve)
}

#[derive(Debug, Serialize)]
struct CrashSummary {
    linearized: CrashTime,
    exact: CrashTime,
    beta_e: f64,
    n_crash: u64,
}

/// Step and block counts at which the certified free-energy shift turns
/// negative.
pub fn crash_summary_json(
    beta: f64,
    energy: f64,
    zeta_value: f64,
    epsilon: f64,
    lambda: f64,
    kappa: f64,
) -> Result<String, String> {
    let params = FreeEnergyParams::new(beta, energy).map_err(|e| e.to_string())?;
    depolarizing(lambda, 2).map_err(|e| e.to_string())?;
    let r = crash_time(&params, zeta_value, epsilon, 1.0 - lambda).map_err(|e| e.to_string())?;
    let q = max_qubit_count_for(r.beta_e, kappa).map_err(|e| e.to_string())?;
    to_json(&CrashSummary { linearized: r.linearized, exact: r.exact_bound, beta_e: r.beta_e, n_crash: q.n_crash })
}

#[derive(Debug, Serialize)]
struct BlockTable {
    min_block_size: Option<usize>,
    bounds: Vec<(usize, f64)>,
}

/// Overlap bound for block sizes `1..=k_max` and the smallest block size
/// keeping it at or below one.
pub fn block_table_json(n: usize, d: usize, lambda: f64, k_max: usize) -> Result<String, String> {
    if n == 0 || d == 0 || k_max == 0 || k_max > 64 {
        return Err("need n, d >= 1 and 1 <= k_max <= 64".into());
    }
    let min = match min_block_size(n, d, lambda) {
        Ok(k) => Some(k),
        Err(entroq::Error::Unreachable(_)) => None,
        Err(e) => return Err(e.to_string()),
    };
    let bounds = (1..=k_max).map(|k| (k, eq3_bound(n, k, d, lambda))).collect();
    to_json(&BlockTable { min_block_size: min, bounds })
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn entropy_curve(
    qubits: usize,
    rank: usize,
    seed: u32,
    epsilon: f64,
    lambda: f64,
    beta: f64,
    energy: f64,
    m_max: u32,
) -> Result<String, JsValue> {
    js(entropy_curve_json(qubits, rank, seed.into(), epsilon, lambda, beta, energy, m_max.into()))
}

#[wasm_bindgen]
pub fn crash_summary(
    beta: f64,
    energy: f64,
    zeta_value: f64,
    epsilon: f64,
    lambda: f64,
    kappa: f64,
) -> Result<String, JsValue> {
    js(crash_summary_json(beta, energy, zeta_value, epsilon, lambda, kappa))
}

#[wasm_bindgen]
pub fn block_table(n: usize, d: usize, lambda: f64, k_max: usize) -> Result<String, JsValue> {
    js(block_table_json(n, d, lambda, k_max))
}
