//! Browser bindings. Every export returns a JSON string so the page needs no
//! glue beyond `JSON.parse`.

use reweight_l1::bench::{relative_error, sparse_instance};
use reweight_l1::theory::{eta, gamma, prop2_accuracy, prop2_simulate};
use reweight_l1::{Method, OuterConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct MethodResult {
    pub method: Method,
    pub estimate: Vec<f64>,
    pub rel_err: f64,
    pub outer_iterations: usize,
}

#[derive(Serialize)]
pub struct Comparison {
    pub truth: Vec<f64>,
    pub results: Vec<MethodResult>,
}

pub fn compare(n: usize, big_n: usize, k: usize, seed: u64) -> Result<Comparison, String> {
    if big_n > 1000 {
        return Err("N is capped at 1000 in the demo".into());
    }
    let inst = sparse_instance(big_n, n, k, seed).map_err(|e| e.to_string())?;
    let cfg = OuterConfig::default();
    let mut results = Vec::new();
    for m in Method::ALL {
        let r = m.run(&inst.a, &inst.m, &cfg).map_err(|e| e.to_string())?;
        results.push(MethodResult {
            method: m,
            rel_err: relative_error(&r.solution, &inst.x).map_err(|e| e.to_string())?,
            outer_iterations: r.outer_iterations,
            estimate: r.solution.into_vec(),
        });
    }
    Ok(Comparison {
        truth: inst.x.into_vec(),
        results,
    })
}

#[derive(Serialize)]
pub struct Curve {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `None` where the restricted isometry condition fails.
    pub eta: Vec<Option<f64>>,
}

pub fn constants_curve(omega: f64, a: f64, delta_ak: f64, delta_a1k: f64, points: usize) -> Curve {
    let points = points.clamp(2, 2000);
    let alpha: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    Curve {
        gamma: alpha.iter().map(|&t| gamma(omega, t)).collect(),
        eta: alpha.iter().map(|&t| eta(omega, t, a, delta_ak, delta_a1k).ok()).collect(),
        alpha,
    }
}

#[derive(Serialize)]
pub struct SweepPoint {
    pub s1: usize,
    pub rho: f64,
    pub simulated: f64,
    pub formula: f64,
}

pub fn intersection_sweep(big_n: usize, k: usize, s0: usize, trials: usize, seed: u64) -> Result<Vec<SweepPoint>, String> {
    if trials > 200_000 {
        return Err("at most 200000 trials".into());
    }
    (s0..=k)
        .map(|s1| {
            let sim = prop2_simulate(big_n, k, s0, s1, trials, seed ^ s1 as u64).map_err(|e| e.to_string())?;
            let f = prop2_accuracy(s0, k, sim.rho).map_err(|e| e.to_string())?;
            Ok(SweepPoint {
                s1,
                rho: sim.rho,
                simulated: sim.accuracy,
                formula: f.accuracy,
            })
        })
        .collect()
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

/// Recovers one random sparse signal with l1, IRL1 and SDRL1.
#[wasm_bindgen(js_name = compareMethods)]
pub fn compare_methods(n: usize, big_n: usize, k: usize, seed: u32) -> Result<String, JsValue> {
    to_js(compare(n, big_n, k, seed as u64))
}

/// `gamma` and `eta` over `alpha in [0, 1]`.
#[wasm_bindgen(js_name = constantsCurve)]
pub fn constants_curve_js(omega: f64, a: f64, delta_ak: f64, delta_a1k: f64, points: usize) -> Result<String, JsValue> {
    to_js(Ok(constants_curve(omega, a, delta_ak, delta_a1k, points)))
}

/// Simulated vs closed-form intersection accuracy for `s1 = s0..=k`.
#[wasm_bindgen(js_name = intersectionSweep)]
pub fn intersection_sweep_js(big_n: usize, k: usize, s0: usize, trials: usize, seed: u32) -> Result<String, JsValue> {
    to_js(intersection_sweep(big_n, k, s0, trials, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_has_all_methods() {
        let c = compare(30, 80, 3, 1).unwrap();
        assert_eq!(c.truth.len(), 80);
        assert_eq!(c.results.len(), 3);
        assert!(c.results.iter().all(|r| r.estimate.len() == 80 && r.rel_err < 1e-3));
        assert!(compare(10, 5000, 2, 1).is_err());
    }

    #[test]
    fn curve_marks_undefined_eta() {
        let c = constants_curve(1.0, 3.0, 0.0, 0.6, 11);
        assert_eq!(c.alpha.len(), 11);
        assert!(c.eta.iter().all(Option::is_none));
        let c = constants_curve(0.5, 3.0, 0.1, 0.1, 5);
        assert!(c.eta.iter().all(Option::is_some));
        assert_eq!(c.gamma[4], 0.5);
    }

    #[test]
    fn sweep_covers_s0_to_k() {
        let s = intersection_sweep(500, 10, 6, 2000, 3).unwrap();
        assert_eq!(s.iter().map(|p| p.s1).collect::<Vec<_>>(), (6..=10).collect::<Vec<_>>());
        assert!((s.last().unwrap().simulated - 1.0).abs() < 1e-12);
        assert!(intersection_sweep(500, 10, 6, 1_000_000, 3).is_err());
    }
}
