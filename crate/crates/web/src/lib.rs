//! Browser demo for the `modent` stability laboratory.
//!
//! Every export takes plain numbers and returns a JSON string. Errors come
//! back as `{"error": "..."}` so the page never has to catch exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use modent::constants::{c_n, d_n, k_const};
use modent::fit::{verdict, SearchRange};
use modent::glue::{build_phi, GlueInstance};
use modent::model::{AlphaCase, Box3, SolutionFamily};
use modent::perturb::{perturb, NoiseField, NoiseMode};

/// Largest `n` the constants curve accepts.
pub const MAX_N: u32 = 200;
/// Lattice step of demo glue instances.
pub const GLUE_STEP: f64 = 0.125;
/// Family coefficient of demo candidates.
pub const DEMO_A: f64 = 2.0;

#[derive(Debug, Serialize)]
pub struct ConstantsCurve {
    pub alpha: f64,
    pub k: f64,
    pub n: Vec<u32>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

/// `K(alpha)` and `c_n, d_n` for `n = 1..=n_max`.
pub fn constants_curve_data(alpha: f64, n_max: u32) -> modent::Result<ConstantsCurve> {
    if n_max == 0 || n_max > MAX_N {
        return Err(modent::Error::usage(format!("n_max must lie in 1..={MAX_N}")));
    }
    let n: Vec<u32> = (1..=n_max).collect();
    let c = n.iter().map(|&i| c_n(alpha, i)).collect::<modent::Result<Vec<_>>>()?;
    let d = n.iter().map(|&i| d_n(alpha, i)).collect::<modent::Result<Vec<_>>>()?;
    Ok(ConstantsCurve { alpha, k: k_const(alpha)?, n, c, d })
}

#[derive(Debug, Serialize)]
pub struct GlueDemo {
    pub eps: f64,
    pub dev_a: f64,
    pub dev_b: f64,
    pub within_bounds: bool,
    pub worst_b: (f64, f64),
    pub knots: Vec<f64>,
    pub phi: Vec<f64>,
    /// Underlying exact sum-function `g(s) = s^2` at the knots.
    pub exact: Vec<f64>,
    pub windows: Vec<(f64, f64)>,
}

/// Seeded near-associative instance glued into a sum-function.
pub fn glue_demo_data(seed: u64, amplitude: f64, u_len: f64, v_len: f64, w_len: f64) -> modent::Result<GlueDemo> {
    let inst = GlueInstance::seeded(seed, amplitude, [u_len, v_len, w_len], GLUE_STEP)?;
    let (eps, _) = inst.measure_eps();
    let res = build_phi(&inst, eps)?;
    let knots = res.phi.knots().to_vec();
    Ok(GlueDemo {
        eps,
        dev_a: res.dev_a,
        dev_b: res.dev_b,
        within_bounds: res.within_bounds(eps),
        worst_b: res.worst_b,
        exact: knots.iter().map(|s| s * s).collect(),
        phi: res.phi.values().to_vec(),
        knots,
        windows: res.cover.iter().map(|w| (w.w1, w.w2)).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct VerdictDemo {
    pub alpha: f64,
    pub box_lo: f64,
    pub box_hi: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub best_a: f64,
    pub sup_error: f64,
    pub bound_label: String,
    pub bound_value: f64,
    pub pass: bool,
    pub knots: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Perturbed family member, its fit and the stability verdict. For
/// `alpha > 0` the box is `]0, 1]^3` with `n = 1`, otherwise `]0, 4]^3`.
pub fn verdict_demo_data(alpha: f64, amplitude: f64, seed: u64, symmetric: bool, grid: usize) -> modent::Result<VerdictDemo> {
    let case = AlphaCase::new(alpha)?;
    if !(2..=24).contains(&grid) {
        return Err(modent::Error::usage("grid must lie in 2..=24"));
    }
    let (hi, n) = if alpha > 0.0 { (1.0, Some(1)) } else { (4.0, None) };
    let b = Box3::with_default_lo(hi, grid)?;
    let mode = if symmetric { NoiseMode::Symmetric } else { NoiseMode::General };
    let fam = SolutionFamily::closed_constant_for_box(DEMO_A, alpha, &b)?;
    let f = perturb(fam, NoiseField::for_box(seed, amplitude, &b, mode)?, b);
    let rep = verdict(&f, &case, &b, n, &SearchRange::default())?;
    Ok(VerdictDemo {
        alpha,
        box_lo: b.lo(),
        box_hi: b.n(),
        eps1: rep.eps.eps1,
        eps2: rep.eps.eps2,
        best_a: rep.best_a,
        sup_error: rep.sup_error,
        bound_label: rep.bound.label.clone(),
        bound_value: rep.bound_value,
        pass: rep.pass,
        knots: rep.phi.knots().to_vec(),
        phi: rep.phi.values().to_vec(),
    })
}

fn to_json<T: Serialize>(r: modent::Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

#[wasm_bindgen]
pub fn constants_curve(alpha: f64, n_max: u32) -> String {
    to_json(constants_curve_data(alpha, n_max))
}

#[wasm_bindgen]
pub fn glue_demo(seed: u32, amplitude: f64, u_len: f64, v_len: f64, w_len: f64) -> String {
    to_json(glue_demo_data(seed as u64, amplitude, u_len, v_len, w_len))
}

#[wasm_bindgen]
pub fn verdict_demo(alpha: f64, amplitude: f64, seed: u32, symmetric: bool, grid: u32) -> String {
    to_json(verdict_demo_data(alpha, amplitude, seed as u64, symmetric, grid as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_curve_starts_at_known_values() {
        let c = constants_curve_data(2.0, 4).unwrap();
        assert_eq!(c.k, 2406.0);
        assert_eq!(c.c[0], 67370.0);
        assert_eq!(c.d[3], 4311556.0);
        assert!(constants_curve_data(2.0, 0).is_err());
    }

    #[test]
    fn errors_are_json_objects() {
        let v: serde_json::Value = serde_json::from_str(&constants_curve(1.0, 3)).unwrap();
        assert!(v["error"].is_string());
        let v: serde_json::Value = serde_json::from_str(&verdict_demo(-1.0, 1e-3, 1, false, 1)).unwrap();
        assert!(v["error"].is_string());
    }

    #[test]
    fn glue_demo_without_noise_recovers_the_square() {
        let g = glue_demo_data(7, 0.0, 1.0, 1.0, 2.0).unwrap();
        assert!(g.eps <= 1e-12 && g.within_bounds);
        for (p, e) in g.phi.iter().zip(&g.exact) {
            assert!((p - e).abs() <= 1e-12);
        }
    }

    #[test]
    fn verdict_demo_passes_for_small_noise() {
        for alpha in [-1.0, 0.0, 2.0] {
            let v = verdict_demo_data(alpha, 1e-3, 3, false, 8).unwrap();
            assert!(v.pass, "alpha = {alpha}: {v:?}");
            assert!(v.sup_error <= v.bound_value);
        }
        let json: serde_json::Value = serde_json::from_str(&verdict_demo(2.0, 1e-3, 3, true, 8)).unwrap();
        assert_eq!(json["pass"], true);
    }
}
