//! Browser bindings. Rates are in units of `γ`; the coupling is the
//! Hermite-Gaussian one, `C_nm/γ = d O_nm τ_s²`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;

use spopo::homodyne::{
    frequency_grid, spectrum_quadratics, squeezing_report, to_db, Provenance,
};
use spopo::pert::OscillatorParams;
use wasm_bindgen::prelude::*;

const N_MAX: usize = 12;

fn provenance(method: &str) -> Result<Provenance, String> {
    match method {
        "pert2" => Ok(Provenance::Pert2),
        "pert4" => Ok(Provenance::Pert4),
        "exact" => Ok(Provenance::Exact),
        other => Err(format!("unknown method '{other}'")),
    }
}

/// `single` pumps mode 0; `equal` pumps modes 0-4 at the same level.
fn params(lambda: f64, d: f64, pump: &str) -> Result<OscillatorParams, String> {
    let gains = match pump {
        "single" => vec![lambda],
        "equal" => vec![lambda; 5],
        other => return Err(format!("unknown pump profile '{other}'")),
    };
    if !(0.0..1.0).contains(&lambda) {
        return Err(format!("λ/γ = {lambda} must be in [0, 1)"));
    }
    if !(d >= 0.0) {
        return Err(format!("d = {d} must be non-negative"));
    }
    OscillatorParams::hermite_gaussian(&gains, N_MAX, d, 0.0).map_err(|e| e.to_string())
}

/// Spectra of one mode over `Ω/γ ∈ [-half_span, half_span]`.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    omega: Vec<f64>,
    fixed_db: Vec<f64>,
    optimal_db: Vec<f64>,
    optimal_phi: Vec<f64>,
}

#[wasm_bindgen]
impl Curves {
    #[wasm_bindgen(getter)]
    pub fn omega(&self) -> Vec<f64> {
        self.omega.clone()
    }
    /// `S` at the requested phase [dB].
    #[wasm_bindgen(getter)]
    pub fn fixed_db(&self) -> Vec<f64> {
        self.fixed_db.clone()
    }
    /// `S` at the best phase for each frequency [dB].
    #[wasm_bindgen(getter)]
    pub fn optimal_db(&self) -> Vec<f64> {
        self.optimal_db.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn optimal_phi(&self) -> Vec<f64> {
        self.optimal_phi.clone()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn compute_curves(
    lambda: f64,
    d: f64,
    pump: &str,
    mode: usize,
    phi: f64,
    method: &str,
    half_span: f64,
    points: usize,
) -> Result<Curves, String> {
    let p = params(lambda, d, pump)?;
    let omega = frequency_grid(half_span, points).map_err(|e| e.to_string())?;
    let q = spectrum_quadratics(&p, &omega, mode, provenance(method)?).map_err(|e| e.to_string())?;
    let opt: Vec<_> = q.iter().map(|q| q.optimum()).collect();
    Ok(Curves {
        fixed_db: q.iter().map(|q| to_db(q.eval(phi))).collect(),
        optimal_db: opt.iter().map(|o| to_db(o.value)).collect(),
        optimal_phi: opt.iter().map(|o| o.phi).collect(),
        omega,
    })
}

/// `S(Ω, φ)` in dB, row-major with one row per phase `φ_k = kπ/phases`.
pub fn compute_phase_map(
    lambda: f64,
    d: f64,
    pump: &str,
    mode: usize,
    half_span: f64,
    points: usize,
    phases: usize,
) -> Result<Vec<f64>, String> {
    let p = params(lambda, d, pump)?;
    let omega = frequency_grid(half_span, points).map_err(|e| e.to_string())?;
    let q = spectrum_quadratics(&p, &omega, mode, Provenance::Pert2).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(points * phases);
    for k in 0..phases {
        let phi = PI * k as f64 / phases as f64;
        out.extend(q.iter().map(|q| to_db(q.eval(phi))));
    }
    Ok(out)
}

/// Per mode `0..5` at `Ω = 0`: best suppression without dispersion, with
/// it, and the optimal phase with it, as consecutive triples.
pub fn compute_bars(lambda: f64, d: f64, pump: &str, method: &str) -> Result<Vec<f64>, String> {
    let p = params(lambda, d, pump)?;
    let rows = squeezing_report(&p, &[0, 1, 2, 3, 4], provenance(method)?)
        .map_err(|e| e.to_string())?;
    Ok(rows
        .iter()
        .flat_map(|r| [r.without_db, r.with_db, r.phi_with])
        .collect())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn curves(
    lambda: f64,
    d: f64,
    pump: &str,
    mode: usize,
    phi: f64,
    method: &str,
    half_span: f64,
    points: usize,
) -> Result<Curves, JsError> {
    compute_curves(lambda, d, pump, mode, phi, method, half_span, points)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn phase_map(
    lambda: f64,
    d: f64,
    pump: &str,
    mode: usize,
    half_span: f64,
    points: usize,
    phases: usize,
) -> Result<Vec<f64>, JsError> {
    compute_phase_map(lambda, d, pump, mode, half_span, points, phases).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bars(lambda: f64, d: f64, pump: &str, method: &str) -> Result<Vec<f64>, JsError> {
    compute_bars(lambda, d, pump, method).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_without_dispersion() {
        let c = compute_curves(0.48, 0.0, "single", 0, PI / 2.0, "pert2", 5.0, 11).unwrap();
        assert_eq!(c.omega.len(), 11);
        assert!((c.fixed_db[5] + 9.085).abs() < 1e-3);
        assert_eq!(c.fixed_db, c.optimal_db);
    }

    #[test]
    fn phase_map_shape() {
        let m = compute_phase_map(0.33, 0.25, "single", 0, 5.0, 21, 8).unwrap();
        assert_eq!(m.len(), 168);
        // φ = π/2 row is the most squeezed at Ω = 0 without much rotation
        let row = |k: usize| m[k * 21 + 10];
        assert!(row(4) < row(0));
    }

    #[test]
    fn bars_triples() {
        let b = compute_bars(0.48, 0.25, "equal", "pert2").unwrap();
        assert_eq!(b.len(), 15);
        assert!((b[1] - b[0] - 1.94).abs() < 0.05);
    }

    #[test]
    fn bad_inputs() {
        assert!(compute_bars(1.2, 0.25, "equal", "pert2").is_err());
        assert!(compute_bars(0.4, 0.25, "ramp", "pert2").is_err());
        assert!(compute_curves(0.4, 0.25, "single", 12, 0.0, "pert2", 5.0, 11).is_err());
        assert!(compute_curves(0.4, 0.25, "single", 0, 0.0, "pert3", 5.0, 11).is_err());
    }
}
