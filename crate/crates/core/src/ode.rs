//! Adaptive explicit Runge–Kutta integration with conserved-quantity step
//! control.
//!
//! The scheme is the Dormand–Prince 5(4) pair. On top of the usual embedded
//! error estimate, each trial step is also charged for the drift it causes in
//! a caller-supplied conserved quantity (the flow module passes the
//! Hamiltonian), with a per-step relative target of 10⁻¹⁰ by default. Both
//! controls scale like h⁵ locally, so one step-size update rule serves them.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// fifth-order solution weights (also the seventh stage position)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// embedded fourth-order weights
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

/// Step-size policy and tolerances.
#[derive(Clone, Copy, Debug)]
pub struct StepControl {
    /// Relative (and absolute) tolerance for the embedded error estimate.
    pub rel_tol: f64,
    /// Per-step relative drift allowed in the conserved quantity.
    pub energy_tol: f64,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: usize,
    /// Upper bound on the step size (also the initial trial size).
    pub max_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { rel_tol: 1e-10, energy_tol: 1e-10, max_steps: 2_000_000, max_step: 0.1 }
    }
}

/// One Dormand–Prince step of size h from y. Returns the fifth-order solution
/// and the embedded-difference error vector.
pub fn dopri_step(f: &impl Fn(&[f64], &mut [f64]), y: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut k1 = vec![0.0; n];
    f(y, &mut k1);
    let mut tmp = vec![0.0; n];
    let stage = |tmp: &mut Vec<f64>, coeffs: &[(f64, &Vec<f64>)]| {
        for i in 0..n {
            let mut acc = y[i];
            for (c, k) in coeffs {
                acc += h * c * k[i];
            }
            tmp[i] = acc;
        }
    };
    let mut k2 = vec![0.0; n];
    stage(&mut tmp, &[(A21, &k1)]);
    f(&tmp, &mut k2);
    let mut k3 = vec![0.0; n];
    stage(&mut tmp, &[(A31, &k1), (A32, &k2)]);
    f(&tmp, &mut k3);
    let mut k4 = vec![0.0; n];
    stage(&mut tmp, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
    f(&tmp, &mut k4);
    let mut k5 = vec![0.0; n];
    stage(&mut tmp, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
    f(&tmp, &mut k5);
    let mut k6 = vec![0.0; n];
    stage(&mut tmp, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
    f(&tmp, &mut k6);
    let mut y5 = vec![0.0; n];
    for i in 0..n {
        y5[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    let mut k7 = vec![0.0; n];
    f(&y5, &mut k7);
    let mut err = vec![0.0; n];
    for i in 0..n {
        let y4 = y[i]
            + h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        err[i] = y5[i] - y4;
    }
    (y5, err)
}

/// Integrate dy/dt = f(y) from t0 to t1 (t1 > t0), calling `on_sample(t, y)`
/// after every accepted step (and once for the initial state). `invariant`
/// is the conserved quantity used for drift control.
pub fn integrate(
    f: &impl Fn(&[f64], &mut [f64]),
    invariant: &impl Fn(&[f64]) -> f64,
    y0: &[f64],
    t0: f64,
    t1: f64,
    control: &StepControl,
    mut on_sample: impl FnMut(f64, &[f64]),
) -> Result<Vec<f64>> {
    if !(t1 > t0) {
        return Err(Error::InvalidInput(format!("integration span [{t0}, {t1}] is empty")));
    }
    let mut y = y0.to_vec();
    let mut t = t0;
    let e0 = invariant(&y);
    let e_scale = e0.abs().max(1e-12);
    on_sample(t, &y);
    let mut h = control.max_step.min(t1 - t0);
    let min_step = 1e-14 * (t1 - t0).max(1.0);
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > control.max_steps {
            return Err(Error::IntegrationFailure(format!(
                "step budget {} exhausted at t = {t}",
                control.max_steps
            )));
        }
        let h_try = h.min(t1 - t);
        let (y5, err) = dopri_step(f, &y, h_try);
        let mut err_norm = 0.0f64;
        for i in 0..y.len() {
            let scale = control.rel_tol * (1.0 + y[i].abs().max(y5[i].abs()));
            err_norm += (err[i] / scale).powi(2);
        }
        err_norm = (err_norm / y.len() as f64).sqrt();
        let e_prev = invariant(&y);
        let drift = (invariant(&y5) - e_prev).abs() / e_scale;
        let charge = err_norm.max(drift / control.energy_tol);
        if charge <= 1.0 {
            t += h_try;
            y = y5;
            on_sample(t, &y);
        }
        let factor = if charge > 0.0 { 0.9 * charge.powf(-0.2) } else { 5.0 };
        h = (h_try * factor.clamp(0.2, 5.0)).min(control.max_step);
        if h < min_step {
            return Err(Error::IntegrationFailure(format!("step size underflow at t = {t}")));
        }
    }
    Ok(y)
}
