//! The transverse unit-speed geodesic flow on the conormal bundle of the
//! foliation.
//!
//! Covectors live in the cube chart (z, θ, s and flat factors) away from the
//! poles. The cylindrical sphere metric degenerates at z = ±1, so trajectories
//! entering |z| > 1 − 10⁻³ are handed to a conformal chart around that pole
//! (u = tan(φ/2)·cosθ, v = tan(φ/2)·sinθ, metric 4(du² + dv²)/(1 + r²)²) and
//! handed back once |z| < 1 − 2·10⁻³; the hysteresis gap prevents chart
//! thrashing. Both hand-offs are exact covector transports, so the
//! Hamiltonian H = |ξ|_g is preserved through them to rounding.
//!
//! Covectors at a pole itself are stored in a documented packed form: the
//! base θ slot holds the direction angle β of the covector in the pole
//! chart's (u, v) axes, the ξ_z slot holds the sphere-factor magnitude m,
//! and the ξ_θ slot is zero. Everything that consumes pole covectors
//! (seeding, matching, reversal) goes through this representation.
//!
//! Momenta conjugate to θ, s and the flat factors are conserved in closed
//! form; the integrator's step control is charged for Hamiltonian drift, and
//! every returned arc carries its measured relative drift.

use crate::error::{Error, Result};
use crate::model::{ModelPoint, StratumLabel, SuspensionModel, TWO_PI};
use crate::ode::{dopri_step, StepControl};
use serde::{Deserialize, Serialize};

/// Coordinate chart a raw flow state is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    Cube,
    NorthStereo,
    SouthStereo,
}

/// |z| beyond which the cube chart hands off to a pole chart.
pub const CHART_ENTER: f64 = 1.0 - 1e-3;
/// |z| below which a pole chart hands back to the cube chart.
pub const CHART_EXIT: f64 = 1.0 - 2e-3;
/// Geodesic distance to a pole below which an arc is recorded as touching
/// the minimal stratum.
pub const POLE_TOUCH: f64 = 1e-6;
/// Chart radius below which a state is snapped to the exact pole
/// representation when converted back to a covector. Kept well above the
/// radius where (1 − r²)/(1 + r²) would round to exactly ±1 and silently
/// produce an unpacked pole point.
const POLE_SNAP: f64 = 1e-7;

/// A covector at a model point, in cube-chart components (packed pole form at
/// |z| = 1, see the module docs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CotangentPoint {
    pub base: ModelPoint,
    pub xi: Vec<f64>,
}

impl CotangentPoint {
    pub fn new(model: &SuspensionModel, coords: &[f64], xi: &[f64]) -> Result<Self> {
        let base = ModelPoint::new(model, coords)?;
        if xi.len() != model.total_dim {
            return Err(Error::InvalidInput(format!(
                "covector has {} components, model {} needs {}",
                xi.len(),
                model.kind.as_str(),
                model.total_dim
            )));
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("covector has non-finite components".into()));
        }
        let p = CotangentPoint { base, xi: xi.to_vec() };
        if p.at_pole(model) {
            let zi = model.z_index().unwrap();
            if p.xi[model.theta_index()] != 0.0 {
                return Err(Error::InvalidInput(
                    "pole covectors pack (magnitude, direction) into the (ξ_z, θ) slots; \
                     the ξ_θ slot must be exactly 0"
                        .into(),
                ));
            }
            if p.xi[zi] < 0.0 {
                return Err(Error::InvalidInput("pole covector magnitude must be ≥ 0".into()));
            }
        }
        Ok(p)
    }

    /// Covector at the north (sign > 0) or south pole of the sphere factor,
    /// pointing along direction `beta` with sphere-factor magnitude
    /// `magnitude`; `flat` carries (coordinate, momentum) pairs for the
    /// X factors and `s` the fiber coordinate (its momentum is 0: these
    /// points lie in the conormal bundle by construction).
    pub fn pole(
        model: &SuspensionModel,
        sign: f64,
        beta: f64,
        magnitude: f64,
        flat: &[(f64, f64)],
        s: f64,
    ) -> Result<Self> {
        let zi = model
            .z_index()
            .ok_or_else(|| Error::InvalidInput("model has no sphere factor, so no poles".into()))?;
        if flat.len() != model.n_factors() {
            return Err(Error::InvalidInput(format!(
                "expected {} flat factor pairs, got {}",
                model.n_factors(),
                flat.len()
            )));
        }
        let n = model.total_dim;
        let mut coords = vec![0.0; n];
        let mut xi = vec![0.0; n];
        for (i, &(x, p)) in flat.iter().enumerate() {
            coords[i] = x;
            xi[i] = p;
        }
        coords[zi] = if sign >= 0.0 { 1.0 } else { -1.0 };
        coords[model.theta_index()] = beta.rem_euclid(TWO_PI);
        coords[model.s_index()] = s;
        xi[zi] = magnitude;
        CotangentPoint::new(model, &coords, &xi)
    }

    /// Whether the base point sits exactly on a pole of the sphere factor.
    pub fn at_pole(&self, model: &SuspensionModel) -> bool {
        model.z_index().map(|zi| self.base.coords[zi].abs() == 1.0).unwrap_or(false)
    }

    /// The Hamiltonian H = |ξ|_g at this point.
    pub fn energy(&self, model: &SuspensionModel) -> f64 {
        let mut sq = 0.0;
        for i in 0..model.total_dim {
            let xi = self.xi[i];
            match model.z_index() {
                Some(zi) if i == zi => {
                    let z = self.base.coords[zi];
                    if z.abs() == 1.0 {
                        // packed pole form: this slot is the sphere magnitude
                        sq += xi * xi;
                    } else {
                        sq += (1.0 - z * z) * xi * xi;
                    }
                }
                Some(zi) if i == model.theta_index() => {
                    let z = self.base.coords[zi];
                    if z.abs() < 1.0 {
                        sq += xi * xi / (1.0 - z * z);
                    }
                    // at a pole this slot is exactly 0 by construction
                }
                _ => sq += xi * xi,
            }
        }
        sq.sqrt()
    }

    /// Same point with the covector scaled to unit energy.
    pub fn normalized(&self, model: &SuspensionModel) -> Result<Self> {
        let h = self.energy(model);
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::InvalidInput(format!("cannot normalize covector with |ξ| = {h}")));
        }
        let mut out = self.clone();
        for v in &mut out.xi {
            *v /= h;
        }
        Ok(out)
    }

    /// The covector −ξ at the same base point (for time reversal).
    pub fn reversed(&self, model: &SuspensionModel) -> Self {
        let mut out = self.clone();
        if self.at_pole(model) {
            // packed form: flip the direction angle, keep the magnitude
            let ti = model.theta_index();
            out.base.coords[ti] = (self.base.coords[ti] + 0.5 * TWO_PI).rem_euclid(TWO_PI);
            for (i, v) in out.xi.iter_mut().enumerate() {
                if i != model.z_index().unwrap() {
                    *v = -*v;
                }
            }
        } else {
            for v in &mut out.xi {
                *v = -*v;
            }
        }
        out
    }
}

/// Sup-norm defect of the conormal conditions at this point's leaf closure:
/// at generic points the closure sweeps (θ, s) so ξ_θ and ξ_s must vanish;
/// at a pole it sweeps only s.
pub fn conormal_defect(model: &SuspensionModel, p: &CotangentPoint) -> f64 {
    let xs = p.xi[model.s_index()].abs();
    if p.at_pole(model) {
        xs
    } else {
        xs.max(p.xi[model.theta_index()].abs())
    }
}

pub fn is_conormal(model: &SuspensionModel, p: &CotangentPoint, tol: f64) -> bool {
    conormal_defect(model, p) <= tol
}

/// Geodesic distance from a point to the nearest pole of the sphere factor
/// (None for models without one).
pub fn pole_distance(model: &SuspensionModel, p: &ModelPoint) -> Option<f64> {
    model.z_index().map(|zi| p.coords[zi].abs().min(1.0).acos())
}

/// A finished flow segment with its bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeodesicArc {
    pub start: CotangentPoint,
    /// Flow time = arc length (unit-speed flow).
    pub length: f64,
    pub end: CotangentPoint,
    pub touched_strata: Vec<StratumLabel>,
    /// Max relative Hamiltonian drift seen along the arc.
    pub energy_drift: f64,
    /// Closest approach to a pole along the arc (geodesic distance); None
    /// for models without a sphere factor.
    pub min_pole_distance: Option<f64>,
}

/// One recorded sample along a flow.
#[derive(Clone, Debug)]
pub struct FlowSample {
    pub t: f64,
    pub point: CotangentPoint,
}

// --- raw chart states ---------------------------------------------------

#[derive(Clone, Debug)]
struct ChartState {
    chart: Chart,
    /// positions then momenta; in pole charts the z slot holds u and the θ
    /// slot holds v (same layout length in every chart)
    y: Vec<f64>,
}

fn state_from_point(model: &SuspensionModel, p: &CotangentPoint) -> ChartState {
    let n = model.total_dim;
    let mut y = vec![0.0; 2 * n];
    if p.at_pole(model) {
        let zi = model.z_index().unwrap();
        let ti = model.theta_index();
        let beta = p.base.coords[ti];
        let m = p.xi[zi];
        for i in 0..n {
            if i != zi && i != ti {
                y[i] = p.base.coords[i];
                y[n + i] = p.xi[i];
            }
        }
        // pole chart origin: u = v = 0 and |(ξu, ξv)| = 2m
        y[n + zi] = 2.0 * m * beta.cos();
        y[n + ti] = 2.0 * m * beta.sin();
        let chart =
            if p.base.coords[zi] > 0.0 { Chart::NorthStereo } else { Chart::SouthStereo };
        ChartState { chart, y }
    } else {
        y[..n].copy_from_slice(&p.base.coords);
        y[n..].copy_from_slice(&p.xi);
        ChartState { chart: Chart::Cube, y }
    }
}

fn point_from_state(model: &SuspensionModel, cs: &ChartState) -> Result<CotangentPoint> {
    let n = model.total_dim;
    match cs.chart {
        Chart::Cube => CotangentPoint::new(model, &cs.y[..n], &cs.y[n..]),
        Chart::NorthStereo | Chart::SouthStereo => {
            let zi = model.z_index().unwrap();
            let ti = model.theta_index();
            let (u, v) = (cs.y[zi], cs.y[ti]);
            let r2 = u * u + v * v;
            if r2.sqrt() < POLE_SNAP {
                // snap to the packed pole representation
                let (xu, xv) = (cs.y[n + zi], cs.y[n + ti]);
                let c = 0.5 * (1.0 + r2);
                let m = c * (xu * xu + xv * xv).sqrt();
                let beta = if m > 0.0 { xv.atan2(xu) } else { 0.0 };
                let sign = if cs.chart == Chart::NorthStereo { 1.0 } else { -1.0 };
                let mut coords = cs.y[..n].to_vec();
                let mut xi = cs.y[n..].to_vec();
                coords[zi] = sign;
                coords[ti] = beta.rem_euclid(TWO_PI);
                xi[zi] = m;
                xi[ti] = 0.0;
                CotangentPoint::new(model, &coords, &xi)
            } else {
                let cube = stereo_to_cube(model, &cs.y, cs.chart);
                CotangentPoint::new(model, &cube[..n], &cube[n..])
            }
        }
    }
}

fn cube_to_stereo(model: &SuspensionModel, y: &[f64], chart: Chart) -> Vec<f64> {
    let n = model.total_dim;
    let zi = model.z_index().unwrap();
    let ti = model.theta_index();
    let (z, th) = (y[zi], y[ti]);
    let (xz, xt) = (y[n + zi], y[n + ti]);
    let r = match chart {
        Chart::NorthStereo => ((1.0 - z) / (1.0 + z)).sqrt(),
        Chart::SouthStereo => ((1.0 + z) / (1.0 - z)).sqrt(),
        Chart::Cube => unreachable!(),
    };
    let r2 = r * r;
    let (u, v) = (r * th.cos(), r * th.sin());
    let w = (1.0 + r2) * (1.0 + r2);
    let dz_du = if chart == Chart::NorthStereo { -4.0 / w } else { 4.0 / w };
    let mut out = y.to_vec();
    out[zi] = u;
    out[ti] = v;
    out[n + zi] = dz_du * u * xz - v / r2 * xt;
    out[n + ti] = dz_du * v * xz + u / r2 * xt;
    out
}

fn stereo_to_cube(model: &SuspensionModel, y: &[f64], chart: Chart) -> Vec<f64> {
    let n = model.total_dim;
    let zi = model.z_index().unwrap();
    let ti = model.theta_index();
    let (u, v) = (y[zi], y[ti]);
    let (xu, xv) = (y[n + zi], y[n + ti]);
    let r2 = u * u + v * v;
    let opr = 1.0 + r2;
    let z = match chart {
        Chart::NorthStereo => (1.0 - r2) / opr,
        Chart::SouthStereo => (r2 - 1.0) / opr,
        Chart::Cube => unreachable!(),
    };
    let radial = (u * xu + v * xv) * opr * opr / (4.0 * r2);
    let xz = if chart == Chart::NorthStereo { -radial } else { radial };
    let mut out = y.to_vec();
    out[zi] = z;
    out[ti] = v.atan2(u).rem_euclid(TWO_PI);
    out[n + zi] = xz;
    out[n + ti] = u * xv - v * xu;
    out
}

fn energy_of(model: &SuspensionModel, chart: Chart, y: &[f64]) -> f64 {
    let n = model.total_dim;
    let (q, p) = y.split_at(n);
    let mut sq = 0.0;
    match chart {
        Chart::Cube => {
            for i in 0..n {
                match model.z_index() {
                    Some(zi) if i == zi => {
                        let a = 1.0 - q[zi] * q[zi];
                        sq += a * p[i] * p[i];
                    }
                    Some(zi) if i == model.theta_index() => {
                        let a = 1.0 - q[zi] * q[zi];
                        sq += p[i] * p[i] / a;
                    }
                    _ => sq += p[i] * p[i],
                }
            }
        }
        _ => {
            let zi = model.z_index().unwrap();
            let ti = model.theta_index();
            let r2 = q[zi] * q[zi] + q[ti] * q[ti];
            let c = 0.5 * (1.0 + r2);
            for i in 0..n {
                if i == zi || i == ti {
                    sq += c * c * p[i] * p[i];
                } else {
                    sq += p[i] * p[i];
                }
            }
        }
    }
    sq.sqrt()
}

fn rhs(model: &SuspensionModel, chart: Chart, y: &[f64], dy: &mut [f64]) {
    let n = model.total_dim;
    let (q, p) = y.split_at(n);
    dy.fill(0.0);
    let h = energy_of(model, chart, y);
    match chart {
        Chart::Cube => match model.z_index() {
            None => {
                for i in 0..n {
                    dy[i] = p[i] / h;
                }
            }
            Some(zi) => {
                let ti = model.theta_index();
                let z = q[zi];
                let a = 1.0 - z * z;
                for i in 0..n {
                    dy[i] = if i == zi {
                        a * p[i] / h
                    } else if i == ti {
                        p[i] / (a * h)
                    } else {
                        p[i] / h
                    };
                }
                dy[n + zi] = z / h * (p[zi] * p[zi] - p[ti] * p[ti] / (a * a));
            }
        },
        _ => {
            let zi = model.z_index().unwrap();
            let ti = model.theta_index();
            let (u, v) = (q[zi], q[ti]);
            let r2 = u * u + v * v;
            let c = 0.5 * (1.0 + r2);
            let rho2 = p[zi] * p[zi] + p[ti] * p[ti];
            for i in 0..n {
                dy[i] = if i == zi || i == ti { c * c * p[i] / h } else { p[i] / h };
            }
            dy[n + zi] = -c * u * rho2 / h;
            dy[n + ti] = -c * v * rho2 / h;
        }
    }
}

/// Closest approach to the chart origin along the straight segment between
/// two (u, v) positions; an adequate stand-in for the geodesic inside the
/// tiny pole cap, used only for stratum bookkeeping.
fn segment_min_radius(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (-(a.0 * dx + a.1 * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    (cx * cx + cy * cy).sqrt()
}

fn switch_chart(model: &SuspensionModel, cs: &mut ChartState) {
    let zi = match model.z_index() {
        Some(i) => i,
        None => return,
    };
    let ti = model.theta_index();
    match cs.chart {
        Chart::Cube => {
            let z = cs.y[zi];
            if z > CHART_ENTER {
                cs.y = cube_to_stereo(model, &cs.y, Chart::NorthStereo);
                cs.chart = Chart::NorthStereo;
            } else if z < -CHART_ENTER {
                cs.y = cube_to_stereo(model, &cs.y, Chart::SouthStereo);
                cs.chart = Chart::SouthStereo;
            }
        }
        Chart::NorthStereo | Chart::SouthStereo => {
            let r2 = cs.y[zi] * cs.y[zi] + cs.y[ti] * cs.y[ti];
            let z_abs = ((1.0 - r2) / (1.0 + r2)).abs();
            if z_abs < CHART_EXIT {
                cs.y = stereo_to_cube(model, &cs.y, cs.chart);
                cs.chart = Chart::Cube;
            }
        }
    }
}

/// Flow the covector for `length` time units and record every accepted step.
pub fn hamiltonian_flow_recorded(
    model: &SuspensionModel,
    start: &CotangentPoint,
    length: f64,
    control: &StepControl,
) -> Result<(GeodesicArc, Vec<FlowSample>)> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidInput(format!("flow length must be positive, got {length}")));
    }
    if start.xi[model.s_index()] != 0.0 {
        return Err(Error::InvalidInput(
            "flow starts must lie in the conormal bundle of the foliation (ξ_s = 0)".into(),
        ));
    }
    let h0 = start.energy(model);
    if !(h0 > 0.0) {
        return Err(Error::InvalidInput("flow needs positive energy".into()));
    }
    let n = model.total_dim;
    let mut cs = state_from_point(model, start);
    switch_chart(model, &mut cs);
    let mut samples = vec![FlowSample { t: 0.0, point: start.clone() }];
    let mut t = 0.0;
    let mut h_step: f64 = control.max_step.min(length);
    let mut max_drift = 0.0f64;
    let mut min_pole = pole_distance(model, &start.base).unwrap_or(f64::INFINITY);
    let mut steps = 0usize;
    while t < length {
        steps += 1;
        if steps > control.max_steps {
            return Err(Error::IntegrationFailure(format!(
                "step budget {} exhausted at t = {t}",
                control.max_steps
            )));
        }
        // stay well clear of the coordinate singularity within a single step
        let mut cap = control.max_step;
        if cs.chart == Chart::Cube {
            if let Some(zi) = model.z_index() {
                if cs.y[zi].abs() > 0.9 {
                    cap = cap.min(0.01);
                }
            }
        }
        let h_try = h_step.min(cap).min(length - t);
        let chart = cs.chart;
        let f = |y: &[f64], dy: &mut [f64]| rhs(model, chart, y, dy);
        let (y5, err) = dopri_step(&f, &cs.y, h_try);
        let mut err_norm = 0.0f64;
        for i in 0..2 * n {
            let scale = control.rel_tol * (1.0 + cs.y[i].abs().max(y5[i].abs()));
            err_norm += (err[i] / scale).powi(2);
        }
        err_norm = (err_norm / (2 * n) as f64).sqrt();
        let e_new = energy_of(model, chart, &y5);
        let e_old = energy_of(model, chart, &cs.y);
        let drift_step = (e_new - e_old).abs() / h0;
        let charge = err_norm.max(drift_step / control.energy_tol);
        if charge.is_finite() && charge <= 1.0 {
            if cs.chart != Chart::Cube {
                let zi = model.z_index().unwrap();
                let ti = model.theta_index();
                let r_min = segment_min_radius((cs.y[zi], cs.y[ti]), (y5[zi], y5[ti]));
                min_pole = min_pole.min(2.0 * r_min.atan());
            }
            t += h_try;
            if length - t <= f64::EPSILON * length {
                t = length;
            }
            cs.y = y5;
            max_drift = max_drift.max((e_new - h0).abs() / h0);
            samples.push(FlowSample { t, point: point_from_state(model, &cs)? });
            switch_chart(model, &mut cs);
        }
        let factor = if !charge.is_finite() {
            0.2
        } else if charge > 0.0 {
            (0.9 * charge.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h_step = (h_try * factor).min(control.max_step);
        if t < length && h_step < 1e-14 * length.max(1.0) {
            return Err(Error::IntegrationFailure(format!("step size underflow at t = {t}")));
        }
    }
    let end = point_from_state(model, &cs)?;
    if let Some(d) = pole_distance(model, &end.base) {
        min_pole = min_pole.min(d);
    }
    if max_drift > 1e-8 {
        return Err(Error::IntegrationFailure(format!(
            "energy drift {max_drift} exceeds the 1e-8 arc tolerance"
        )));
    }
    let mut touched = vec![model.classify_point(&start.base)];
    let interior = StratumLabel { closure_dim: 2, is_minimal: false, is_regular: true };
    if !touched.contains(&interior) {
        touched.push(interior);
    }
    if model.z_index().is_some() && min_pole <= POLE_TOUCH {
        let minimal = StratumLabel { closure_dim: 1, is_minimal: true, is_regular: false };
        if !touched.contains(&minimal) {
            touched.push(minimal);
        }
    }
    let end_label = model.classify_point(&end.base);
    if !touched.contains(&end_label) {
        touched.push(end_label);
    }
    let arc = GeodesicArc {
        start: start.clone(),
        length,
        end,
        touched_strata: touched,
        energy_drift: max_drift,
        min_pole_distance: model.z_index().map(|_| min_pole),
    };
    Ok((arc, samples))
}

/// Flow the covector for `length` time units.
pub fn hamiltonian_flow(
    model: &SuspensionModel,
    start: &CotangentPoint,
    length: f64,
    control: &StepControl,
) -> Result<GeodesicArc> {
    hamiltonian_flow_recorded(model, start, length, control).map(|(arc, _)| arc)
}

/// Outcome of a holonomy-transport match between two conormal covectors.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub matched: bool,
    /// True when the match needed the closure of the pole holonomy orbit
    /// (return direction rotated relative to the start).
    pub used_closure_match: bool,
    /// Sup-norm mismatch over the compared components (∞ on stratum
    /// mismatch, serialized as null).
    pub defect: f64,
}

pub fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Decide whether `b` lies on the holonomy-transport orbit closure of `a`,
/// within `tol` per compared component.
///
/// Regular stratum: same leaf closure (equal transverse base coordinates)
/// and equal transverse momenta; θ and s are free. Minimal stratum (sphere
/// pole): same pole and equal sphere magnitude; the return direction is free
/// because the holonomy orbit of a pole covector is dense in its circle of
/// directions, and the match is flagged when that closure rule is what made
/// it succeed. A near-pole `b` (within `tol` of the pole) is treated as a
/// pole point with the magnitude and direction read off its covector.
pub fn holonomy_match(
    model: &SuspensionModel,
    a: &CotangentPoint,
    b: &CotangentPoint,
    tol: f64,
) -> MatchOutcome {
    const MISMATCH: MatchOutcome =
        MatchOutcome { matched: false, used_closure_match: false, defect: f64::INFINITY };
    if a.at_pole(model) {
        let (sign_b, beta_b, m_b, base_defect) = match pole_form(model, b, tol) {
            None => return MISMATCH,
            Some(f) => f,
        };
        let zi = model.z_index().unwrap();
        let sign_a = a.base.coords[zi];
        if sign_a * sign_b < 0.0 {
            return MISMATCH;
        }
        let mut defect = base_defect;
        defect = defect.max((a.xi[zi] - m_b).abs());
        // flat factors: base positions mod period, momenta exactly
        for i in 0..model.n_factors() {
            let period = model.period(i).unwrap();
            defect = defect.max(circular_distance(a.base.coords[i], b.base.coords[i], period));
            defect = defect.max((a.xi[i] - b.xi[i]).abs());
        }
        defect = defect.max(b.xi[model.s_index()].abs());
        let beta_a = a.base.coords[model.theta_index()];
        let rotated = circular_distance(beta_a, beta_b, TWO_PI) > tol;
        MatchOutcome {
            matched: defect <= tol,
            used_closure_match: defect <= tol && rotated,
            defect,
        }
    } else {
        // regular stratum: reject a pole-like b
        if b.at_pole(model) || pole_distance(model, &b.base).map_or(false, |d| d <= tol) {
            return MISMATCH;
        }
        let mut defect = 0.0f64;
        for &i in &model.transverse_indices() {
            match model.period(i) {
                Some(period) => {
                    defect = defect.max(circular_distance(a.base.coords[i], b.base.coords[i], period))
                }
                None => defect = defect.max((a.base.coords[i] - b.base.coords[i]).abs()),
            }
            defect = defect.max((a.xi[i] - b.xi[i]).abs());
        }
        defect = defect.max(conormal_defect(model, b));
        MatchOutcome { matched: defect <= tol, used_closure_match: false, defect }
    }
}

/// View `b` as a pole covector if it is one or sits within `tol` of a pole:
/// (pole sign, direction angle, sphere magnitude, base defect).
fn pole_form(
    model: &SuspensionModel,
    b: &CotangentPoint,
    tol: f64,
) -> Option<(f64, f64, f64, f64)> {
    let zi = model.z_index()?;
    let ti = model.theta_index();
    if b.at_pole(model) {
        return Some((b.base.coords[zi], b.base.coords[ti], b.xi[zi], 0.0));
    }
    let dist = pole_distance(model, &b.base)?;
    if dist > tol {
        return None;
    }
    let z = b.base.coords[zi];
    let sign = if z > 0.0 { 1.0 } else { -1.0 };
    // read the direction and magnitude in the pole chart
    let n = model.total_dim;
    let mut y = vec![0.0; 2 * n];
    y[..n].copy_from_slice(&b.base.coords);
    y[n..].copy_from_slice(&b.xi);
    let chart = if sign > 0.0 { Chart::NorthStereo } else { Chart::SouthStereo };
    let st = cube_to_stereo(model, &y, chart);
    let (xu, xv) = (st[n + zi], st[n + ti]);
    let r2 = st[zi] * st[zi] + st[ti] * st[ti];
    let c = 0.5 * (1.0 + r2);
    let m = c * (xu * xu + xv * xv).sqrt();
    let beta = xv.atan2(xu).rem_euclid(TWO_PI);
    Some((sign, beta, m, dist))
}
