//! Detection and classification of sojourn times: lengths T of transverse
//! geodesic arcs that are relatively closed, meaning the arc starts and ends
//! conormal to leaf closures and its endpoint lies on the holonomy-transport
//! orbit closure of its start.
//!
//! Detection per seed runs in three stages. The seed is flowed once over the
//! full search window with samples recorded; one or two scalar event
//! functions whose zeros are candidate return times are scanned for sign
//! changes over the samples; each bracketed root is sharpened by bisection
//! (re-flowing short segments from the bracket's left sample) and the
//! resulting endpoint is verified against the start with [`holonomy_match`].
//! Every confirmed time is then re-flowed from the seed in one piece so the
//! witness arc carries honest stratum and energy bookkeeping.
//!
//! The seed sweep in [`enumerate_sojourn_times`] is deterministic: stratified
//! lattices of base points with axis covector directions, the poles of the
//! sphere factor seeded explicitly, and for product models a short list of
//! resonant mixed directions (flat winding m, meridian winding n) whose
//! closing lengths √((mℓ)² + (2πn)²) fall inside the window. A uniform
//! direction lattice alone cannot land on those resonances, so they are
//! seeded by construction; results are bit-for-bit reproducible for a given
//! budget.

use crate::error::{Error, Result};
use crate::flow::{
    hamiltonian_flow, hamiltonian_flow_recorded, holonomy_match, CotangentPoint, FlowSample,
    GeodesicArc,
};
use crate::model::{ModelKind, SuspensionModel, TWO_PI};
use crate::ode::StepControl;
use serde::{Deserialize, Serialize};

/// Default matching tolerance in covector sup norm at unit energy.
pub const DEFAULT_MATCH_TOL: f64 = 1e-6;
/// Candidate returns earlier than this are the seed's own start.
const MIN_RETURN_TIME: f64 = 1e-3;

/// How a sojourn time sits relative to the stratification of the leaf
/// closure space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    /// The witness arc never leaves the maximal stratum.
    Regular,
    /// The witness crosses a smaller stratum but its endpoints are generic.
    Singular,
    /// Both endpoints of the witness lie in the minimal stratum.
    Minimal,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Regular => "regular",
            Classification::Singular => "singular",
            Classification::Minimal => "minimal",
        }
    }

    /// Preference order when one merged time has witnesses of several
    /// kinds: a regular witness pins the time to the maximal stratum, and a
    /// minimal one is more specific than a generic singular crossing.
    fn rank(&self) -> u8 {
        match self {
            Classification::Regular => 0,
            Classification::Minimal => 1,
            Classification::Singular => 2,
        }
    }
}

/// Classify one arc from its recorded strata and endpoint positions.
pub fn classify_arc(model: &SuspensionModel, arc: &GeodesicArc) -> Classification {
    if arc.touched_strata.iter().all(|s| s.is_regular) {
        return Classification::Regular;
    }
    let start_min = model.classify_point(&arc.start.base).is_minimal;
    let end_min = model.classify_point(&arc.end.base).is_minimal;
    if start_min && end_min {
        Classification::Minimal
    } else {
        Classification::Singular
    }
}

/// One deduplicated sojourn time with its best witness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SojournEntry {
    pub time: f64,
    pub classification: Classification,
    pub witness: GeodesicArc,
    /// Matching defect of the witness endpoint (sup norm).
    pub residual: f64,
    /// Matched seed-parameter directions under finite perturbation: a
    /// finite-difference rank estimate of the dimension of the set of
    /// covectors sharing this return time. Diagnostic only.
    pub e_t_estimate: usize,
    /// Whether the witness match needed the dense-orbit closure rule at a
    /// pole (return direction rotated against the start).
    pub used_closure_match: bool,
    /// Confirmed arcs merged into this time across the whole sweep.
    pub witness_count: usize,
}

/// Deduplicated, sorted catalog of detected sojourn times.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SojournCatalog {
    pub entries: Vec<SojournEntry>,
    pub t_max: f64,
    pub tol: f64,
}

impl SojournCatalog {
    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.time).collect()
    }

    pub fn entries_of(&self, class: Classification) -> Vec<&SojournEntry> {
        self.entries.iter().filter(|e| e.classification == class).collect()
    }
}

/// Detection result over a batch of seeds.
#[derive(Clone, Debug)]
pub struct DetectionReport {
    /// Confirmed relatively closed arcs, ordered by (seed index, time).
    pub arcs: Vec<GeodesicArc>,
    /// Seeds whose integration failed: (seed index, reason). Failures skip
    /// the seed, they do not abort the batch.
    pub skipped: Vec<(usize, String)>,
}

#[derive(Clone, Debug)]
struct ConfirmedArc {
    arc: GeodesicArc,
    defect: f64,
    used_closure_match: bool,
    class: Classification,
}

// --- event scalars --------------------------------------------------------

/// Signed scalar along the trajectory whose transversal zeros are candidate
/// return times; each is one signed component of the matching residual.
#[derive(Clone, Copy, Debug)]
enum EventScalar {
    /// z(t) − z₀ for seeds at a generic sphere point.
    SphereReturn { z0: f64 },
    /// The z-velocity (1 − z²)ξ_z, which vanishes exactly at pole passages
    /// for conormal (meridian) trajectories.
    PolePass,
    /// Centered wrap displacement of one flat coordinate.
    FlatWrap { axis: usize, x0: f64, period: f64 },
}

impl EventScalar {
    fn eval(&self, model: &SuspensionModel, p: &CotangentPoint) -> f64 {
        match *self {
            EventScalar::SphereReturn { z0 } => {
                let zi = model.z_index().unwrap();
                p.base.coords[zi] - z0
            }
            EventScalar::PolePass => {
                let zi = model.z_index().unwrap();
                let z = p.base.coords[zi];
                (1.0 - z * z) * p.xi[zi]
            }
            EventScalar::FlatWrap { axis, x0, period } => {
                let d = (p.base.coords[axis] - x0).rem_euclid(period);
                if d > 0.5 * period {
                    d - period
                } else {
                    d
                }
            }
        }
    }

    /// Wrap scalars jump by a full period at the antipode of the start;
    /// a sign change there is a discontinuity, not a root.
    fn bracket_is_continuous(&self, e_left: f64, e_right: f64) -> bool {
        match *self {
            EventScalar::FlatWrap { period, .. } => {
                e_left.abs() <= 0.25 * period && e_right.abs() <= 0.25 * period
            }
            _ => true,
        }
    }
}

/// Pick the event scalars that can see this seed's returns.
fn scalars_for_seed(model: &SuspensionModel, seed: &CotangentPoint) -> Vec<EventScalar> {
    let mut out = Vec::new();
    for axis in 0..model.n_factors() {
        if seed.xi[axis].abs() > 1e-9 {
            out.push(EventScalar::FlatWrap {
                axis,
                x0: seed.base.coords[axis],
                period: model.period(axis).unwrap(),
            });
            break; // one flat scalar suffices; the match checks the rest
        }
    }
    if model.kind == ModelKind::Torus {
        if out.is_empty() {
            out.push(EventScalar::FlatWrap {
                axis: 0,
                x0: seed.base.coords[0],
                period: model.period(0).unwrap(),
            });
        }
        return out;
    }
    let zi = model.z_index().unwrap();
    if seed.at_pole(model) {
        if seed.xi[zi].abs() > 1e-9 {
            out.push(EventScalar::PolePass);
        }
    } else if seed.xi[zi].abs() > 1e-9 {
        out.push(EventScalar::SphereReturn { z0: seed.base.coords[zi] });
    }
    out
}

// --- root sharpening ------------------------------------------------------

/// Bisection on a sign change of `scalar` between two recorded samples;
/// short re-flows start from the left sample. Returns the sharpened time and
/// the trajectory point there.
fn bisect_return(
    model: &SuspensionModel,
    scalar: EventScalar,
    left: &FlowSample,
    right: &FlowSample,
    e_left: f64,
    accuracy: f64,
    control: &StepControl,
) -> Result<(f64, CotangentPoint)> {
    let mut lo = left.t;
    let mut hi = right.t;
    let mut sign_lo = e_left.signum();
    let mut best: Option<(f64, CotangentPoint)> = None;
    for _ in 0..80 {
        if hi - lo <= accuracy {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let arc = hamiltonian_flow(model, &left.point, mid - left.t, control)?;
        let e_mid = scalar.eval(model, &arc.end);
        best = Some((mid, arc.end));
        if e_mid == 0.0 {
            return Ok((mid, best.unwrap().1));
        }
        if e_mid.signum() == sign_lo {
            lo = mid;
            sign_lo = e_mid.signum();
        } else {
            hi = mid;
        }
    }
    match best {
        Some((t, p)) if (t - 0.5 * (lo + hi)).abs() <= accuracy => Ok((t, p)),
        _ => {
            let t = 0.5 * (lo + hi);
            let arc = hamiltonian_flow(model, &left.point, t - left.t, control)?;
            Ok((t, arc.end))
        }
    }
}

/// Candidate (time, endpoint) returns for one seed from its recorded flow.
fn candidate_returns(
    model: &SuspensionModel,
    seed: &CotangentPoint,
    samples: &[FlowSample],
    tol: f64,
    control: &StepControl,
) -> Result<Vec<(f64, CotangentPoint)>> {
    let accuracy = (0.1 * tol).max(1e-12);
    let mut found: Vec<(f64, CotangentPoint)> = Vec::new();
    for scalar in scalars_for_seed(model, seed) {
        let mut e_prev = scalar.eval(model, &samples[0].point);
        for w in samples.windows(2) {
            let e_next = scalar.eval(model, &w[1].point);
            let bracketed = e_prev != 0.0
                && e_prev.signum() != e_next.signum()
                && scalar.bracket_is_continuous(e_prev, e_next);
            if bracketed {
                let (t, p) =
                    bisect_return(model, scalar, &w[0], &w[1], e_prev, accuracy, control)?;
                if t > MIN_RETURN_TIME
                    && !found.iter().any(|(t0, _)| (t0 - t).abs() <= 10.0 * tol)
                {
                    found.push((t, p));
                }
            }
            e_prev = e_next;
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(found)
}

// --- detection ------------------------------------------------------------

fn detect_rich(
    model: &SuspensionModel,
    seeds: &[CotangentPoint],
    t_max: f64,
    tol: f64,
) -> Result<(Vec<ConfirmedArc>, Vec<(usize, String)>)> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidInput(format!("t_max must be positive, got {t_max}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let control = StepControl::default();
    let mut confirmed = Vec::new();
    let mut skipped = Vec::new();
    for (idx, raw_seed) in seeds.iter().enumerate() {
        let seed = match raw_seed.normalized(model) {
            Ok(s) => s,
            Err(e) => {
                skipped.push((idx, e.to_string()));
                continue;
            }
        };
        let samples = match hamiltonian_flow_recorded(model, &seed, t_max, &control) {
            Ok((_, s)) => s,
            Err(e) => {
                skipped.push((idx, e.to_string()));
                continue;
            }
        };
        let candidates = match candidate_returns(model, &seed, &samples, tol, &control) {
            Ok(c) => c,
            Err(e) => {
                skipped.push((idx, e.to_string()));
                continue;
            }
        };
        for (t, endpoint) in candidates {
            let outcome = holonomy_match(model, &seed, &endpoint, tol);
            if !outcome.matched {
                continue;
            }
            let arc = match hamiltonian_flow(model, &seed, t, &control) {
                Ok(a) => a,
                Err(e) => {
                    skipped.push((idx, e.to_string()));
                    continue;
                }
            };
            let class = classify_arc(model, &arc);
            confirmed.push(ConfirmedArc {
                arc,
                defect: outcome.defect,
                used_closure_match: outcome.used_closure_match,
                class,
            });
        }
    }
    Ok((confirmed, skipped))
}

/// Find every relatively closed arc of length ≤ `t_max` started from the
/// given seeds. Seeds are normalized to unit energy before flowing (the
/// matching tolerance is defined at |ξ| = 1); integration failures skip the
/// offending seed and are reported in the result.
pub fn detect_relatively_closed(
    model: &SuspensionModel,
    seeds: &[CotangentPoint],
    t_max: f64,
    tol: f64,
) -> Result<DetectionReport> {
    let (confirmed, skipped) = detect_rich(model, seeds, t_max, tol)?;
    Ok(DetectionReport { arcs: confirmed.into_iter().map(|c| c.arc).collect(), skipped })
}

// --- seed sweep -----------------------------------------------------------

/// The deterministic seed sweep used by [`enumerate_sojourn_times`]:
/// stratified base lattices with axis conormal directions, explicit pole
/// seeds, and (for products) resonant mixed directions. Exposed so sweeps
/// are reproducible and inspectable.
pub fn sojourn_seeds(
    model: &SuspensionModel,
    t_max: f64,
    seed_budget: usize,
) -> Result<Vec<CotangentPoint>> {
    if seed_budget == 0 {
        return Err(Error::InvalidInput("seed budget must be at least 1".into()));
    }
    let mut seeds = Vec::new();
    match model.kind {
        ModelKind::Torus => {
            let n = seed_budget;
            for j in 0..n {
                let psi = TWO_PI * j as f64 / n as f64;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                seeds.push(CotangentPoint::new(model, &[psi, 0.0, 0.0], &[sign, 0.0, 0.0])?);
            }
        }
        ModelKind::Sphere => {
            let pole_count = seed_budget.min(4);
            for k in 0..pole_count {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let beta = if k < 2 { 0.0 } else { 0.25 * TWO_PI };
                seeds.push(CotangentPoint::pole(model, sign, beta, 1.0, &[], 0.0)?);
            }
            let rest = seed_budget - pole_count;
            for i in 0..rest {
                let z = -0.85 + 1.7 * (i as f64 + 0.5) / rest as f64;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let xi_z = sign / (1.0 - z * z).sqrt();
                seeds.push(CotangentPoint::new(model, &[z, 0.0, 0.0], &[xi_z, 0.0, 0.0])?);
            }
        }
        ModelKind::Product => {
            let d = model.n_factors();
            let n = model.total_dim;
            // resonant mixed directions: close after winding a flat factor
            // m times and the meridian n times, length √((mℓ)² + (2πn)²)
            let mut resonant: Vec<(f64, usize, u32, u32)> = Vec::new();
            let mut wind = 1u32;
            while TWO_PI * wind as f64 <= t_max {
                for (fi, &len) in model.factor_lengths.iter().enumerate() {
                    let mut m = 1u32;
                    loop {
                        let t = ((m as f64 * len).powi(2)
                            + (TWO_PI * wind as f64).powi(2))
                        .sqrt();
                        if t > t_max {
                            break;
                        }
                        resonant.push((t, fi, m, wind));
                        m += 1;
                    }
                }
                wind += 1;
            }
            resonant.sort_by(|a, b| a.0.total_cmp(&b.0));
            resonant.truncate(seed_budget / 4);
            for &(t, fi, m, wind) in &resonant {
                let mut flat = vec![(0.0, 0.0); d];
                flat[fi] = (0.0, m as f64 * model.factor_lengths[fi] / t);
                let magnitude = TWO_PI * wind as f64 / t;
                seeds.push(CotangentPoint::pole(model, 1.0, 0.0, magnitude, &flat, 0.0)?);
            }
            // pure meridians from both poles
            let mut left = seed_budget.saturating_sub(seeds.len());
            let flat0 = vec![(0.0, 0.0); d];
            for sign in [1.0, -1.0] {
                if left == 0 {
                    break;
                }
                seeds.push(CotangentPoint::pole(model, sign, 0.0, 1.0, &flat0, 0.0)?);
                left -= 1;
            }
            // flat circles at stratified interior z
            let n_flat = left / 2;
            for i in 0..n_flat {
                let f = i % d;
                let z = -0.8 + 1.6 * (i as f64 + 0.5) / n_flat as f64;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let mut coords = vec![0.0; n];
                let mut xi = vec![0.0; n];
                coords[d] = z;
                xi[f] = sign;
                seeds.push(CotangentPoint::new(model, &coords, &xi)?);
            }
            // generic meridians at stratified interior z
            let n_mer = left - n_flat;
            for i in 0..n_mer {
                let z = -0.85 + 1.7 * (i as f64 + 0.5) / n_mer as f64;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let mut coords = vec![0.0; n];
                let mut xi = vec![0.0; n];
                coords[d] = z;
                xi[d] = sign / (1.0 - z * z).sqrt();
                seeds.push(CotangentPoint::new(model, &coords, &xi)?);
            }
        }
    }
    Ok(seeds)
}

// --- catalog assembly -----------------------------------------------------

/// Perturb the witness seed along each independent parameter direction and
/// count how many perturbed seeds still close at the same time: a
/// finite-difference rank estimate of the return set's dimension.
fn matched_direction_count(
    model: &SuspensionModel,
    witness: &GeodesicArc,
    tol: f64,
) -> Result<usize> {
    const EPS: f64 = 1e-4;
    let threshold = 10.0 * tol;
    let seed = &witness.start;
    let control = StepControl::default();
    let mut variants: Vec<CotangentPoint> = Vec::new();
    let at_pole = seed.at_pole(model);
    for i in 0..model.total_dim {
        if at_pole {
            if model.z_index() == Some(i) {
                continue; // a pole has no z direction; β covers its freedom
            }
        } else if model.z_index() == Some(i) {
            // keep perturbed seeds away from the chart caps
            let z = seed.base.coords[i];
            if z.abs() + EPS >= 0.9 {
                continue;
            }
        }
        let mut coords = seed.base.coords.clone();
        coords[i] += EPS;
        variants.push(CotangentPoint::new(model, &coords, &seed.xi)?);
    }
    // rotating momentum between a flat factor and the sphere part probes
    // whether the closing direction is isolated (resonances) or free
    if model.n_factors() > 0 && model.z_index().is_some() {
        let zi = model.z_index().unwrap();
        let mut xi = seed.xi.clone();
        if at_pole {
            let (c1, c2) = (xi[0], xi[zi]);
            xi[0] = c1 * EPS.cos() - c2 * EPS.sin();
            xi[zi] = (c1 * EPS.sin() + c2 * EPS.cos()).abs();
            variants.push(CotangentPoint::new(model, &seed.base.coords, &xi)?);
        } else {
            let a = 1.0 - seed.base.coords[zi] * seed.base.coords[zi];
            let (c1, c2) = (xi[0], a.sqrt() * xi[zi]);
            xi[0] = c1 * EPS.cos() - c2 * EPS.sin();
            xi[zi] = (c1 * EPS.sin() + c2 * EPS.cos()) / a.sqrt();
            variants.push(CotangentPoint::new(model, &seed.base.coords, &xi)?);
        }
    }
    let mut count = 0;
    for v in variants {
        let v = v.normalized(model)?;
        if let Ok(arc) = hamiltonian_flow(model, &v, witness.length, &control) {
            if holonomy_match(model, &v, &arc.end, threshold).matched {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn build_catalog(
    model: &SuspensionModel,
    mut confirmed: Vec<ConfirmedArc>,
    t_max: f64,
    tol: f64,
) -> Result<SojournCatalog> {
    confirmed.sort_by(|a, b| a.arc.length.total_cmp(&b.arc.length));
    let mut entries = Vec::new();
    let mut i = 0;
    while i < confirmed.len() {
        let mut j = i + 1;
        while j < confirmed.len()
            && confirmed[j].arc.length - confirmed[j - 1].arc.length <= 10.0 * tol
        {
            j += 1;
        }
        let cluster = &confirmed[i..j];
        let best_rank = cluster.iter().map(|c| c.class.rank()).min().unwrap();
        let winner = cluster
            .iter()
            .filter(|c| c.class.rank() == best_rank)
            .min_by(|a, b| {
                a.defect.total_cmp(&b.defect).then(a.arc.length.total_cmp(&b.arc.length))
            })
            .unwrap();
        let e_t = matched_direction_count(model, &winner.arc, tol)?;
        entries.push(SojournEntry {
            time: winner.arc.length,
            classification: winner.class,
            witness: winner.arc.clone(),
            residual: winner.defect,
            e_t_estimate: e_t,
            used_closure_match: winner.used_closure_match,
            witness_count: cluster.len(),
        });
        i = j;
    }
    Ok(SojournCatalog { entries, t_max, tol })
}

/// Run the deterministic seed sweep and assemble the deduplicated catalog:
/// confirmed times merged within 10·tol, each entry classified from its
/// best witness (regular evidence outranks minimal, which outranks a
/// generic singular crossing).
pub fn enumerate_sojourn_times(
    model: &SuspensionModel,
    t_max: f64,
    tol: f64,
    seed_budget: usize,
) -> Result<SojournCatalog> {
    let seeds = sojourn_seeds(model, t_max, seed_budget)?;
    let (confirmed, _skipped) = detect_rich(model, &seeds, t_max, tol)?;
    build_catalog(model, confirmed, t_max, tol)
}

/// Same catalog as [`enumerate_sojourn_times`], with per-seed detection
/// fanned out over `threads` workers on contiguous seed chunks. The merge
/// is independent of completion order, so the result is identical to the
/// sequential one.
pub fn enumerate_sojourn_times_threaded(
    model: &SuspensionModel,
    t_max: f64,
    tol: f64,
    seed_budget: usize,
    threads: usize,
) -> Result<SojournCatalog> {
    if threads <= 1 {
        return enumerate_sojourn_times(model, t_max, tol, seed_budget);
    }
    let seeds = sojourn_seeds(model, t_max, seed_budget)?;
    let chunk = seeds.len().div_ceil(threads);
    let mut parts: Vec<Result<(Vec<ConfirmedArc>, Vec<(usize, String)>)>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for slice in seeds.chunks(chunk.max(1)) {
            handles.push(scope.spawn(move || detect_rich(model, slice, t_max, tol)));
        }
        for h in handles {
            parts.push(h.join().expect("detection worker panicked"));
        }
    });
    let mut confirmed = Vec::new();
    for part in parts {
        confirmed.extend(part?.0);
    }
    build_catalog(model, confirmed, t_max, tol)
}
