//! The windowed basic wave trace and its singular support.
//!
//! The distributional trace Σⱼ mⱼ e^{−itμⱼ} over μⱼ = √λⱼ is made computable
//! by a smooth frequency window w: the partial trace
//! W_Λ(t) = Σⱼ mⱼ w(μⱼ/Λ) e^{−itμⱼ} is an entire function of t whose growth
//! in Λ at fixed t discriminates singular support from smooth points: near a
//! geodesic return time the windowed peak grows like a power of Λ, while at
//! a smooth point the values stay bounded along a Λ ladder.
//!
//! Everything here is deterministic: mode sums run in ascending μ order
//! (series values are bit-for-bit reproducible, threaded or not), and peak
//! detection scans fixed uniform grids.

use crate::error::{Error, Result};
use crate::sojourn::{Classification, SojournCatalog};
use crate::spectral::{Convention, SpectralData};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Smooth window profile, evaluated on x = μ/Λ ≥ 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowShape {
    /// e^{−x²}: positive everywhere, rapidly decaying.
    Gaussian,
    /// 1 on [0, ½], cos²(π(x − ½)) on [½, 1], 0 beyond: compactly
    /// supported and C¹ at both junctions.
    CosineTaper,
}

impl WindowShape {
    pub fn as_str(&self) -> &'static str {
        match self {
            WindowShape::Gaussian => "gaussian",
            WindowShape::CosineTaper => "cosine",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => Ok(WindowShape::Gaussian),
            "cosine" | "cosinetaper" | "taper" => Ok(WindowShape::CosineTaper),
            other => Err(Error::InvalidInput(format!(
                "unknown window shape '{other}' (expected gaussian or cosine)"
            ))),
        }
    }
}

/// A window profile with its frequency cutoff Λ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyWindow {
    pub shape: WindowShape,
    pub cutoff: f64,
}

impl FrequencyWindow {
    pub fn new(shape: WindowShape, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::InvalidInput(format!(
                "window cutoff must be positive, got {cutoff}"
            )));
        }
        Ok(FrequencyWindow { shape, cutoff })
    }

    /// w(μ/Λ) ∈ [0, 1], equal to 1 at μ = 0.
    pub fn value(&self, mu: f64) -> f64 {
        let x = mu / self.cutoff;
        match self.shape {
            WindowShape::Gaussian => (-x * x).exp(),
            WindowShape::CosineTaper => {
                if x <= 0.5 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    let c = (std::f64::consts::PI * (x - 0.5)).cos();
                    c * c
                }
            }
        }
    }
}

/// A windowed partial trace sampled on a uniform t grid.
#[derive(Clone, Debug)]
pub struct TraceSeries {
    pub t: Vec<f64>,
    pub values: Vec<Complex64>,
    pub window: FrequencyWindow,
    pub convention: Convention,
    /// False when the spectrum does not reach the cutoff, so the window is
    /// truncated by the available modes rather than by its own decay.
    pub window_resolved: bool,
}

impl TraceSeries {
    /// |W(t)| per sample.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

/// Uniform sample grid from t0 to t1 inclusive (when the span is an integer
/// number of steps, up to rounding).
pub fn uniform_grid(t0: f64, t1: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !t1.is_finite() || !t0.is_finite() || t1 <= t0 {
        return Err(Error::InvalidInput(format!(
            "bad trace grid: t0 = {t0}, t1 = {t1}, step = {step}"
        )));
    }
    let n = ((t1 - t0) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| t0 + i as f64 * step).collect())
}

fn check_uniform(t_grid: &[f64]) -> Result<f64> {
    if t_grid.is_empty() {
        return Err(Error::InvalidInput("empty trace grid".into()));
    }
    if t_grid.len() == 1 {
        return Ok(0.0);
    }
    let step = t_grid[1] - t_grid[0];
    if !(step > 0.0) {
        return Err(Error::InvalidInput("trace grid must be strictly increasing".into()));
    }
    for w in t_grid.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0) {
            return Err(Error::InvalidInput("trace grid must be uniform".into()));
        }
    }
    Ok(step)
}

fn windowed_weights(spectrum: &SpectralData, window: &FrequencyWindow) -> Vec<(f64, f64)> {
    spectrum
        .entries
        .iter()
        .map(|e| {
            let mu = e.lambda.sqrt();
            (mu, e.multiplicity as f64 * window.value(mu))
        })
        .collect()
}

fn trace_value(weights: &[(f64, f64)], t: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(mu, w) in weights {
        acc += Complex64::from_polar(w, -t * mu);
    }
    acc
}

/// Evaluate W_Λ(t) = Σⱼ mⱼ w(μⱼ/Λ) e^{−itμⱼ} on a uniform grid, summing in
/// ascending μ order. A cutoff beyond the spectral range is not an error;
/// the series is returned flagged unresolved.
pub fn evaluate_trace(
    spectrum: &SpectralData,
    window: FrequencyWindow,
    t_grid: &[f64],
) -> Result<TraceSeries> {
    evaluate_trace_threaded(spectrum, window, t_grid, 1)
}

/// Same series as [`evaluate_trace`] with samples fanned out over worker
/// threads; each sample keeps the fixed per-sample summation order, so the
/// output is identical to the sequential one.
pub fn evaluate_trace_threaded(
    spectrum: &SpectralData,
    window: FrequencyWindow,
    t_grid: &[f64],
    threads: usize,
) -> Result<TraceSeries> {
    spectrum.validate()?;
    check_uniform(t_grid)?;
    let weights = windowed_weights(spectrum, &window);
    let mut values = vec![Complex64::new(0.0, 0.0); t_grid.len()];
    if threads <= 1 {
        for (v, &t) in values.iter_mut().zip(t_grid) {
            *v = trace_value(&weights, t);
        }
    } else {
        let chunk = t_grid.len().div_ceil(threads).max(1);
        std::thread::scope(|scope| {
            for (vs, ts) in values.chunks_mut(chunk).zip(t_grid.chunks(chunk)) {
                let weights = &weights;
                scope.spawn(move || {
                    for (v, &t) in vs.iter_mut().zip(ts) {
                        *v = trace_value(weights, t);
                    }
                });
            }
        });
    }
    Ok(TraceSeries {
        t: t_grid.to_vec(),
        values,
        window,
        convention: spectrum.convention,
        window_resolved: spectrum.max_lambda().sqrt() >= window.cutoff,
    })
}

/// Counting measure of {μⱼ} with multiplicities, binned at `bin_width`;
/// bin i covers [i·w, (i+1)·w). An empty spectrum gives all-zero counts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralHistogram {
    pub bin_width: f64,
    pub counts: Vec<f64>,
}

impl SpectralHistogram {
    pub fn bin_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.bin_width
    }
}

pub fn spectral_distribution(
    spectrum: &SpectralData,
    bin_width: f64,
    mu_max: f64,
) -> Result<SpectralHistogram> {
    if !(bin_width > 0.0) || !(mu_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "histogram needs positive bin width and range, got {bin_width}, {mu_max}"
        )));
    }
    let n_bins = (mu_max / bin_width).ceil() as usize;
    let mut counts = vec![0.0; n_bins.max(1)];
    for e in &spectrum.entries {
        let mu = e.lambda.sqrt();
        if mu <= mu_max {
            let i = ((mu / bin_width).floor() as usize).min(counts.len() - 1);
            counts[i] += e.multiplicity as f64;
        }
    }
    Ok(SpectralHistogram { bin_width, counts })
}

// --- singularity detection -------------------------------------------------

/// Thresholds for peak finding; all ratios are dimensionless.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PeakParams {
    /// A sample counts as a peak only above this multiple of the series
    /// median magnitude.
    pub median_factor: f64,
    /// Required amplitude growth factor between consecutive ladder rungs.
    pub min_growth: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams { median_factor: 5.0, min_growth: 1.0 }
    }
}

/// One persistent growing peak across the Λ ladder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Detection {
    /// Peak location on the top ladder rung (the sharpest series).
    pub time: f64,
    /// Peak magnitude per ladder rung, ascending Λ.
    pub amplitudes: Vec<f64>,
    /// Least-squares slope of log |peak| against log Λ.
    pub exponent: f64,
    /// Half-width of a rough 95% interval on the exponent.
    pub exponent_ci: f64,
    /// Filled by [`verify_poisson`]: the matched catalog time, if any.
    pub matched_time: Option<f64>,
    pub classification: Option<Classification>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularityReport {
    pub detections: Vec<Detection>,
    pub ladder: Vec<f64>,
    pub window_shape: WindowShape,
    pub convention: Convention,
    pub t_step: f64,
}

/// Indices of strict local maxima above the median-based threshold.
fn peak_indices(mags: &[f64], params: &PeakParams) -> Vec<usize> {
    let mut sorted = mags.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.is_empty() {
        0.0
    } else if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let threshold = params.median_factor * median;
    let mut out = Vec::new();
    for i in 1..mags.len().saturating_sub(1) {
        if mags[i] > mags[i - 1] && mags[i] > mags[i + 1] && mags[i] >= threshold && mags[i] > 0.0
        {
            out.push(i);
        }
    }
    out
}

fn fit_loglog(lambdas: &[f64], amps: &[f64]) -> (f64, f64) {
    let n = lambdas.len() as f64;
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = amps.iter().map(|a| a.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 =
        xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = (lambdas.len() as f64 - 2.0).max(1.0);
    let stderr = (ss_res / dof / sxx).sqrt();
    (slope, 1.96 * stderr)
}

/// Find the peaks of |W_Λ(t)| that persist within one grid step and grow
/// across an already-evaluated Λ ladder of series (ascending cutoff, equal
/// grids). Exposed separately so detection can run on modified series, e.g.
/// after a smooth time cutoff.
pub fn detect_on_series(
    ladder: &[&TraceSeries],
    params: &PeakParams,
) -> Result<SingularityReport> {
    if ladder.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "singularity detection needs a ladder of at least 3 cutoffs, got {}",
            ladder.len()
        )));
    }
    for pair in ladder.windows(2) {
        if pair[1].window.cutoff <= pair[0].window.cutoff {
            return Err(Error::InvalidInput("ladder cutoffs must be strictly increasing".into()));
        }
        if pair[1].t != pair[0].t {
            return Err(Error::GridMismatch(
                "ladder series must share one t grid".into(),
            ));
        }
        if pair[1].convention != pair[0].convention {
            return Err(Error::ConventionMismatch {
                left: pair[0].convention.as_str(),
                right: pair[1].convention.as_str(),
            });
        }
    }
    let top = ladder.last().unwrap();
    let t_step = check_uniform(&top.t)?;
    let mags: Vec<Vec<f64>> = ladder.iter().map(|s| s.magnitudes()).collect();
    let peak_sets: Vec<Vec<usize>> = mags.iter().map(|m| peak_indices(m, params)).collect();
    let mut detections = Vec::new();
    'next_peak: for &i_top in peak_sets.last().unwrap() {
        // persistence: walking down the ladder, each rung must hold a peak
        // within one grid step of the rung above (locations converge as Λ
        // grows, so adjacent rungs are the right comparison)
        let mut chain = vec![i_top];
        for peaks in peak_sets.iter().rev().skip(1) {
            let prev = *chain.last().unwrap();
            let Some(&j) = peaks.iter().find(|&&j| j.abs_diff(prev) <= 1) else {
                continue 'next_peak;
            };
            chain.push(j);
        }
        chain.reverse();
        let amplitudes: Vec<f64> =
            chain.iter().enumerate().map(|(level, &j)| mags[level][j]).collect();
        for pair in amplitudes.windows(2) {
            if pair[1] <= params.min_growth * pair[0] {
                continue 'next_peak;
            }
        }
        let lambdas: Vec<f64> = ladder.iter().map(|s| s.window.cutoff).collect();
        let (exponent, exponent_ci) = fit_loglog(&lambdas, &amplitudes);
        detections.push(Detection {
            time: top.t[i_top],
            amplitudes,
            exponent,
            exponent_ci,
            matched_time: None,
            classification: None,
        });
    }
    detections.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(SingularityReport {
        detections,
        ladder: ladder.iter().map(|s| s.window.cutoff).collect(),
        window_shape: top.window.shape,
        convention: top.convention,
        t_step,
    })
}

/// Evaluate the trace along a Λ ladder on [t_range.0, t_range.1] and report
/// the persistent growing peaks. The scan must stay away from t = 0, whose
/// singularity is universal, and the spectrum must reach the top cutoff.
pub fn detect_singularities(
    spectrum: &SpectralData,
    shape: WindowShape,
    ladder: &[f64],
    t_range: (f64, f64),
    t_step: f64,
    params: &PeakParams,
) -> Result<SingularityReport> {
    if ladder.len() < 3 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "cutoff ladder must be strictly increasing with at least 3 rungs".into(),
        ));
    }
    if !(t_range.0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "the scan interval must exclude a neighborhood of t = 0, got t_min = {}",
            t_range.0
        )));
    }
    let max_mu = spectrum.max_lambda().sqrt();
    let top = *ladder.last().unwrap();
    if max_mu < top {
        return Err(Error::Resolution(format!(
            "spectrum reaches μ = {max_mu:.3} but the ladder asks for Λ = {top}; \
             extend the spectrum or lower the ladder"
        )));
    }
    let grid = uniform_grid(t_range.0, t_range.1, t_step)?;
    let mut series = Vec::with_capacity(ladder.len());
    for &cutoff in ladder {
        series.push(evaluate_trace(spectrum, FrequencyWindow::new(shape, cutoff)?, &grid)?);
    }
    let refs: Vec<&TraceSeries> = series.iter().collect();
    detect_on_series(&refs, params)
}

/// |W_{2Λ}(t)| / |W_Λ(t)|: the smooth-point discriminator. Bounded ratios
/// along the ladder mark smooth points; sustained growth marks singular
/// support.
pub fn growth_ratio(
    spectrum: &SpectralData,
    shape: WindowShape,
    cutoff: f64,
    t: f64,
) -> Result<f64> {
    let lo = evaluate_trace(spectrum, FrequencyWindow::new(shape, cutoff)?, &[t])?;
    let hi = evaluate_trace(spectrum, FrequencyWindow::new(shape, 2.0 * cutoff)?, &[t])?;
    let denom = lo.values[0].norm();
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(hi.values[0].norm() / denom)
}

// --- smooth time cutoff ------------------------------------------------------

/// A C² bump in t: 1 on each keep interval, 0 outside, joined by quintic
/// ramps of the given width (first and second derivatives vanish at both
/// ramp ends, so sampled second differences stay continuous).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChiWindow {
    pub keeps: Vec<(f64, f64)>,
    pub ramp: f64,
}

impl ChiWindow {
    pub fn new(keeps: Vec<(f64, f64)>, ramp: f64) -> Result<Self> {
        if !(ramp > 0.0) || !ramp.is_finite() {
            return Err(Error::InvalidInput(format!("ramp width must be positive, got {ramp}")));
        }
        for &(a, b) in &keeps {
            if !(a < b) {
                return Err(Error::InvalidInput(format!("empty keep interval ({a}, {b})")));
            }
        }
        for pair in keeps.windows(2) {
            if pair[1].0 - pair[0].1 <= 2.0 * ramp {
                return Err(Error::InvalidInput(format!(
                    "keep intervals ({}, {}) and ({}, {}) overlap within the ramps",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        Ok(ChiWindow { keeps, ramp })
    }

    /// Quintic smoothstep: s(0) = 0, s(1) = 1, s' = s'' = 0 at both ends.
    fn smoothstep(u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }

    pub fn value(&self, t: f64) -> f64 {
        for &(a, b) in &self.keeps {
            if t >= a && t <= b {
                return 1.0;
            }
            if t > a - self.ramp && t < a {
                return Self::smoothstep((t - (a - self.ramp)) / self.ramp);
            }
            if t > b && t < b + self.ramp {
                return Self::smoothstep(((b + self.ramp) - t) / self.ramp);
            }
        }
        0.0
    }
}

/// Pointwise product χ(t)·W_Λ(t), used to cut singular times out of the
/// trace before detection.
pub fn cutoff_partial_trace(series: &TraceSeries, chi: &ChiWindow) -> TraceSeries {
    let mut out = series.clone();
    for (v, &t) in out.values.iter_mut().zip(&series.t) {
        *v *= chi.value(t);
    }
    out
}

// --- verification against the sojourn catalog --------------------------------

/// Outcome of checking a singularity report against a sojourn catalog.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoissonVerdict {
    /// True when every detected singularity matches a catalog time.
    pub pass: bool,
    /// The input report with matches filled in.
    pub report: SingularityReport,
    /// Detected times with no catalog entry within tolerance.
    pub unmatched: Vec<f64>,
    /// Catalog times that produced at least one detection (informational:
    /// the converse direction is not asserted).
    pub detected_catalog_times: Vec<f64>,
    /// Catalog times that produced none.
    pub undetected_catalog_times: Vec<f64>,
}

pub fn verify_poisson(
    catalog: &SojournCatalog,
    report: &SingularityReport,
    tol_t: f64,
) -> Result<PoissonVerdict> {
    if !(tol_t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "matching tolerance must be positive, got {tol_t}"
        )));
    }
    let mut annotated = report.clone();
    let mut unmatched = Vec::new();
    let mut hit = vec![false; catalog.entries.len()];
    for det in &mut annotated.detections {
        let nearest = catalog
            .entries
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (a.time - det.time).abs().total_cmp(&(b.time - det.time).abs())
            });
        match nearest {
            Some((i, entry)) if (entry.time - det.time).abs() <= tol_t => {
                det.matched_time = Some(entry.time);
                det.classification = Some(entry.classification);
                hit[i] = true;
            }
            _ => unmatched.push(det.time),
        }
    }
    let detected_catalog_times = catalog
        .entries
        .iter()
        .zip(&hit)
        .filter(|(_, &h)| h)
        .map(|(e, _)| e.time)
        .collect();
    let undetected_catalog_times = catalog
        .entries
        .iter()
        .zip(&hit)
        .filter(|(_, &h)| !h)
        .map(|(e, _)| e.time)
        .collect();
    Ok(PoissonVerdict {
        pass: unmatched.is_empty(),
        report: annotated,
        unmatched,
        detected_catalog_times,
        undetected_catalog_times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SuspensionModel, TWO_PI};
    use crate::sojourn::{enumerate_sojourn_times, DEFAULT_MATCH_TOL};
    use crate::spectral::{analytic_spectrum, Provenance};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sphere_spectrum(k_max: u32, convention: Convention) -> SpectralData {
        analytic_spectrum(&SuspensionModel::sphere(), k_max, convention).unwrap()
    }

    #[test]
    fn windows_are_normalized_decaying_and_tapered() {
        for shape in [WindowShape::Gaussian, WindowShape::CosineTaper] {
            let w = FrequencyWindow::new(shape, 40.0).unwrap();
            assert_eq!(w.value(0.0), 1.0);
            let mut prev = 1.0;
            for i in 1..200 {
                let v = w.value(i as f64);
                assert!((0.0..=1.0).contains(&v));
                assert!(v <= prev + 1e-15, "window must decay");
                prev = v;
            }
        }
        let taper = FrequencyWindow::new(WindowShape::CosineTaper, 100.0).unwrap();
        assert_eq!(taper.value(50.0), 1.0);
        assert_eq!(taper.value(100.0), 0.0);
        assert_eq!(taper.value(130.0), 0.0);
        // C¹ at the inner junction: symmetric difference slope is O(h)
        let h = 1e-5;
        let slope = (taper.value(50.0 + h * 100.0) - taper.value(50.0 - h * 100.0)) / (2.0 * h);
        assert!(slope.abs() <= 1e-3, "slope {slope}");
    }

    #[test]
    fn trace_at_zero_is_the_windowed_mass() {
        let spec = sphere_spectrum(60, Convention::AmbientCount);
        let window = FrequencyWindow::new(WindowShape::Gaussian, 30.0).unwrap();
        let series = evaluate_trace(&spec, window, &[0.0]).unwrap();
        let direct: f64 = spec
            .entries
            .iter()
            .map(|e| e.multiplicity as f64 * window.value(e.lambda.sqrt()))
            .sum();
        assert_abs_diff_eq!(series.values[0].re, direct, epsilon = 1e-12 * direct);
        assert_eq!(series.values[0].im, 0.0);
        assert!(series.window_resolved);
    }

    #[test]
    fn conjugate_symmetry_and_zero_dominance_hold() {
        let spec = sphere_spectrum(80, Convention::BasicCount);
        let window = FrequencyWindow::new(WindowShape::Gaussian, 25.0).unwrap();
        let grid = uniform_grid(-3.0, 3.0, 0.25).unwrap();
        let series = evaluate_trace(&spec, window, &grid).unwrap();
        let n = grid.len();
        let w0 = series.values[n / 2].norm();
        for i in 0..n {
            let j = n - 1 - i;
            let diff = (series.values[i] - series.values[j].conj()).norm();
            assert!(diff <= 1e-12 * w0, "symmetry defect {diff} at t = {}", grid[i]);
            assert!(series.values[i].norm() <= w0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn torus_trace_returns_to_full_mass_at_the_circle_length() {
        // every μ is an integer, so all phases realign exactly at t = 2π
        let spec =
            analytic_spectrum(&SuspensionModel::torus(), 200, Convention::AmbientCount).unwrap();
        let window = FrequencyWindow::new(WindowShape::Gaussian, 50.0).unwrap();
        let grid = uniform_grid(5.5, 7.0, 0.005).unwrap();
        let series = evaluate_trace(&spec, window, &grid).unwrap();
        let mags = series.magnitudes();
        let (i_max, _) =
            mags.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!((grid[i_max] - TWO_PI).abs() <= 0.005, "peak at {}", grid[i_max]);
        let at_zero = evaluate_trace(&spec, window, &[0.0]).unwrap().values[0].norm();
        let at_return = evaluate_trace(&spec, window, &[TWO_PI]).unwrap().values[0].norm();
        assert_abs_diff_eq!(at_return, at_zero, epsilon = 1e-10 * at_zero);
    }

    #[test]
    fn growth_ratio_separates_singular_from_smooth_points() {
        let spec = sphere_spectrum(250, Convention::BasicCount);
        for cutoff in [25.0, 50.0] {
            let at_return =
                growth_ratio(&spec, WindowShape::Gaussian, cutoff, TWO_PI).unwrap();
            assert!(at_return > 1.5, "ratio {at_return} at 2π, Λ = {cutoff}");
            for smooth_t in [PI, 3.0] {
                let r = growth_ratio(&spec, WindowShape::Gaussian, cutoff, smooth_t).unwrap();
                assert!(r < 1.5, "ratio {r} at t = {smooth_t}, Λ = {cutoff}");
            }
        }
    }

    #[test]
    fn sphere_detection_finds_the_meridian_multiples() {
        // coarse rungs shift peak locations by ~t/(2Λ²), so the ladder has
        // to start high enough for the drift to stay inside one grid step
        let spec = sphere_spectrum(250, Convention::BasicCount);
        let report = detect_singularities(
            &spec,
            WindowShape::Gaussian,
            &[50.0, 100.0, 200.0],
            (1.0, 20.0),
            0.005,
            &PeakParams::default(),
        )
        .unwrap();
        let times: Vec<f64> = report.detections.iter().map(|d| d.time).collect();
        assert_eq!(times.len(), 3, "times {times:?}");
        for (k, t) in times.iter().enumerate() {
            assert!(
                (t - TWO_PI * (k as f64 + 1.0)).abs() <= 0.05,
                "detected {t} vs {}",
                TWO_PI * (k as f64 + 1.0)
            );
        }
        for d in &report.detections {
            assert!(d.exponent.is_finite());
            assert!(d.amplitudes.windows(2).all(|w| w[1] > w[0]));
        }
        assert_eq!(report.convention, Convention::BasicCount);
    }

    #[test]
    fn torus_detection_finds_the_meridian_multiples() {
        let spec =
            analytic_spectrum(&SuspensionModel::torus(), 250, Convention::BasicCount).unwrap();
        let report = detect_singularities(
            &spec,
            WindowShape::Gaussian,
            &[50.0, 100.0, 200.0],
            (1.0, 20.0),
            0.005,
            &PeakParams::default(),
        )
        .unwrap();
        let times: Vec<f64> = report.detections.iter().map(|d| d.time).collect();
        assert_eq!(times.len(), 3, "times {times:?}");
        for (k, t) in times.iter().enumerate() {
            assert!((t - TWO_PI * (k as f64 + 1.0)).abs() <= 0.05);
        }
    }

    #[test]
    fn detection_requires_spectral_range_and_sane_inputs() {
        let spec = sphere_spectrum(40, Convention::BasicCount);
        let err = detect_singularities(
            &spec,
            WindowShape::Gaussian,
            &[30.0, 60.0, 120.0],
            (1.0, 10.0),
            0.01,
            &PeakParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
        assert!(detect_singularities(
            &spec,
            WindowShape::Gaussian,
            &[10.0, 20.0],
            (1.0, 10.0),
            0.01,
            &PeakParams::default()
        )
        .is_err());
        assert!(detect_singularities(
            &spec,
            WindowShape::Gaussian,
            &[5.0, 10.0, 20.0],
            (0.0, 10.0),
            0.01,
            &PeakParams::default()
        )
        .is_err());
    }

    #[test]
    fn exponent_fit_is_stable_under_window_shape_change() {
        let spec = sphere_spectrum(250, Convention::BasicCount);
        let mut exponents = Vec::new();
        for shape in [WindowShape::Gaussian, WindowShape::CosineTaper] {
            let report = detect_singularities(
                &spec,
                shape,
                &[50.0, 100.0, 200.0],
                (5.0, 8.0),
                0.005,
                &PeakParams::default(),
            )
            .unwrap();
            let near = report
                .detections
                .iter()
                .find(|d| (d.time - TWO_PI).abs() <= 0.05)
                .expect("return peak");
            assert!(near.exponent.is_finite());
            exponents.push(near.exponent);
        }
        let shift = (exponents[0] - exponents[1]).abs();
        assert!(
            shift <= 0.2 * exponents[0].abs(),
            "exponents {exponents:?} differ by {shift}"
        );
    }

    #[test]
    fn chi_cutoff_identity_zero_and_ramp_values() {
        let spec = sphere_spectrum(60, Convention::BasicCount);
        let window = FrequencyWindow::new(WindowShape::Gaussian, 20.0).unwrap();
        let grid = uniform_grid(1.0, 9.0, 0.05).unwrap();
        let series = evaluate_trace(&spec, window, &grid).unwrap();
        let all = ChiWindow::new(vec![(0.0, 10.0)], 0.1).unwrap();
        let same = cutoff_partial_trace(&series, &all);
        assert_eq!(same.values, series.values);
        let none = ChiWindow::new(vec![], 0.1).unwrap();
        let zero = cutoff_partial_trace(&series, &none);
        assert!(zero.values.iter().all(|v| v.norm() == 0.0));
        let chi = ChiWindow::new(vec![(2.0, 3.0)], 0.5).unwrap();
        assert_eq!(chi.value(2.5), 1.0);
        assert_eq!(chi.value(1.5), 0.0);
        assert_eq!(chi.value(3.5), 0.0);
        assert_abs_diff_eq!(chi.value(1.75), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(chi.value(3.25), 0.5, epsilon = 1e-12);
        // monotone on the ramps, inside [0,1]
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = chi.value(1.5 + 0.5 * i as f64 / 100.0);
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev);
            prev = v;
        }
        assert!(ChiWindow::new(vec![(0.0, 1.0), (1.1, 2.0)], 0.1).is_err());
        assert!(ChiWindow::new(vec![(1.0, 1.0)], 0.1).is_err());
    }

    #[test]
    fn cutoff_isolates_the_flat_circle_times_in_the_product() {
        let model = SuspensionModel::product(&[1.0]).unwrap();
        let spec = analytic_spectrum(&model, 200, Convention::BasicCount).unwrap();
        let ladder = [50.0, 100.0, 200.0];
        let grid = uniform_grid(0.5, 6.5, 0.005).unwrap();
        let mut series = Vec::new();
        for &cutoff in &ladder {
            series.push(
                evaluate_trace(
                    &spec,
                    FrequencyWindow::new(WindowShape::Gaussian, cutoff).unwrap(),
                    &grid,
                )
                .unwrap(),
            );
        }
        // keep [0.5, 6.15], gone by 6.25: removes 2π ≈ 6.283 and the mixed
        // windings ≥ 6.36 while keeping the integers
        let chi = ChiWindow::new(vec![(0.5, 6.15)], 0.1).unwrap();
        let cut: Vec<TraceSeries> =
            series.iter().map(|s| cutoff_partial_trace(s, &chi)).collect();
        let refs: Vec<&TraceSeries> = cut.iter().collect();
        let report = detect_on_series(&refs, &PeakParams::default()).unwrap();
        let times: Vec<f64> = report.detections.iter().map(|d| d.time).collect();
        assert_eq!(times.len(), 6, "times {times:?}");
        for (i, t) in times.iter().enumerate() {
            assert!((t - (i as f64 + 1.0)).abs() <= 0.05, "survivor {t}");
        }
        // without the cutoff the same scan also sees the mixed winding at
        // √(1 + 4π²), which the χ window then removes
        let mixed = (1.0 + 4.0 * PI * PI).sqrt();
        let raw_refs: Vec<&TraceSeries> = series.iter().collect();
        let raw = detect_on_series(&raw_refs, &PeakParams::default()).unwrap();
        assert!(
            raw.detections.iter().any(|d| (d.time - mixed).abs() <= 0.05),
            "raw times {:?}",
            raw.detections.iter().map(|d| d.time).collect::<Vec<_>>()
        );
        assert!(raw.detections.len() > 6);
    }

    #[test]
    fn poisson_verdict_passes_and_flags_corrupted_catalogs() {
        let m = SuspensionModel::sphere();
        let spec = sphere_spectrum(250, Convention::BasicCount);
        let report = detect_singularities(
            &spec,
            WindowShape::Gaussian,
            &[50.0, 100.0, 200.0],
            (1.0, 20.0),
            0.005,
            &PeakParams::default(),
        )
        .unwrap();
        let catalog = enumerate_sojourn_times(&m, 20.0, DEFAULT_MATCH_TOL, 8).unwrap();
        let verdict = verify_poisson(&catalog, &report, 0.05).unwrap();
        assert!(verdict.pass);
        assert!(verdict.unmatched.is_empty());
        assert_eq!(verdict.detected_catalog_times.len(), 3);
        for d in &verdict.report.detections {
            assert!(d.matched_time.is_some());
            assert_eq!(d.classification, Some(Classification::Minimal));
        }
        // negative control: drop the 2π entry and the verdict must fail
        let mut corrupted = catalog.clone();
        corrupted.entries.retain(|e| (e.time - TWO_PI).abs() > 0.1);
        let verdict = verify_poisson(&corrupted, &report, 0.05).unwrap();
        assert!(!verdict.pass);
        assert!(verdict.unmatched.iter().any(|t| (t - TWO_PI).abs() <= 0.05));
    }

    #[test]
    fn histograms_count_multiplicities_in_the_right_bins() {
        let torus =
            analytic_spectrum(&SuspensionModel::torus(), 30, Convention::BasicCount).unwrap();
        let hist = spectral_distribution(&torus, 1.0, 25.5).unwrap();
        // μ = k sits at the left edge of bin k
        for (i, &c) in hist.counts.iter().enumerate() {
            assert_eq!(c, 1.0, "bin {i}");
        }
        let sphere = sphere_spectrum(30, Convention::BasicCount);
        let hist = spectral_distribution(&sphere, 1.0, 20.5).unwrap();
        // μ_k = √(k(k+1)) ≈ k + ½ lands in bin k for every k ≥ 0
        for (i, &c) in hist.counts.iter().enumerate() {
            assert_eq!(c, 1.0, "bin {i}");
        }
        let empty = SpectralData {
            model: SuspensionModel::torus().descriptor(),
            convention: Convention::BasicCount,
            provenance: Provenance::Analytic,
            entries: vec![],
        };
        let hist = spectral_distribution(&empty, 1.0, 10.0).unwrap();
        assert!(hist.counts.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn threaded_trace_is_bitwise_identical() {
        let spec = sphere_spectrum(150, Convention::AmbientCount);
        let window = FrequencyWindow::new(WindowShape::Gaussian, 60.0).unwrap();
        let grid = uniform_grid(0.5, 15.0, 0.01).unwrap();
        let seq = evaluate_trace(&spec, window, &grid).unwrap();
        let par = evaluate_trace_threaded(&spec, window, &grid, 5).unwrap();
        for (a, b) in seq.values.iter().zip(&par.values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn unresolved_windows_are_flagged_not_fatal() {
        let spec = sphere_spectrum(20, Convention::BasicCount);
        let window = FrequencyWindow::new(WindowShape::Gaussian, 500.0).unwrap();
        let series = evaluate_trace(&spec, window, &[1.0, 2.0, 3.0]).unwrap();
        assert!(!series.window_resolved);
        // nonuniform grids and empty spectra are hard errors
        assert!(evaluate_trace(&spec, window, &[0.0, 1.0, 3.0]).is_err());
        let empty = SpectralData {
            model: SuspensionModel::sphere().descriptor(),
            convention: Convention::BasicCount,
            provenance: Provenance::Analytic,
            entries: vec![],
        };
        assert!(evaluate_trace(&empty, window, &[0.0, 1.0]).is_err());
    }
}
