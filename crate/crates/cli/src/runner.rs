//! Stage orchestration. Every subcommand builds its artifacts through the
//! same manifest bookkeeping: stages run sequentially, each successful
//! stage appends its artifact list to `manifest.json`, and a failing stage
//! is recorded there by name before the error propagates. Reruns with the
//! same config produce byte-identical artifacts: seeds and summation orders
//! are fixed and no output records wall-clock time.

use crate::config::{ExperimentConfig, Validated};
use crate::io;
use leafwave::calculus::{apply_projector, commutation_residual};
use leafwave::grid::{Grid, GridFunction};
use leafwave::sojourn::{enumerate_sojourn_times_threaded, SojournCatalog};
use leafwave::spectral::{
    analytic_spectrum, numeric_spectrum, spectrum_compare, CompareReport, Convention, SpectralData,
};
use leafwave::wavetrace::{
    cutoff_partial_trace, detect_on_series, evaluate_trace_threaded, uniform_grid, verify_poisson,
    FrequencyWindow, PeakParams, PoissonVerdict, SingularityReport, TraceSeries,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;

pub enum Outcome {
    Pass,
    Fail(String),
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<leafwave::Error> for Failure {
    fn from(e: leafwave::Error) -> Self {
        match e {
            // bad parameters are a setup problem, not a numerical breakdown
            leafwave::Error::Resolution(_)
            | leafwave::Error::GridTooCoarse(_)
            | leafwave::Error::InvalidModel(_)
            | leafwave::Error::InvalidInput(_) => Failure::Config(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("io: {e}"))
    }
}

#[derive(Serialize, Default)]
struct Manifest {
    stages: Vec<StageRecord>,
    failed_stage: Option<String>,
    error: Option<String>,
}

#[derive(Serialize)]
struct StageRecord {
    name: String,
    artifacts: Vec<String>,
}

/// Sequential stage runner writing `manifest.json` after every stage.
struct Pipeline<'a> {
    cfg: &'a ExperimentConfig,
    v: &'a Validated,
    out: PathBuf,
    manifest: Manifest,
}

impl<'a> Pipeline<'a> {
    fn new(cfg: &'a ExperimentConfig, v: &'a Validated) -> Result<Self, Failure> {
        std::fs::create_dir_all(&cfg.out)?;
        Ok(Pipeline { cfg, v, out: cfg.out.clone(), manifest: Manifest::default() })
    }

    fn write_manifest(&self) -> Result<(), Failure> {
        io::write_json(&self.out.join("manifest.json"), &self.manifest)?;
        Ok(())
    }

    /// Record a stage outcome; on failure the manifest names the stage.
    fn track<T>(
        &mut self,
        name: &str,
        result: Result<(T, Vec<String>), Failure>,
    ) -> Result<T, Failure> {
        match result {
            Ok((value, artifacts)) => {
                self.manifest.stages.push(StageRecord { name: name.to_string(), artifacts });
                self.write_manifest()?;
                Ok(value)
            }
            Err(failure) => {
                self.manifest.failed_stage = Some(name.to_string());
                self.manifest.error = Some(failure.message().to_string());
                let _ = self.write_manifest();
                Err(failure)
            }
        }
    }
}

// --- stage bodies -------------------------------------------------------

struct SpectrumOut {
    /// Spectrum in the configured convention, used downstream.
    data: SpectralData,
    compare: CompareReport,
}

fn spectrum_stage(p: &Pipeline) -> Result<(SpectrumOut, Vec<String>), Failure> {
    let cfg = p.cfg;
    let data = analytic_spectrum(&p.v.model, cfg.k_max, p.v.convention)?;
    io::write_spectrum_csv(&p.out.join("spectrum.csv"), &data)?;
    let numeric = numeric_spectrum(&p.v.model, cfg.n_modes, cfg.grid)?;
    io::write_spectrum_csv(&p.out.join("spectrum_numeric.csv"), &numeric)?;
    // the numeric route books one entry per distinct eigenvalue, so the
    // cross-check runs against a basic-counted closed form
    let reference = if p.v.convention == Convention::BasicCount {
        data.clone()
    } else {
        analytic_spectrum(&p.v.model, cfg.k_max, Convention::BasicCount)?
    };
    let compare = spectrum_compare(&reference, &numeric, cfg.tol)?;
    Ok((
        SpectrumOut { data, compare },
        vec!["spectrum.csv".into(), "spectrum_numeric.csv".into()],
    ))
}

fn sojourn_stage(p: &Pipeline) -> Result<(SojournCatalog, Vec<String>), Failure> {
    let cfg = p.cfg;
    let catalog = enumerate_sojourn_times_threaded(
        &p.v.model,
        cfg.t_max,
        cfg.tol,
        cfg.seed_budget,
        p.v.threads,
    )?;
    io::write_sojourn_csv(&p.out.join("sojourn.csv"), &catalog)?;
    io::write_json(&p.out.join("sojourn.json"), &catalog)?;
    Ok((catalog, vec!["sojourn.csv".into(), "sojourn.json".into()]))
}

fn evaluate_ladder(p: &Pipeline, spectrum: &SpectralData) -> Result<Vec<TraceSeries>, Failure> {
    let cfg = p.cfg;
    let top = *cfg.lambda_ladder.last().unwrap();
    let max_mu = spectrum.max_lambda().sqrt();
    if max_mu < top {
        return Err(Failure::Config(format!(
            "spectrum reaches μ = {max_mu:.3} but the ladder asks for Λ = {top}; raise k_max"
        )));
    }
    let grid = uniform_grid(cfg.t_min, cfg.t_max, cfg.t_step)?;
    let mut series = Vec::with_capacity(cfg.lambda_ladder.len());
    for &cutoff in &cfg.lambda_ladder {
        let window = FrequencyWindow::new(p.v.window, cutoff)?;
        let mut s = evaluate_trace_threaded(spectrum, window, &grid, p.v.threads)?;
        if let Some(chi) = &p.v.chi {
            s = cutoff_partial_trace(&s, chi);
        }
        series.push(s);
    }
    Ok(series)
}

fn trace_stage(
    p: &Pipeline,
    spectrum: &SpectralData,
) -> Result<(Vec<TraceSeries>, Vec<String>), Failure> {
    let series = evaluate_ladder(p, spectrum)?;
    let mut artifacts = Vec::new();
    for s in &series {
        let name = format!("trace_{}.csv", s.window.cutoff);
        io::write_trace_csv(&p.out.join(&name), s)?;
        artifacts.push(name);
    }
    Ok((series, artifacts))
}

fn detect_stage(
    p: &Pipeline,
    series: &[TraceSeries],
) -> Result<(SingularityReport, Vec<String>), Failure> {
    let refs: Vec<&TraceSeries> = series.iter().collect();
    let report = detect_on_series(&refs, &PeakParams::default())?;
    io::write_json(&p.out.join("singularities.json"), &report)?;
    Ok((report, vec!["singularities.json".into()]))
}

fn verify_stage(
    p: &Pipeline,
    catalog: &SojournCatalog,
    report: &SingularityReport,
) -> Result<(PoissonVerdict, Vec<String>), Failure> {
    let verdict = verify_poisson(catalog, report, 10.0 * p.cfg.t_step)?;
    io::write_json(&p.out.join("verdict.json"), &verdict)?;
    Ok((verdict, vec!["verdict.json".into()]))
}

fn summary_lines(
    cfg: &ExperimentConfig,
    spectrum: Option<&SpectrumOut>,
    catalog: Option<&SojournCatalog>,
    report: Option<&SingularityReport>,
    verdict: Option<&PoissonVerdict>,
) -> (Vec<String>, Outcome) {
    let mut lines = vec![
        format!("model: {}", cfg.model),
        format!("convention: {}", cfg.convention),
        format!("window: {}", cfg.window),
    ];
    let mut failures = Vec::new();
    if let Some(s) = spectrum {
        let status = if s.compare.pass { "PASS" } else { "FAIL" };
        lines.push(format!(
            "spectrum: {} closed-form modes; numeric cross-check over {} distinct values: max rel error {:.3e}: {status}",
            s.data.entries.len(),
            s.compare.modes_compared,
            s.compare.max_rel_error,
        ));
        if !s.compare.pass {
            failures.push(format!(
                "numeric spectrum deviates by {:.3e} (tolerance {:.1e})",
                s.compare.max_rel_error, cfg.tol
            ));
        }
    }
    if let Some(c) = catalog {
        let times: Vec<String> = c.times().iter().map(f64::to_string).collect();
        lines.push(format!(
            "sojourn: {} return times up to t = {}: {}",
            c.entries.len(),
            cfg.t_max,
            times.join("; ")
        ));
    }
    if let Some(r) = report {
        lines.push(format!(
            "trace: ladder {:?} on [{}, {}] step {} ({} detections)",
            r.ladder,
            cfg.t_min,
            cfg.t_max,
            cfg.t_step,
            r.detections.len()
        ));
    }
    if let Some(v) = verdict {
        let status = if v.pass { "PASS" } else { "FAIL" };
        lines.push(format!(
            "verification: {status} (matched {}, unmatched {}, catalog undetected {})",
            v.report.detections.len() - v.unmatched.len(),
            v.unmatched.len(),
            v.undetected_catalog_times.len()
        ));
        if !v.pass {
            failures.push(format!(
                "detections at {:?} match no sojourn time",
                v.unmatched
            ));
        }
    }
    let outcome = if failures.is_empty() {
        lines.push("overall: PASS".into());
        Outcome::Pass
    } else {
        lines.push("overall: FAIL".into());
        Outcome::Fail(failures.join("; "))
    };
    (lines, outcome)
}

fn emit_summary(p: &mut Pipeline, lines: &[String]) -> Result<(), Failure> {
    let r = io::write_text(&p.out.join("summary.txt"), lines)
        .map_err(Failure::from)
        .map(|()| ((), vec!["summary.txt".into()]));
    p.track("summary", r)?;
    for line in lines {
        println!("{line}");
    }
    Ok(())
}

fn needs_detection_ladder(cfg: &ExperimentConfig) -> Result<(), Failure> {
    if cfg.lambda_ladder.len() < 3 {
        return Err(Failure::Config(format!(
            "singularity detection needs at least 3 ladder cutoffs, got {:?}",
            cfg.lambda_ladder
        )));
    }
    Ok(())
}

// --- subcommand entry points ---------------------------------------------

pub fn spectrum(cfg: &ExperimentConfig, v: &Validated) -> Result<Outcome, Failure> {
    let mut p = Pipeline::new(cfg, v)?;
    let r = spectrum_stage(&p);
    let out = p.track("spectrum", r)?;
    let (lines, outcome) = summary_lines(cfg, Some(&out), None, None, None);
    emit_summary(&mut p, &lines)?;
    Ok(outcome)
}

pub fn sojourn(cfg: &ExperimentConfig, v: &Validated) -> Result<Outcome, Failure> {
    let mut p = Pipeline::new(cfg, v)?;
    let r = sojourn_stage(&p);
    let catalog = p.track("sojourn", r)?;
    let (lines, outcome) = summary_lines(cfg, None, Some(&catalog), None, None);
    emit_summary(&mut p, &lines)?;
    Ok(outcome)
}

pub fn trace(cfg: &ExperimentConfig, v: &Validated) -> Result<Outcome, Failure> {
    let mut p = Pipeline::new(cfg, v)?;
    let spectrum = analytic_spectrum(&v.model, cfg.k_max, v.convention).map_err(Failure::from);
    let spectrum = p.track("spectrum", spectrum.map(|s| (s, vec![])))?;
    let r = trace_stage(&p, &spectrum);
    p.track("trace", r)?;
    let (lines, outcome) = summary_lines(cfg, None, None, None, None);
    emit_summary(&mut p, &lines)?;
    Ok(outcome)
}

pub fn verify(cfg: &ExperimentConfig, v: &Validated) -> Result<Outcome, Failure> {
    needs_detection_ladder(cfg)?;
    let mut p = Pipeline::new(cfg, v)?;
    let spectrum = analytic_spectrum(&v.model, cfg.k_max, v.convention).map_err(Failure::from);
    let spectrum = p.track("spectrum", spectrum.map(|s| (s, vec![])))?;
    let r = sojourn_stage(&p);
    let catalog = p.track("sojourn", r)?;
    let series = evaluate_ladder(&p, &spectrum);
    let series = p.track("trace", series.map(|s| (s, vec![])))?;
    let r = detect_stage(&p, &series);
    let report = p.track("detect", r)?;
    let r = verify_stage(&p, &catalog, &report);
    let verdict = p.track("verify", r)?;
    let (lines, outcome) = summary_lines(cfg, None, Some(&catalog), Some(&report), Some(&verdict));
    emit_summary(&mut p, &lines)?;
    Ok(outcome)
}

pub fn run_full(cfg: &ExperimentConfig, v: &Validated) -> Result<Outcome, Failure> {
    needs_detection_ladder(cfg)?;
    let mut p = Pipeline::new(cfg, v)?;
    let r = spectrum_stage(&p);
    let spectrum = p.track("spectrum", r)?;
    let r = sojourn_stage(&p);
    let catalog = p.track("sojourn", r)?;
    let r = trace_stage(&p, &spectrum.data);
    let series = p.track("trace", r)?;
    let r = detect_stage(&p, &series);
    let report = p.track("detect", r)?;
    let r = verify_stage(&p, &catalog, &report);
    let verdict = p.track("verify", r)?;
    let (lines, outcome) =
        summary_lines(cfg, Some(&spectrum), Some(&catalog), Some(&report), Some(&verdict));
    emit_summary(&mut p, &lines)?;
    Ok(outcome)
}

// --- projector identity suite ---------------------------------------------

#[derive(Serialize)]
struct ProjectorReport {
    grid: Vec<usize>,
    trials: usize,
    max_idempotency_defect: f64,
    max_adjoint_defect: f64,
    commutation_residuals: Vec<f64>,
    commutation_orders: Vec<f64>,
    pass: bool,
}

fn commutation_sizes(model: &leafwave::model::SuspensionModel, m: usize) -> Vec<usize> {
    let transverse = model.transverse_indices();
    (0..model.coord_names().len())
        .map(|i| {
            if transverse.contains(&i) {
                m
            } else if i == model.theta_index() {
                8
            } else {
                6
            }
        })
        .collect()
}

fn smooth_probe(model: &leafwave::model::SuspensionModel) -> impl Fn(&[f64]) -> f64 + '_ {
    let transverse = model.transverse_indices();
    let z = model.z_index();
    let theta = model.theta_index();
    move |c: &[f64]| {
        let mut v = 1.0 + c[theta].cos();
        for &i in &transverse {
            if Some(i) == z {
                v *= c[i].exp();
            } else {
                let period = model.period(i).unwrap_or(1.0);
                v *= (std::f64::consts::TAU * c[i] / period).cos();
            }
        }
        v
    }
}

pub fn projector_check(cfg: &ExperimentConfig, v: &Validated) -> Result<Outcome, Failure> {
    let mut p = Pipeline::new(cfg, v)?;
    let body = || -> Result<(ProjectorReport, Vec<String>), Failure> {
        let coords = v.model.coord_names().len();
        // a full cube in 4+ coordinates would not fit in memory at the
        // default edge, so higher-codimension models get a smaller cube
        let edge = if coords <= 3 { cfg.projector_grid } else { cfg.projector_grid.min(16) };
        let grid = Grid::cube(&v.model, edge)?;
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let mut idem_max = 0.0f64;
        let mut adj_max = 0.0f64;
        let mut prev: Option<(GridFunction, GridFunction)> = None;
        let trials = 20;
        for _ in 0..trials {
            let f = GridFunction {
                values: (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let pf = apply_projector(&grid, &f)?;
            let ppf = apply_projector(&grid, &pf)?;
            let idem = pf
                .values
                .iter()
                .zip(&ppf.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            idem_max = idem_max.max(idem);
            if let Some((g, pg)) = &prev {
                let lhs = grid.inner(&pf, g)?;
                let rhs = grid.inner(&f, pg)?;
                let scale = grid.norm(&f)? * grid.norm(g)?;
                adj_max = adj_max.max((lhs - rhs).abs() / scale);
            }
            prev = Some((f, pf));
        }
        let base = (cfg.projector_grid / 2).max(16);
        let probe = smooth_probe(&v.model);
        let mut residuals = Vec::new();
        for m in [base, base * 2, base * 4] {
            let g = Grid::new(&v.model, &commutation_sizes(&v.model, m))?;
            let f = GridFunction::from_fn(&g, &probe);
            residuals.push(commutation_residual(&g, &f)?);
        }
        let orders: Vec<f64> =
            residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let pass = idem_max <= 1e-12 && adj_max <= 1e-10 && orders.iter().all(|&o| o >= 1.8);
        let report = ProjectorReport {
            grid: grid.dims(),
            trials,
            max_idempotency_defect: idem_max,
            max_adjoint_defect: adj_max,
            commutation_residuals: residuals,
            commutation_orders: orders,
            pass,
        };
        io::write_json(&p.out.join("projector_report.json"), &report)?;
        Ok((report, vec!["projector_report.json".into()]))
    };
    let report = p.track("projector-check", body())?;
    let mut lines = vec![
        format!("model: {}", cfg.model),
        format!("projector grid: {:?}", report.grid),
        format!("idempotency defect: {:.3e}", report.max_idempotency_defect),
        format!("self-adjointness defect: {:.3e}", report.max_adjoint_defect),
        format!("commutation orders: {:?}", report.commutation_orders),
    ];
    let outcome = if report.pass {
        lines.push("overall: PASS".into());
        Outcome::Pass
    } else {
        lines.push("overall: FAIL".into());
        Outcome::Fail("projector identities violated".into())
    };
    emit_summary(&mut p, &lines)?;
    Ok(outcome)
}
