//! Experiment configuration: JSON file, command line overrides, defaults.
//!
//! Precedence is defaults < config file < flags. The stored form keeps
//! plain strings and numbers so a round trip through JSON reproduces the
//! input byte for byte; [`ExperimentConfig::validate`] turns it into typed
//! model/window/convention values and rejects inconsistent settings.

use leafwave::model::SuspensionModel;
use leafwave::spectral::Convention;
use leafwave::wavetrace::{ChiWindow, WindowShape};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// "sphere", "torus", or "product".
    pub model: String,
    /// Circle circumferences for the product model; ignored otherwise.
    pub factor_lengths: Vec<f64>,
    /// Multiplicity convention: "basic" or "ambient".
    pub convention: String,
    /// Closed-form spectrum depth (modes per factor).
    pub k_max: u32,
    /// 1D grid size for the numeric eigensolver.
    pub grid: usize,
    /// Number of numeric modes cross-checked against the closed form.
    pub n_modes: usize,
    /// Cube edge for the projector identity suite.
    pub projector_grid: usize,
    /// Upper end of both the sojourn sweep and the trace scan.
    pub t_max: f64,
    /// Sojourn matching tolerance.
    pub tol: f64,
    /// Flow seeds for sojourn enumeration.
    pub seed_budget: usize,
    /// Frequency cutoffs Λ, ascending.
    pub lambda_ladder: Vec<f64>,
    /// Window shape: "gaussian" or "cosine".
    pub window: String,
    /// Lower end of the trace scan; keep a margin above 0, whose trace
    /// singularity is universal.
    pub t_min: f64,
    pub t_step: f64,
    /// Keep intervals of a smooth time cutoff applied to the trace before
    /// detection; empty = no cutoff.
    pub chi_keeps: Vec<(f64, f64)>,
    pub chi_ramp: f64,
    /// Artifact directory.
    pub out: PathBuf,
    /// Worker threads; 0 = one per available core.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: "sphere".into(),
            factor_lengths: vec![1.0],
            convention: "basic".into(),
            k_max: 400,
            grid: 512,
            n_modes: 21,
            projector_grid: 64,
            t_max: 20.0,
            tol: 1e-6,
            seed_budget: 64,
            lambda_ladder: vec![50.0, 100.0, 200.0],
            window: "gaussian".into(),
            t_min: 0.5,
            t_step: 0.005,
            chi_keeps: vec![],
            chi_ramp: 0.1,
            out: PathBuf::from("out"),
            threads: 0,
        }
    }
}

/// Values taken from command line flags; `None` leaves the config alone.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub model: Option<String>,
    pub k_max: Option<u32>,
    pub grid: Option<usize>,
    pub t_max: Option<f64>,
    pub tol: Option<f64>,
    pub lambda_ladder: Option<Vec<f64>>,
    pub window: Option<String>,
    pub t_min: Option<f64>,
    pub t_step: Option<f64>,
    pub out: Option<PathBuf>,
    pub convention: Option<String>,
    pub threads: Option<usize>,
}

/// Typed view of a validated config.
pub struct Validated {
    pub model: SuspensionModel,
    pub convention: Convention,
    pub window: WindowShape,
    pub chi: Option<ChiWindow>,
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.model {
            self.model = v.clone();
        }
        if let Some(v) = o.k_max {
            self.k_max = v;
        }
        if let Some(v) = o.grid {
            self.grid = v;
        }
        if let Some(v) = o.t_max {
            self.t_max = v;
        }
        if let Some(v) = o.tol {
            self.tol = v;
        }
        if let Some(v) = &o.lambda_ladder {
            self.lambda_ladder = v.clone();
        }
        if let Some(v) = &o.window {
            self.window = v.clone();
        }
        if let Some(v) = o.t_min {
            self.t_min = v;
        }
        if let Some(v) = o.t_step {
            self.t_step = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = &o.convention {
            self.convention = v.clone();
        }
        if let Some(v) = o.threads {
            self.threads = v;
        }
    }

    pub fn validate(&self) -> Result<Validated, String> {
        let model = match self.model.as_str() {
            "sphere" => SuspensionModel::sphere(),
            "torus" => SuspensionModel::torus(),
            "product" => {
                SuspensionModel::product(&self.factor_lengths).map_err(|e| e.to_string())?
            }
            other => return Err(format!("unknown model '{other}'")),
        };
        let convention = Convention::parse(&self.convention).map_err(|e| e.to_string())?;
        let window = WindowShape::parse(&self.window).map_err(|e| e.to_string())?;
        for (name, v) in [
            ("tol", self.tol),
            ("t_step", self.t_step),
            ("t_min", self.t_min),
            ("chi_ramp", self.chi_ramp),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.t_max > self.t_min) {
            return Err(format!(
                "t range is empty: t_min = {}, t_max = {}",
                self.t_min, self.t_max
            ));
        }
        if self.lambda_ladder.is_empty() {
            return Err("lambda_ladder must not be empty".into());
        }
        if self.lambda_ladder.windows(2).any(|w| w[1] <= w[0]) || self.lambda_ladder[0] <= 0.0 {
            return Err(format!(
                "lambda_ladder must be positive and strictly increasing, got {:?}",
                self.lambda_ladder
            ));
        }
        if self.n_modes == 0 || self.k_max == 0 {
            return Err("k_max and n_modes must be positive".into());
        }
        if self.grid < 4 * self.n_modes {
            return Err(format!(
                "grid {} is below the resolution heuristic 4·n_modes = {}",
                self.grid,
                4 * self.n_modes
            ));
        }
        if self.seed_budget == 0 {
            return Err("seed_budget must be positive".into());
        }
        if self.projector_grid < 8 {
            return Err(format!("projector_grid {} is too coarse", self.projector_grid));
        }
        let chi = if self.chi_keeps.is_empty() {
            None
        } else {
            Some(ChiWindow::new(self.chi_keeps.clone(), self.chi_ramp).map_err(|e| e.to_string())?)
        };
        let threads = if self.threads == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            self.threads
        };
        Ok(Validated { model, convention, window, chi, threads })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig {
            model: "product".into(),
            factor_lengths: vec![1.0, 2.5],
            chi_keeps: vec![(0.5, 6.15)],
            lambda_ladder: vec![25.0, 50.0, 100.0],
            ..ExperimentConfig::default()
        };
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn partial_configs_inherit_defaults_and_flags_win() {
        let partial: ExperimentConfig =
            serde_json::from_str(r#"{"model": "torus", "k_max": 100}"#).unwrap();
        assert_eq!(partial.model, "torus");
        assert_eq!(partial.k_max, 100);
        assert_eq!(partial.t_step, ExperimentConfig::default().t_step);
        let mut cfg = partial;
        cfg.apply(&Overrides { k_max: Some(250), ..Overrides::default() });
        assert_eq!(cfg.k_max, 250);
        assert_eq!(cfg.model, "torus");
    }

    #[test]
    fn validation_rejects_inconsistencies() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.model = "banana".into();
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig { t_min: 5.0, t_max: 4.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig { lambda_ladder: vec![100.0, 50.0], ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig { grid: 16, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig { chi_keeps: vec![(3.0, 2.0)], ..Default::default() };
        assert!(cfg.validate().is_err());
        // unknown keys in a config file are config errors, not silently kept
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"modell": "torus"}"#).is_err());
    }
}
