//! Experiment configuration: TOML with strict keys, validated defaults,
//! and a CFL pre-check derived from the configured data.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use ul_nse_core::Grid;

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown experiment {0:?}; registered: {1}")]
    UnknownExperiment(String, String),
    #[error("bad grid: {0}")]
    Grid(String),
    #[error(
        "dt = {dt} violates the CFL bound dt <= h/(2 max|u|) = {bound:.4e} \
         (h = {h:.4e}, estimated max|u| = {umax:.3})"
    )]
    Cfl { dt: f64, bound: f64, h: f64, umax: f64 },
    #[error("bad value for {0}: {1}")]
    Bad(String, String),
}

pub const EXPERIMENTS: &[&str] = &[
    "max_principle",
    "dissipative",
    "growth",
    "uniqueness",
    "smoothing",
    "lemmas",
];

fn default_n() -> usize {
    256
}
fn default_box() -> f64 {
    32.0 * std::f64::consts::PI
}
fn default_seed() -> u64 {
    1
}
fn default_dt() -> f64 {
    0.02
}
fn default_t_end() -> f64 {
    20.0
}
fn default_alpha() -> f64 {
    1.0
}
fn default_diag_every() -> usize {
    50
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_r_values() -> Vec<f64> {
    vec![4.0, 8.0, 16.0]
}
fn default_center_count() -> usize {
    20
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}
fn default_k() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_box")]
    pub box_length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: default_n(),
            box_length: default_box(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_diag_every")]
    pub diag_every: usize,
    /// Ball scale for diagnostics; 0 picks min(L/8, 4).
    #[serde(default)]
    pub diag_r: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            alpha: default_alpha(),
            dt: default_dt(),
            t_end: default_t_end(),
            diag_every: default_diag_every(),
            diag_r: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// taylor_green | random_bump | random_band | rough_highfreq |
    /// sinusoidal_nondecaying | zero | snapshot
    #[serde(default = "default_tg")]
    pub kind: String,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Spectral cap (in box modes) for the random generators.
    #[serde(default = "default_k")]
    pub k_cap: usize,
    /// Snapshot path for kind = "snapshot".
    #[serde(default)]
    pub path: String,
}

fn default_tg() -> String {
    "taylor_green".into()
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: default_tg(),
            amplitude: default_amplitude(),
            k_cap: default_k(),
            path: String::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    /// zero | constant | sinusoidal | random_smooth
    #[serde(default = "default_zero")]
    pub kind: String,
    /// Constant part of the forcing.
    #[serde(default)]
    pub gx: f64,
    #[serde(default)]
    pub gy: f64,
    /// Amplitude of the oscillatory part.
    #[serde(default)]
    pub amplitude: f64,
    /// Mode number of the oscillatory part.
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_zero() -> String {
    "zero".into()
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig {
            kind: default_zero(),
            gx: 0.0,
            gy: 0.0,
            amplitude: 0.0,
            k: default_k(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub r_values: Vec<f64>,
    pub center_count: usize,
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            r_values: default_r_values(),
            center_count: default_center_count(),
            seeds: default_seeds(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    /// Dissipative experiment: the level the trajectory must enter and keep;
    /// 0 derives it from the settled tail of the run.
    pub dissipative_level: f64,
    /// Fraction of t_end by which the level must be reached.
    pub t_half_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub thresholds: ThresholdConfig,
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.grid.n, self.grid.box_length).map_err(|e| ConfigError::Grid(e.to_string()))
    }

    /// Effective diagnostic radius.
    pub fn diag_r(&self) -> f64 {
        if self.solver.diag_r > 0.0 {
            self.solver.diag_r
        } else {
            (self.grid.box_length / 8.0).min(4.0)
        }
    }

    /// Validate structure, ranges, and the CFL bound estimated from the
    /// configured initial data and forcing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(ConfigError::UnknownExperiment(
                self.experiment.clone(),
                EXPERIMENTS.join(", "),
            ));
        }
        let grid = self.grid()?;
        if !(self.solver.dt > 0.0) {
            return Err(ConfigError::Bad("solver.dt".into(), "must be positive".into()));
        }
        if !(self.solver.t_end > 0.0) {
            return Err(ConfigError::Bad(
                "solver.t_end".into(),
                "must be positive".into(),
            ));
        }
        if self.solver.diag_every == 0 {
            return Err(ConfigError::Bad(
                "solver.diag_every".into(),
                "must be at least 1".into(),
            ));
        }
        let known_inits = [
            "taylor_green",
            "random_bump",
            "random_band",
            "rough_highfreq",
            "sinusoidal_nondecaying",
            "zero",
            "snapshot",
        ];
        if !known_inits.contains(&self.initial.kind.as_str()) {
            return Err(ConfigError::Bad(
                "initial.kind".into(),
                format!("unknown generator {:?}", self.initial.kind),
            ));
        }
        let known_forcings = ["zero", "constant", "sinusoidal", "random_smooth"];
        if !known_forcings.contains(&self.forcing.kind.as_str()) {
            return Err(ConfigError::Bad(
                "forcing.kind".into(),
                format!("unknown forcing {:?}", self.forcing.kind),
            ));
        }

        // CFL pre-check from the configured amplitudes: the mean velocity of
        // an undamped run with constant forcing reaches |g| t_end.
        let g_const = self.forcing.gx.hypot(self.forcing.gy);
        let mean_growth = if self.solver.alpha > 0.0 {
            g_const / self.solver.alpha
        } else {
            g_const * self.solver.t_end
        };
        let umax = (self.initial.amplitude + mean_growth + self.forcing.amplitude).max(0.1);
        let h = grid.spacing();
        let bound = h / (2.0 * umax);
        if self.solver.dt > bound {
            return Err(ConfigError::Cfl {
                dt: self.solver.dt,
                bound,
                h,
                umax,
            });
        }
        Ok(())
    }
}

/// Parse and validate a config file.
pub fn parse_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
    let cfg: ExperimentConfig = toml::from_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg: ExperimentConfig = toml::from_str("experiment = \"lemmas\"").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.grid.n, 256);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.sweep.r_values, vec![4.0, 8.0, 16.0]);
        assert!((cfg.grid.box_length - 32.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = toml::from_str::<ExperimentConfig>(
            "experiment = \"lemmas\"\n[solver]\nviscocity = 1.0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("viscocity"), "{err}");
    }

    #[test]
    fn unknown_experiment_rejected() {
        let cfg: ExperimentConfig = toml::from_str("experiment = \"vortices\"").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, ConfigError::UnknownExperiment(..)));
    }

    #[test]
    fn cfl_violation_cites_bound() {
        let cfg: ExperimentConfig = toml::from_str(
            "experiment = \"growth\"\n[solver]\nalpha = 0.0\ndt = 5.0\n[forcing]\nkind = \"constant\"\ngx = 1.0\n",
        )
        .unwrap();
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("CFL"), "{msg}");
        assert!(msg.contains("h ="), "{msg}");
    }
}
