//! TOML run configuration.
//!
//! Every key is optional; missing keys take the defaults of the reference
//! experiment (n = 100, 250 steps, out-degree cap 25, K_C = 100, the full
//! σ/θ_R/θ_F/rigid-fraction grid). Unknown keys are rejected. Angles are in
//! degrees. Grid keys accept a scalar or a list.
//!
//! ```toml
//! format_version = 1
//! sigma_deg = [10, 15]
//! theta_R_deg = 10
//! theta_F_deg = [40, 80]
//! rigid_fraction = [0.0, 0.5, 1.0]
//! runs_per_cell = 20
//! seed = 7
//!
//! [katz]
//! clamp_min = 0.05
//!
//! [plots]
//! trajectories = false
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::UpdateMode;
use crate::error::{Error, Result};
use crate::experiments::ExperimentSpec;
use crate::graph::KatzParams;
use crate::opinion::{deg_to_rad, rad_to_deg};

pub const FORMAT_VERSION: u32 = 1;

/// Environment variable that overrides `out_dir`.
pub const OUT_DIR_ENV: &str = "OPINET_OUT";

/// A scalar or a list in the config file; always a list once parsed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "OneOrMany", into = "Vec<f64>")]
pub struct Axis(pub Vec<f64>);

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl From<OneOrMany> for Axis {
    fn from(v: OneOrMany) -> Self {
        match v {
            OneOrMany::One(x) => Axis(vec![x]),
            OneOrMany::Many(xs) => Axis(xs),
        }
    }
}

impl From<Axis> for Vec<f64> {
    fn from(a: Axis) -> Self {
        a.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KatzConfig {
    pub beta: f64,
    pub alpha_fraction: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
}

impl Default for KatzConfig {
    fn default() -> Self {
        let k = KatzParams::default();
        Self {
            beta: k.beta,
            alpha_fraction: k.alpha_fraction,
            clamp_min: k.clamp_min,
            clamp_max: k.clamp_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    /// Consensus rate against rigid fraction, one panel per σ.
    pub sweep: bool,
    /// Opinion trajectories of single runs.
    pub trajectories: bool,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            sweep: true,
            trajectories: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub n: usize,
    pub mu_deg: f64,
    pub sigma_deg: Axis,
    #[serde(rename = "theta_R_deg")]
    pub theta_r_deg: Axis,
    #[serde(rename = "theta_F_deg")]
    pub theta_f_deg: Axis,
    pub rigid_fraction: Axis,
    pub runs_per_cell: usize,
    pub seed: u64,
    pub out_degree_cap: usize,
    pub k_c: f64,
    pub consensus_delta_deg: f64,
    pub eps_deg: f64,
    pub t_max: u32,
    pub p_nd: f64,
    pub update_mode: UpdateMode,
    pub out_dir: PathBuf,
    /// History cadence for single runs, in steps.
    pub snapshot_every: u32,
    pub katz: KatzConfig,
    pub plots: PlotConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = ExperimentSpec::default();
        Self {
            format_version: FORMAT_VERSION,
            n: spec.n,
            mu_deg: spec.mu_deg,
            sigma_deg: Axis(spec.sigma_deg),
            theta_r_deg: Axis(spec.theta_r_deg),
            theta_f_deg: Axis(spec.theta_f_deg),
            rigid_fraction: Axis(spec.rigid_fraction),
            runs_per_cell: spec.runs_per_cell,
            seed: spec.base_seed,
            out_degree_cap: spec.out_degree_cap,
            k_c: spec.k_c,
            consensus_delta_deg: 0.1,
            eps_deg: rad_to_deg(spec.eps),
            t_max: spec.t_max,
            p_nd: spec.p_nd,
            update_mode: spec.update_mode,
            out_dir: PathBuf::from("out"),
            snapshot_every: 1,
            katz: KatzConfig::default(),
            plots: PlotConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let field = e
                .span()
                .and_then(|s| text.get(s))
                .map(|s| s.trim().to_string())
                .unwrap_or_default();
            Error::config(field, message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::config(
                "format_version",
                format!("unsupported version {}, expected {FORMAT_VERSION}", self.format_version),
            ));
        }
        for (field, axis) in [
            ("sigma_deg", &self.sigma_deg),
            ("theta_R_deg", &self.theta_r_deg),
            ("theta_F_deg", &self.theta_f_deg),
            ("rigid_fraction", &self.rigid_fraction),
        ] {
            if axis.0.is_empty() {
                return Err(Error::config(field, "needs at least one value"));
            }
            if axis.0.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(field, "values must be finite"));
            }
        }
        if let Some(s) = self.sigma_deg.0.iter().find(|&&s| s <= 0.0) {
            return Err(Error::config("sigma_deg", format!("{s} must be positive")));
        }
        if self.snapshot_every == 0 {
            return Err(Error::config("snapshot_every", "must be at least 1"));
        }
        self.experiment_spec().validate()
    }

    /// Applies the output-directory environment override, if set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.out_dir = PathBuf::from(dir);
        }
    }

    pub fn experiment_spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            n: self.n,
            mu_deg: self.mu_deg,
            sigma_deg: self.sigma_deg.0.clone(),
            theta_r_deg: self.theta_r_deg.0.clone(),
            theta_f_deg: self.theta_f_deg.0.clone(),
            rigid_fraction: self.rigid_fraction.0.clone(),
            runs_per_cell: self.runs_per_cell,
            base_seed: self.seed,
            out_degree_cap: self.out_degree_cap,
            k_c: self.k_c,
            consensus_delta: deg_to_rad(self.consensus_delta_deg),
            eps: deg_to_rad(self.eps_deg),
            t_max: self.t_max,
            p_nd: self.p_nd,
            katz: KatzParams {
                beta: self.katz.beta,
                alpha_fraction: self.katz.alpha_fraction,
                clamp_min: self.katz.clamp_min,
                clamp_max: self.katz.clamp_max,
            },
            update_mode: self.update_mode,
        }
    }
}
