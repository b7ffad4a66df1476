//! TOML experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use ppds_core::precond::{design_asp, design_ovdp, design_pdp, design_sp, PDP_DEFAULT_THETA};
use ppds_core::problems::{GsrConfig, MnrConfig, UnmixConfig};
use ppds_core::solver::{DEFAULT_FEAS_TOL, DEFAULT_MAX_ITERS, DEFAULT_ORACLE_ITERS, DEFAULT_STOP_THRESHOLD};
use ppds_core::{DesignTag, OpGrid, PreconditionerPair};
use serde::Deserialize;

/// Malformed or inconsistent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Mnr,
    Unmix,
    Gsr,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Mnr => "mnr",
            Task::Unmix => "unmix",
            Task::Gsr => "gsr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_stop_threshold")]
    pub stop_threshold: f64,
    #[serde(default = "default_oracle_iters")]
    pub oracle_iters: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_feas_tol")]
    pub feas_tol: f64,
    pub mnr: Option<MnrSection>,
    pub unmix: Option<UnmixSection>,
    pub gsr: Option<GsrSection>,
    #[serde(default)]
    pub designs: Vec<DesignSpec>,
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}
fn default_stop_threshold() -> f64 {
    DEFAULT_STOP_THRESHOLD
}
fn default_oracle_iters() -> usize {
    DEFAULT_ORACLE_ITERS
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_record_every() -> usize {
    1
}
fn default_feas_tol() -> f64 {
    DEFAULT_FEAS_TOL
}

/// Mixed-noise removal. Unset radii and `lambda` follow the standard formulas.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnrSection {
    pub dims: [usize; 3],
    #[serde(default = "default_mnr_sigma")]
    pub sigma: f64,
    #[serde(default = "default_p_s")]
    pub p_s: f64,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub stripe_fraction: f64,
    #[serde(default)]
    pub stripe_amplitude: f64,
}

fn default_mnr_sigma() -> f64 {
    0.05
}
fn default_p_s() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnmixSection {
    pub n1: usize,
    pub n2: usize,
    pub bands: usize,
    pub endmembers: usize,
    pub active: Option<usize>,
    #[serde(default = "default_mnr_sigma")]
    pub sigma: f64,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsrSection {
    pub vertices: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    pub pieces: Option<usize>,
    pub rate: Option<f64>,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
}

fn default_k() -> usize {
    6
}

/// One `[[designs]]` table; list-valued parameters expand to one design each.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DesignSpec {
    Sp {
        gamma1: Vec<f64>,
        /// Defaults to the grid's block norm bound.
        mu_sp: Option<f64>,
    },
    Asp {},
    Pdp {
        tau: Vec<f64>,
        theta: Option<f64>,
    },
    Ovdp {
        beta: Vec<f64>,
    },
}

/// A single preconditioner design after list expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignChoice {
    Sp { gamma1: f64, mu_sp: Option<f64> },
    Asp,
    Pdp { tau: f64, theta: f64 },
    Ovdp { beta: f64 },
}

impl DesignChoice {
    pub fn tag(&self) -> DesignTag {
        match *self {
            DesignChoice::Sp { gamma1, .. } => DesignTag::Sp { gamma1 },
            DesignChoice::Asp => DesignTag::Asp,
            DesignChoice::Pdp { tau, theta } => DesignTag::Pdp { tau, theta },
            DesignChoice::Ovdp { beta } => DesignTag::Ovdp { beta },
        }
    }

    pub fn build(&self, grid: &OpGrid) -> ppds_core::Result<PreconditionerPair> {
        match *self {
            DesignChoice::Sp { gamma1, mu_sp } => {
                let mu = mu_sp.unwrap_or_else(|| grid.block_norm_bound());
                design_sp(grid, gamma1, mu)
            }
            DesignChoice::Asp => design_asp(grid),
            DesignChoice::Pdp { tau, theta } => design_pdp(grid, tau, theta),
            DesignChoice::Ovdp { beta } => design_ovdp(grid, beta),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        if self.max_iters == 0 || self.oracle_iters == 0 || self.record_every == 0 {
            return err("max_iters, oracle_iters and record_every must be positive".into());
        }
        if !(self.stop_threshold > 0.0) || !(self.feas_tol >= 0.0) {
            return err("stop_threshold must be positive and feas_tol nonnegative".into());
        }
        let present = [
            (Task::Mnr, self.mnr.is_some()),
            (Task::Unmix, self.unmix.is_some()),
            (Task::Gsr, self.gsr.is_some()),
        ];
        for (task, has) in present {
            if task == self.task && !has {
                return err(format!("task = \"{task}\" needs a [{task}] section"));
            }
            if task != self.task && has {
                return err(format!("[{task}] section given but task = \"{}\"", self.task));
            }
        }
        if self.designs.is_empty() {
            return err("at least one [[designs]] entry is required".into());
        }
        for (k, d) in self.designs.iter().enumerate() {
            let bad = |field: &str, why: &str| err(format!("designs[{k}].{field}: {why}"));
            match d {
                DesignSpec::Sp { gamma1, mu_sp } => {
                    if gamma1.is_empty() || gamma1.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
                        return bad("gamma1", "need a non-empty list of positive values");
                    }
                    if mu_sp.is_some_and(|m| !(m > 0.0 && m.is_finite())) {
                        return bad("mu_sp", "must be positive");
                    }
                }
                DesignSpec::Asp {} => {}
                DesignSpec::Pdp { tau, theta } => {
                    if tau.is_empty() || tau.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                        return bad("tau", "need a non-empty list of positive values");
                    }
                    if theta.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
                        return bad("theta", "must be positive");
                    }
                }
                DesignSpec::Ovdp { beta } => {
                    if beta.is_empty() || beta.iter().any(|b| !(0.0..=2.0).contains(b)) {
                        return bad("beta", "need a non-empty list of values in [0, 2]");
                    }
                }
            }
        }
        self.task_config().map(|_| ()).map_err(|e| ConfigError(format!("[{}]: {e}", self.task)))
    }

    /// Designs in listed order with list parameters expanded.
    pub fn design_choices(&self) -> Vec<DesignChoice> {
        let mut out = Vec::new();
        for d in &self.designs {
            match d {
                DesignSpec::Sp { gamma1, mu_sp } => {
                    out.extend(gamma1.iter().map(|&g| DesignChoice::Sp { gamma1: g, mu_sp: *mu_sp }))
                }
                DesignSpec::Asp {} => out.push(DesignChoice::Asp),
                DesignSpec::Pdp { tau, theta } => out.extend(tau.iter().map(|&t| DesignChoice::Pdp {
                    tau: t,
                    theta: theta.unwrap_or(PDP_DEFAULT_THETA),
                })),
                DesignSpec::Ovdp { beta } => out.extend(beta.iter().map(|&b| DesignChoice::Ovdp { beta: b })),
            }
        }
        out
    }

    /// Problem parameters of the configured task, seeded from `seed`.
    pub fn task_config(&self) -> ppds_core::Result<TaskConfig> {
        let cfg = match self.task {
            Task::Mnr => {
                let s = self.mnr.as_ref().expect("validated");
                let mut c = MnrConfig::with_standard_params(s.dims, s.sigma, s.p_s, self.seed);
                if let Some(l) = s.lambda {
                    c.lambda = l;
                }
                if let Some(e) = s.eta {
                    c.eta = e;
                }
                if let Some(e) = s.epsilon {
                    c.epsilon = e;
                }
                c.stripe_fraction = s.stripe_fraction;
                c.stripe_amplitude = s.stripe_amplitude;
                c.validate()?;
                TaskConfig::Mnr(c)
            }
            Task::Unmix => {
                let s = self.unmix.as_ref().expect("validated");
                let mut c = UnmixConfig::with_standard_params(s.n1, s.n2, s.bands, s.endmembers, s.sigma, self.seed);
                if let Some(a) = s.active {
                    c.active = a;
                }
                if let Some(e) = s.epsilon {
                    c.epsilon = e;
                }
                c.validate()?;
                TaskConfig::Unmix(c)
            }
            Task::Gsr => {
                let s = self.gsr.as_ref().expect("validated");
                let mut c = GsrConfig::with_standard_params(s.vertices, s.k, self.seed);
                if let Some(p) = s.pieces {
                    c.pieces = p;
                }
                if let Some(r) = s.rate {
                    c.rate = r;
                }
                if let Some(sigma) = s.sigma {
                    c.sigma = sigma;
                }
                c.epsilon = s.epsilon.unwrap_or(0.9 * c.sigma * (c.samples() as f64).sqrt());
                c.validate()?;
                TaskConfig::Gsr(c)
            }
        };
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskConfig {
    Mnr(MnrConfig),
    Unmix(UnmixConfig),
    Gsr(GsrConfig),
}
