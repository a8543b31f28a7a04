//! Experiment configuration: one TOML file with nested blocks for the
//! environment chain, the step kernel, the walk, the SDE integrator, and the
//! regime sweep. The seed is mandatory — there is no wall-clock fallback.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::kernel::{KernelParams, KernelSpec, TrigTerm};
use crate::walk::WalkConfig;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every replica stream derives from it.
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub env: Option<EnvBlock>,
    pub kernel: Option<KernelBlock>,
    pub walk: Option<WalkBlock>,
    #[serde(default)]
    pub sde: SdeBlock,
    pub regimes: Option<RegimesBlock>,
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvBlock {
    /// Row-major transition matrix.
    pub p: Vec<Vec<f64>>,
}

/// How the kernel treats the centering assumption at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenteringMode {
    /// Project the coefficient table so centering holds exactly.
    Project,
    /// Validate the declared table and fail if it is off.
    Check,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub d: usize,
    /// `N x 2d` baseline probabilities, row-major, direction order
    /// `(+e1, -e1, .., +ed, -ed)`.
    pub base: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub amplitude_budget: f64,
    #[serde(default = "default_centering")]
    pub centering: CenteringMode,
    #[serde(default)]
    pub perturbation: Vec<TrigTerm>,
}

fn one() -> f64 {
    1.0
}

fn default_centering() -> CenteringMode {
    CenteringMode::Project
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkBlock {
    pub m: usize,
    pub lambda: f64,
    #[serde(default)]
    pub horizon_steps: usize,
    #[serde(default = "default_sample_times")]
    pub sample_times: Vec<f64>,
    /// Box sizes swept by the `convergence` subcommand.
    #[serde(default = "default_m_list")]
    pub m_list: Vec<usize>,
    #[serde(default = "default_walk_trials")]
    pub trials: usize,
    #[serde(default)]
    pub xi0: usize,
    /// Rescaled time of the covariance check in `convergence`.
    #[serde(default = "one")]
    pub t: f64,
}

fn default_sample_times() -> Vec<f64> {
    vec![1.0]
}

fn default_m_list() -> Vec<usize> {
    vec![20, 40, 80]
}

fn default_walk_trials() -> usize {
    10_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdeBlock {
    pub dt: f64,
    pub t_cap: f64,
    /// Horizon of path-mode simulations.
    pub t_max: f64,
    pub trials: usize,
    /// Absorption threshold; falls back to `walk.lambda`.
    pub lambda: Option<f64>,
    /// Coefficient source: homogenize the configured kernel, or use the
    /// constant covariance of the `regimes` block.
    pub source: Option<SdeSource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdeSource {
    Effective,
    Covariance,
}

impl Default for SdeBlock {
    fn default() -> Self {
        Self { dt: 1e-4, t_cap: 1e3, t_max: 10.0, trials: 10_000, lambda: None, source: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimesBlock {
    pub rho1: f64,
    pub rho2: f64,
    pub s: f64,
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    #[serde(default = "default_regime_trials")]
    pub trials: usize,
}

fn default_grid() -> Vec<f64> {
    vec![1.5, 1.75, 1.875, 1.9375, 1.96875]
}

fn default_regime_trials() -> usize {
    2000
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Load a config file together with the SHA-256 of its bytes.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|e| Error::Config(format!("config is not UTF-8: {e}")))?;
        let cfg = Self::parse(&text)?;
        let hash = hex::encode(Sha256::digest(&bytes));
        Ok((cfg, hash))
    }

    pub fn env_block(&self) -> Result<&EnvBlock> {
        self.env.as_ref().ok_or_else(|| Error::Config("missing [env] block".into()))
    }

    pub fn kernel_block(&self) -> Result<&KernelBlock> {
        self.kernel.as_ref().ok_or_else(|| Error::Config("missing [kernel] block".into()))
    }

    pub fn walk_block(&self) -> Result<&WalkBlock> {
        self.walk.as_ref().ok_or_else(|| Error::Config("missing [walk] block".into()))
    }

    pub fn regimes_block(&self) -> Result<&RegimesBlock> {
        self.regimes.as_ref().ok_or_else(|| Error::Config("missing [regimes] block".into()))
    }

    pub fn build_env(&self) -> Result<EnvSpec> {
        let block = self.env_block()?;
        let n = block.p.len();
        if n == 0 || block.p.iter().any(|row| row.len() != n) {
            return Err(Error::Config("[env] p must be a square matrix".into()));
        }
        let flat: Vec<f64> = block.p.iter().flatten().copied().collect();
        EnvSpec::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn kernel_params(&self) -> Result<KernelParams> {
        let block = self.kernel_block()?;
        let n = block.base.len();
        if n == 0 || block.base.iter().any(|row| row.len() != 2 * block.d) {
            return Err(Error::Config("[kernel] base must be N x 2d".into()));
        }
        let flat: Vec<f64> = block.base.iter().flatten().copied().collect();
        Ok(KernelParams {
            d: block.d,
            base: DMatrix::from_row_slice(n, 2 * block.d, &flat),
            terms: block.perturbation.clone(),
            amplitude_budget: block.amplitude_budget,
        })
    }

    /// Build the kernel against the configured environment, honoring the
    /// centering mode.
    pub fn build_kernel(&self, env: &EnvSpec) -> Result<KernelSpec> {
        let params = self.kernel_params()?;
        match self.kernel_block()?.centering {
            CenteringMode::Project => KernelSpec::build_centered(params, env),
            CenteringMode::Check => KernelSpec::build_checked(params, env),
        }
    }

    pub fn walk_config(&self) -> Result<WalkConfig> {
        let block = self.walk_block()?;
        let d = self.kernel_block()?.d;
        let cfg = WalkConfig {
            m: block.m,
            d,
            lambda: block.lambda,
            horizon_steps: block.horizon_steps,
            sample_times: block.sample_times.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Threshold for SDE hitting runs: `[sde].lambda`, else `[walk].lambda`.
    pub fn sde_lambda(&self) -> Result<f64> {
        if let Some(l) = self.sde.lambda {
            return Ok(l);
        }
        if let Some(walk) = &self.walk {
            return Ok(walk.lambda);
        }
        Err(Error::Config("no lambda: set [sde].lambda or [walk].lambda".into()))
    }

    /// Coefficient source for SDE runs: explicit `[sde].source`, else the
    /// `regimes` covariance when that block exists, else homogenization.
    pub fn sde_source(&self) -> SdeSource {
        self.sde.source.unwrap_or(if self.regimes.is_some() {
            SdeSource::Covariance
        } else {
            SdeSource::Effective
        })
    }
}
