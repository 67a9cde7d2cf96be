use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ddp::{DdpOptions, RankTolSetting, DEFAULT_VERIFY_TOL};
use crate::error::{Error, Result};
use crate::model::{ChainCartParams, EquilibriumConfig};
use crate::sim::{DisturbanceSignal, DEFAULT_DT, DEFAULT_T_END};

/// Everything one run needs, read from a TOML document:
///
/// ```toml
/// t_end = 20.0
/// dt = 0.001
/// tol = 1e-8
/// seed = 7
///
/// [params]
/// m_cart = 4.0
/// masses = [6.0, 4.0, 3.0, 2.0]
/// lengths = [5.0, 4.0, 2.0, 2.0]
///
/// [equilibrium]
/// s = [1, 1, 1, 1]
///
/// [signal]
/// kind = "step"
/// amplitude = [1.0, 0.0]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ChainCartParams,
    pub equilibrium: EquilibriumSection,
    #[serde(default)]
    pub signal: DisturbanceSignal,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Verification tolerance for containment, invariance and chain checks.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Relative rank cut; the solver default when absent.
    #[serde(default)]
    pub rank_tol: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumSection {
    pub s: EquilibriumConfig,
}

fn default_t_end() -> f64 {
    DEFAULT_T_END
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_tol() -> f64 {
    DEFAULT_VERIFY_TOL
}

impl RunConfig {
    pub fn new(params: ChainCartParams, equilibrium: EquilibriumConfig) -> Self {
        RunConfig {
            params,
            equilibrium: EquilibriumSection { s: equilibrium },
            signal: DisturbanceSignal::default(),
            t_end: DEFAULT_T_END,
            dt: DEFAULT_DT,
            tol: DEFAULT_VERIFY_TOL,
            rank_tol: None,
            seed: 0,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn equilibrium(&self) -> &EquilibriumConfig {
        &self.equilibrium.s
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        self.params.validate().map_err(cfg)?;
        self.equilibrium().check_matches(&self.params).map_err(cfg)?;
        self.signal.validate().map_err(cfg)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("nonpositive dt: {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::Config(format!(
                "t_end must be at least dt: t_end = {}, dt = {}",
                self.t_end, self.dt
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("nonpositive tol: {}", self.tol)));
        }
        if let Some(r) = self.rank_tol {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Config(format!("rank_tol must lie in (0, 1): {r}")));
            }
        }
        Ok(())
    }

    pub fn ddp_options(&self) -> DdpOptions {
        DdpOptions {
            rank_tol: self
                .rank_tol
                .map(RankTolSetting::Rel)
                .unwrap_or_default(),
            verify_tol: self.tol,
        }
    }
}
