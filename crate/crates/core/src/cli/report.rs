use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ddp::{DecouplingSolution, GainCheck};
use crate::error::{Error, Result};

/// Outcome of one `solve`, serialized as pretty JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n: usize,
    pub equilibrium: Vec<i8>,
    pub decouplable: bool,
    pub dim_v_star: usize,
    pub iterations: usize,
    pub containment_residual: f64,
    pub invariance_residual: f64,
    pub chain_residual: f64,
    /// Row-major `2 x (4n+4)` gain; zero when not decouplable.
    pub friend: Vec<Vec<f64>>,
    /// Residuals of the four-link block gain readings, when they apply.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block_gain_checks: Vec<GainCheck>,
    /// Seconds spent solving; only recorded on request so that files stay
    /// byte-stable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl Report {
    pub fn new(n: usize, equilibrium: &[i8], sol: &DecouplingSolution) -> Self {
        Report {
            n,
            equilibrium: equilibrium.to_vec(),
            decouplable: sol.decouplable,
            dim_v_star: sol.v_star.dim(),
            iterations: sol.iterations,
            containment_residual: sol.containment_residual,
            invariance_residual: sol.invariance_residual,
            chain_residual: sol.chain_residual,
            friend: rows(&sol.friend),
            block_gain_checks: Vec::new(),
            wall_time_s: None,
        }
    }

    pub fn friend_matrix(&self) -> Result<DMatrix<f64>> {
        let cols = self.friend.first().map_or(0, Vec::len);
        if self.friend.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged friend rows".into()));
        }
        Ok(DMatrix::from_fn(self.friend.len(), cols, |i, j| self.friend[i][j]))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
