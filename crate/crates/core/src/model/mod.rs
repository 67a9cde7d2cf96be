//! The n-link chain pendulum on a planar cart.
//!
//! Frame conventions: `e3` points along gravity, the cart moves in the
//! `e1`/`e2` plane and `C = [e1 | e2]` embeds planar vectors into `R^3`.
//! Link `i` has direction `q_i` on the unit sphere; an equilibrium has
//! `q_i = s_i e3` with `s_i = +1` for a link hanging along gravity.

mod linear;
mod nonlinear;

pub use linear::{linearize, LinearModel, MassFactor, StateLayout, StateSpace};
pub use nonlinear::{
    energy, kinetic_energy, nonlinear_accelerations, potential_energy, state_derivative,
    Accelerations, NonlinearState,
};

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix3x2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GRAVITY: f64 = 9.81;

pub fn e3() -> Vector3<f64> {
    Vector3::z()
}

/// `C = [e1 | e2]`.
pub fn embed() -> Matrix3x2<f64> {
    Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

/// `C^T hat(e3) C`, the planar quarter turn `[[0, -1], [1, 0]]`.
pub fn planar_turn() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// Cross-product matrix: `hat(x) * y == x.cross(&y)`.
pub fn hat(x: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -x.z, x.y, x.z, 0.0, -x.x, -x.y, x.x, 0.0)
}

/// Physical parameters of the cart and its links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCartParams {
    pub m_cart: f64,
    pub masses: Vec<f64>,
    pub lengths: Vec<f64>,
    #[serde(default = "default_gravity")]
    pub g: f64,
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

impl ChainCartParams {
    pub fn new(m_cart: f64, masses: Vec<f64>, lengths: Vec<f64>) -> Result<Self> {
        let p = ChainCartParams {
            m_cart,
            masses,
            lengths,
            g: DEFAULT_GRAVITY,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit cart mass, unit link masses and unit lengths.
    pub fn unit(n: usize) -> Self {
        ChainCartParams {
            m_cart: 1.0,
            masses: vec![1.0; n],
            lengths: vec![1.0; n],
            g: DEFAULT_GRAVITY,
        }
    }

    /// The four-link cart used as the worked example throughout the repo.
    pub fn four_link_example() -> Self {
        ChainCartParams {
            m_cart: 4.0,
            masses: vec![6.0, 4.0, 3.0, 2.0],
            lengths: vec![5.0, 4.0, 2.0, 2.0],
            g: DEFAULT_GRAVITY,
        }
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.masses.len();
        if n == 0 {
            return Err(Error::InvalidParams("at least one link is required".into()));
        }
        if self.lengths.len() != n {
            return Err(Error::InvalidParams(format!(
                "length mismatch: {} masses but {} lengths",
                n,
                self.lengths.len()
            )));
        }
        if !(self.m_cart.is_finite() && self.m_cart > 0.0) {
            return Err(Error::InvalidParams(format!(
                "nonpositive mass: m_cart = {}",
                self.m_cart
            )));
        }
        if let Some((i, m)) = self
            .masses
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.is_finite() && **m > 0.0))
        {
            return Err(Error::InvalidParams(format!(
                "nonpositive mass: masses[{i}] = {m}"
            )));
        }
        if let Some((i, l)) = self
            .lengths
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.is_finite() && **l > 0.0))
        {
            return Err(Error::InvalidParams(format!(
                "nonpositive length: lengths[{i}] = {l}"
            )));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::InvalidParams(format!("nonpositive gravity: g = {}", self.g)));
        }
        Ok(())
    }

    /// `sum_{a >= i} m_a` for 0-based link `i`.
    pub fn outboard_mass(&self, i: usize) -> f64 {
        self.masses[i..].iter().sum()
    }

    /// First `n` links of a longer parameter set.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::InvalidParams(format!(
                "cannot take {n} links from a {}-link parameter set",
                self.n()
            )));
        }
        Ok(ChainCartParams {
            m_cart: self.m_cart,
            masses: self.masses[..n].to_vec(),
            lengths: self.lengths[..n].to_vec(),
            g: self.g,
        })
    }
}

/// Sign tuple selecting an equilibrium: `q_i = s_i e3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct EquilibriumConfig {
    signs: Vec<i8>,
}

impl TryFrom<Vec<i64>> for EquilibriumConfig {
    type Error = Error;

    fn try_from(s: Vec<i64>) -> Result<Self> {
        EquilibriumConfig::new(s)
    }
}

impl From<EquilibriumConfig> for Vec<i64> {
    fn from(eq: EquilibriumConfig) -> Self {
        eq.signs.iter().map(|&s| s as i64).collect()
    }
}

impl EquilibriumConfig {
    pub fn new(signs: Vec<i64>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::InvalidParams("empty sign tuple".into()));
        }
        if let Some((i, s)) = signs.iter().enumerate().find(|(_, s)| s.abs() != 1) {
            return Err(Error::InvalidParams(format!(
                "invalid sign entry: s[{i}] = {s}, expected +1 or -1"
            )));
        }
        Ok(EquilibriumConfig {
            signs: signs.into_iter().map(|s| s as i8).collect(),
        })
    }

    /// All links along gravity.
    pub fn hanging(n: usize) -> Self {
        EquilibriumConfig { signs: vec![1; n] }
    }

    /// All links against gravity.
    pub fn inverted(n: usize) -> Self {
        EquilibriumConfig { signs: vec![-1; n] }
    }

    /// `(+1, -1, +1, ...)`.
    pub fn alternating(n: usize) -> Self {
        EquilibriumConfig {
            signs: (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.signs.len()
    }

    pub fn sign(&self, i: usize) -> f64 {
        self.signs[i] as f64
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn check_matches(&self, p: &ChainCartParams) -> Result<()> {
        if self.n() != p.n() {
            return Err(Error::InvalidParams(format!(
                "length mismatch: {} signs for {} links",
                self.n(),
                p.n()
            )));
        }
        Ok(())
    }

    /// Space-separated `+1`/`-1` rendering.
    pub fn describe(&self) -> String {
        self.signs
            .iter()
            .map(|&s| if s > 0 { "+1" } else { "-1" })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Scalar coefficients of the Euler-Lagrange mass blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MassBlocks {
    /// `m + sum m_i`.
    pub m00: f64,
    /// `(sum_{a >= i} m_a) l_i`; the block `M_0i` is this times `C^T`.
    pub m0: Vec<f64>,
    /// `(sum_{a >= max(i,j)} m_a) l_i l_j`.
    pub mij: DMatrix<f64>,
}

pub fn mass_blocks(p: &ChainCartParams) -> MassBlocks {
    let n = p.n();
    let m00 = p.m_cart + p.masses.iter().sum::<f64>();
    let m0 = (0..n).map(|i| p.outboard_mass(i) * p.lengths[i]).collect();
    let mij = DMatrix::from_fn(n, n, |i, j| {
        p.outboard_mass(i.max(j)) * p.lengths[i] * p.lengths[j]
    });
    MassBlocks { m00, m0, mij }
}

/// Linearized mass matrix `L1` over `[dv; C^T dw_1; ...; C^T dw_n]`.
pub fn build_l1(p: &ChainCartParams, eq: &EquilibriumConfig) -> Result<DMatrix<f64>> {
    p.validate()?;
    eq.check_matches(p)?;
    let n = p.n();
    let blocks = mass_blocks(p);
    let turn = planar_turn();
    let mut l1 = DMatrix::zeros(2 * n + 2, 2 * n + 2);
    l1.fixed_view_mut::<2, 2>(0, 0)
        .copy_from(&(Matrix2::identity() * blocks.m00));
    for i in 0..n {
        let xq = turn * (-eq.sign(i) * blocks.m0[i]);
        let c = 2 + 2 * i;
        l1.fixed_view_mut::<2, 2>(0, c).copy_from(&xq);
        l1.fixed_view_mut::<2, 2>(c, 0).copy_from(&xq.transpose());
        for j in 0..n {
            let s_ij = if i == j { 1.0 } else { eq.sign(i) * eq.sign(j) };
            l1.fixed_view_mut::<2, 2>(c, 2 + 2 * j)
                .copy_from(&(Matrix2::identity() * (s_ij * blocks.mij[(i, j)])));
        }
    }
    Ok(l1)
}

/// Gravity stiffness `G_qq = diag(s_i (sum_{a >= i} m_a) g l_i I2)`.
pub fn build_gqq(p: &ChainCartParams, eq: &EquilibriumConfig) -> Result<DMatrix<f64>> {
    p.validate()?;
    eq.check_matches(p)?;
    let n = p.n();
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let k = eq.sign(i) * p.outboard_mass(i) * p.g * p.lengths[i];
        g[(2 * i, 2 * i)] = k;
        g[(2 * i + 1, 2 * i + 1)] = k;
    }
    Ok(g)
}

/// Rest state at the equilibrium: `x = v = 0`, `w_i = 0`, `q_i = s_i e3`.
pub fn equilibrium_state(p: &ChainCartParams, eq: &EquilibriumConfig) -> Result<NonlinearState> {
    eq.check_matches(p)?;
    let n = p.n();
    Ok(NonlinearState {
        x: nalgebra::Vector2::zeros(),
        v: nalgebra::Vector2::zeros(),
        q: (0..n).map(|i| e3() * eq.sign(i)).collect(),
        omega: vec![Vector3::zeros(); n],
    })
}
