use std::ops::Range;

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use super::{build_gqq, build_l1, planar_turn, ChainCartParams, EquilibriumConfig};
use crate::error::{Error, Result};

/// `x' = A x + B u + E w`, `y = H x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, e: DMatrix<f64>, h: DMatrix<f64>) -> Result<Self> {
        let sys = StateSpace { a, b, e, h };
        sys.check_shapes()?;
        Ok(sys)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn check_shapes(&self) -> Result<()> {
        let n = self.a.nrows();
        let bad = |what: &str| Err(Error::ShapeMismatch(what.to_string()));
        if self.a.ncols() != n || n == 0 {
            return bad("A must be square and nonempty");
        }
        if self.b.nrows() != n {
            return bad("B must have as many rows as A");
        }
        if self.e.nrows() != n {
            return bad("E must have as many rows as A");
        }
        if self.h.ncols() != n {
            return bad("H must have as many columns as A has rows");
        }
        Ok(())
    }

    /// Checks that `f` is an `inputs x states` feedback matrix.
    pub fn check_feedback(&self, f: &DMatrix<f64>) -> Result<()> {
        if f.shape() != (self.b.ncols(), self.dim()) {
            return Err(Error::ShapeMismatch(format!(
                "feedback is {}x{}, expected {}x{}",
                f.nrows(),
                f.ncols(),
                self.b.ncols(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn closed_loop(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a + &self.b * f
    }
}

/// Index map of the linearized state
/// `[dv | C^T dw_1 .. C^T dw_n | dx | C^T xi_1 .. C^T xi_n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StateLayout {
    pub n: usize,
}

impl StateLayout {
    pub fn dim(&self) -> usize {
        4 * self.n + 4
    }

    pub fn cart_velocity(&self) -> Range<usize> {
        0..2
    }

    /// Angular velocity of 1-based link `i`.
    pub fn link_rate(&self, i: usize) -> Range<usize> {
        assert!(i >= 1 && i <= self.n);
        2 * i..2 * i + 2
    }

    pub fn cart_position(&self) -> Range<usize> {
        2 * self.n + 2..2 * self.n + 4
    }

    /// Tilt of 1-based link `i`.
    pub fn link_tilt(&self, i: usize) -> Range<usize> {
        assert!(i >= 1 && i <= self.n);
        2 * self.n + 2 + 2 * i..2 * self.n + 4 + 2 * i
    }

    /// One `(block, component)` label per state index.
    pub fn labels(&self) -> Vec<(String, usize)> {
        let mut out = Vec::with_capacity(self.dim());
        let mut push = |name: String| {
            out.push((name.clone(), 0));
            out.push((name, 1));
        };
        push("dv".into());
        for i in 1..=self.n {
            push(format!("CT_domega_{i}"));
        }
        push("dx".into());
        for i in 1..=self.n {
            push(format!("CT_xi_{i}"));
        }
        out
    }

    /// `block.x` / `block.y` per state index, for headers.
    pub fn column_names(&self) -> Vec<String> {
        self.labels()
            .into_iter()
            .map(|(block, k)| format!("{block}.{}", if k == 0 { "x" } else { "y" }))
            .collect()
    }
}

/// Linearized chain-cart model about one equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub sys: StateSpace,
    pub n: usize,
    pub layout: StateLayout,
    pub equilibrium: EquilibriumConfig,
}

impl std::ops::Deref for LinearModel {
    type Target = StateSpace;

    fn deref(&self) -> &StateSpace {
        &self.sys
    }
}

impl LinearModel {
    /// The two nonzero coefficients of the last link's rate equation,
    /// on `C^T xi_{n-1}` and on `C^T xi_n` (read from the x component).
    pub fn last_link_tilt_coupling(&self) -> Option<(f64, f64)> {
        if self.n < 2 {
            return None;
        }
        let row = self.layout.link_rate(self.n).start;
        let prev = self.layout.link_tilt(self.n - 1).start;
        let last = self.layout.link_tilt(self.n).start;
        Some((self.a[(row, prev)], self.a[(row, last)]))
    }
}

/// Congruence factorization `L1 = P^T D P` of the linearized mass matrix.
///
/// `P` maps generalized velocities `(dv, C^T dw_1..)` to the planar
/// velocities of the cart and of each point mass, so it is block lower
/// triangular with an explicit block-bidiagonal inverse, and `D` holds the
/// point masses. Solves therefore touch only neighbouring blocks and keep
/// the chain's sparsity exact.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFactor {
    /// Cart mass followed by link masses.
    masses: Vec<f64>,
    /// `s_i l_i` per link.
    arms: Vec<f64>,
}

impl MassFactor {
    pub fn new(p: &ChainCartParams, eq: &EquilibriumConfig) -> Result<Self> {
        p.validate()?;
        eq.check_matches(p)?;
        let mut masses = vec![p.m_cart];
        masses.extend_from_slice(&p.masses);
        let arms: Vec<f64> = (0..p.n()).map(|i| eq.sign(i) * p.lengths[i]).collect();
        if masses.iter().any(|m| !(*m > 0.0)) || arms.iter().any(|a| *a == 0.0 || !a.is_finite()) {
            return Err(Error::MassMatrixSingular);
        }
        Ok(MassFactor { masses, arms })
    }

    fn n(&self) -> usize {
        self.arms.len()
    }

    /// `L1^{-1} rhs`, column by column.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n();
        assert_eq!(rhs.nrows(), 2 * n + 2);
        let turn = planar_turn();
        let block = |m: &DMatrix<f64>, k: usize, c: usize| {
            nalgebra::Vector2::new(m[(2 * k, c)], m[(2 * k + 1, c)])
        };
        let mut out = DMatrix::zeros(rhs.nrows(), rhs.ncols());
        for c in 0..rhs.ncols() {
            // P^T t = rhs: partial sums S_k = sum_{a >= k} t_a.
            let mut partial = vec![nalgebra::Vector2::zeros(); n + 2];
            partial[0] = block(rhs, 0, c);
            for i in 1..=n {
                partial[i] = -(turn * block(rhs, i, c)) / self.arms[i - 1];
            }
            // r = D^{-1} t.
            let r: Vec<_> = (0..=n)
                .map(|a| (partial[a] - partial[a + 1]) / self.masses[a])
                .collect();
            // P y = r.
            let set = |out: &mut DMatrix<f64>, k: usize, v: nalgebra::Vector2<f64>| {
                out[(2 * k, c)] = v.x;
                out[(2 * k + 1, c)] = v.y;
            };
            set(&mut out, 0, r[0]);
            for a in 1..=n {
                set(&mut out, a, turn * (r[a] - r[a - 1]) / self.arms[a - 1]);
            }
        }
        out
    }
}

/// Linearized `(A, B, E, H)` about the equilibrium selected by `eq`.
///
/// The disturbance acts on the cart, the input on the first link's rate
/// equation and the output is `C^T dw_n`. Kinematic rows read `z' = p`.
pub fn linearize(p: &ChainCartParams, eq: &EquilibriumConfig) -> Result<LinearModel> {
    let l1 = build_l1(p, eq)?;
    if l1.clone().cholesky().is_none() {
        return Err(Error::MassMatrixSingular);
    }
    let factor = MassFactor::new(p, eq)?;
    let n = p.n();
    let half = 2 * n + 2;
    let dim = 2 * half;

    let mut stiffness = DMatrix::zeros(half, half);
    stiffness
        .view_mut((2, 2), (2 * n, 2 * n))
        .copy_from(&build_gqq(p, eq)?);

    let mut a = DMatrix::zeros(dim, dim);
    a.view_mut((0, half), (half, half))
        .copy_from(&(-factor.solve(&stiffness)));
    a.view_mut((half, 0), (half, half))
        .fill_with_identity();

    let mut cart_force = DMatrix::zeros(half, 2);
    cart_force.fixed_view_mut::<2, 2>(0, 0).copy_from(&Matrix2::identity());
    let mut link_torque = DMatrix::zeros(half, 2);
    link_torque.fixed_view_mut::<2, 2>(2, 0).copy_from(&Matrix2::identity());

    let mut b = DMatrix::zeros(dim, 2);
    b.view_mut((0, 0), (half, 2)).copy_from(&factor.solve(&link_torque));
    let mut e = DMatrix::zeros(dim, 2);
    e.view_mut((0, 0), (half, 2)).copy_from(&factor.solve(&cart_force));

    let layout = StateLayout { n };
    let mut h = DMatrix::zeros(2, dim);
    let out = layout.link_rate(n).start;
    h[(0, out)] = 1.0;
    h[(1, out + 1)] = 1.0;

    Ok(LinearModel {
        sys: StateSpace { a, b, e, h },
        n,
        layout,
        equilibrium: eq.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax() / b.amax().max(1e-300)
    }

    #[test]
    fn factor_solve_agrees_with_cholesky() {
        let p = ChainCartParams::four_link_example();
        for eq in [
            EquilibriumConfig::hanging(4),
            EquilibriumConfig::inverted(4),
            EquilibriumConfig::alternating(4),
        ] {
            let l1 = build_l1(&p, &eq).unwrap();
            let rhs = DMatrix::from_fn(10, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
            let structured = MassFactor::new(&p, &eq).unwrap().solve(&rhs);
            let dense = l1.clone().cholesky().unwrap().solve(&rhs);
            assert!(rel_err(&structured, &dense) < 1e-12);
            assert!(rel_err(&(&l1 * &structured), &rhs) < 1e-12);
        }
    }

    #[test]
    fn shapes_for_four_links() {
        let m = linearize(&ChainCartParams::four_link_example(), &EquilibriumConfig::hanging(4))
            .unwrap();
        assert_eq!(m.a.shape(), (20, 20));
        assert_eq!(m.b.shape(), (20, 2));
        assert_eq!(m.e.shape(), (20, 2));
        assert_eq!(m.h.shape(), (2, 20));
        assert_eq!(m.layout.link_rate(4), 8..10);
        assert_eq!(m.layout.link_tilt(4), 18..20);
        assert_eq!(m.layout.labels().len(), 20);
    }

    #[test]
    fn output_annihilates_disturbance_for_two_or_more_links() {
        for n in 2..=6 {
            let m = linearize(&ChainCartParams::unit(n), &EquilibriumConfig::alternating(n)).unwrap();
            assert_eq!(&m.h * &m.e, DMatrix::zeros(2, 2));
        }
        // A single link's rate is driven by the cart force directly.
        let m = linearize(&ChainCartParams::unit(1), &EquilibriumConfig::hanging(1)).unwrap();
        assert!((&m.h * &m.e).amax() > 0.1);
    }

    #[test]
    fn disturbance_blocks_closed_form() {
        let p = ChainCartParams::four_link_example();
        let m = linearize(&p, &EquilibriumConfig::hanging(4)).unwrap();
        let e0 = m.e.fixed_view::<2, 2>(0, 0).into_owned();
        let e1 = m.e.fixed_view::<2, 2>(2, 0).into_owned();
        assert!((e0 - Matrix2::identity() / 4.0).amax() < 1e-15);
        assert!((e1 + planar_turn() / 20.0).amax() < 1e-15);
    }

    #[test]
    fn last_link_coupling_closed_form() {
        // (m_{n-1} + m_n) g / (m_{n-1} l_n), with opposite sign on xi_n.
        let p = ChainCartParams::four_link_example();
        let m = linearize(&p, &EquilibriumConfig::hanging(4)).unwrap();
        let (prev, last) = m.last_link_tilt_coupling().unwrap();
        let c = (3.0 + 2.0) * 9.81 / (3.0 * 2.0);
        assert!((prev - c).abs() < 1e-12 * c);
        assert!((last + c).abs() < 1e-12 * c);
    }

    #[test]
    fn hanging_is_marginally_stable() {
        let m = linearize(&ChainCartParams::four_link_example(), &EquilibriumConfig::hanging(4))
            .unwrap();
        let eig = m.a.complex_eigenvalues();
        let scale = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for z in eig.iter() {
            assert!(z.re.abs() < 1e-8 * scale, "{z}");
        }
        let inverted =
            linearize(&ChainCartParams::four_link_example(), &EquilibriumConfig::inverted(4))
                .unwrap();
        assert!(inverted.a.complex_eigenvalues().iter().any(|z| z.re > 1e-3));
    }
}
