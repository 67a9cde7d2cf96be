use nalgebra::{DMatrix, DVector, Matrix3, Vector2, Vector3};

use super::{e3, embed, hat, mass_blocks, ChainCartParams, EquilibriumConfig};
use crate::error::{Error, Result};

/// Configuration and velocities of the full nonlinear system.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearState {
    pub x: Vector2<f64>,
    pub v: Vector2<f64>,
    /// Unit direction of each link.
    pub q: Vec<Vector3<f64>>,
    /// Angular velocity of each link, orthogonal to its direction.
    pub omega: Vec<Vector3<f64>>,
}

impl NonlinearState {
    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.q.len() != self.omega.len() || self.q.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} directions but {} angular velocities",
                self.q.len(),
                self.omega.len()
            )));
        }
        for (i, (q, w)) in self.q.iter().zip(&self.omega).enumerate() {
            if (q.norm() - 1.0).abs() > tol {
                return Err(Error::Precondition(format!(
                    "|q_{}| = {} is not unit",
                    i + 1,
                    q.norm()
                )));
            }
            if q.dot(w).abs() > tol {
                return Err(Error::Precondition(format!(
                    "q_{} . w_{} = {:e} is not zero",
                    i + 1,
                    i + 1,
                    q.dot(w)
                )));
            }
        }
        Ok(())
    }

    /// Flat layout `[x, v, q_1..q_n, w_1..w_n]`.
    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.n();
        let mut out = DVector::zeros(4 + 6 * n);
        out.fixed_rows_mut::<2>(0).copy_from(&self.x);
        out.fixed_rows_mut::<2>(2).copy_from(&self.v);
        for i in 0..n {
            out.fixed_rows_mut::<3>(4 + 3 * i).copy_from(&self.q[i]);
            out.fixed_rows_mut::<3>(4 + 3 * n + 3 * i).copy_from(&self.omega[i]);
        }
        out
    }

    pub fn from_vector(y: &DVector<f64>) -> Result<Self> {
        if y.len() < 10 || (y.len() - 4) % 6 != 0 {
            return Err(Error::ShapeMismatch(format!(
                "state vector of length {} does not match 4 + 6n",
                y.len()
            )));
        }
        let n = (y.len() - 4) / 6;
        Ok(NonlinearState {
            x: y.fixed_rows::<2>(0).into_owned(),
            v: y.fixed_rows::<2>(2).into_owned(),
            q: (0..n).map(|i| y.fixed_rows::<3>(4 + 3 * i).into_owned()).collect(),
            omega: (0..n)
                .map(|i| y.fixed_rows::<3>(4 + 3 * n + 3 * i).into_owned())
                .collect(),
        })
    }

    /// Rescales each `q_i` to unit length and removes the component of
    /// `w_i` along it.
    pub fn renormalize(&mut self) {
        for (q, w) in self.q.iter_mut().zip(self.omega.iter_mut()) {
            q.normalize_mut();
            *w -= *q * q.dot(w);
        }
    }

    /// Coordinates of the linearized state about `eq`:
    /// `[v | C^T w_i | x | C^T xi_i]` with `xi_i = q_i^0 x q_i`.
    pub fn linear_coordinates(&self, eq: &EquilibriumConfig) -> DVector<f64> {
        let n = self.n();
        let c_t = embed().transpose();
        let mut out = DVector::zeros(4 * n + 4);
        out.fixed_rows_mut::<2>(0).copy_from(&self.v);
        for i in 0..n {
            out.fixed_rows_mut::<2>(2 + 2 * i)
                .copy_from(&(c_t * self.omega[i]));
        }
        out.fixed_rows_mut::<2>(2 * n + 2).copy_from(&self.x);
        for i in 0..n {
            let rest = e3() * eq.sign(i);
            out.fixed_rows_mut::<2>(2 * n + 4 + 2 * i)
                .copy_from(&(c_t * rest.cross(&self.q[i])));
        }
        out
    }

    /// Inverse of [`linear_coordinates`](Self::linear_coordinates) for
    /// small tilts: each link is rotated from `s_i e3` by the axis-angle
    /// vector `xi_i`.
    pub fn from_linear_coordinates(eq: &EquilibriumConfig, xlin: &DVector<f64>) -> Result<Self> {
        let n = eq.n();
        if xlin.len() != 4 * n + 4 {
            return Err(Error::ShapeMismatch(format!(
                "linear state of length {} for {} links",
                xlin.len(),
                n
            )));
        }
        let c = embed();
        let mut st = NonlinearState {
            x: xlin.fixed_rows::<2>(2 * n + 2).into_owned(),
            v: xlin.fixed_rows::<2>(0).into_owned(),
            q: Vec::with_capacity(n),
            omega: Vec::with_capacity(n),
        };
        for i in 0..n {
            let xi = c * xlin.fixed_rows::<2>(2 * n + 4 + 2 * i).into_owned();
            let rot = nalgebra::Rotation3::new(xi);
            st.q.push(rot * (e3() * eq.sign(i)));
            st.omega.push(c * xlin.fixed_rows::<2>(2 + 2 * i).into_owned());
        }
        st.renormalize();
        Ok(st)
    }
}

/// Cart acceleration and link angular accelerations.
#[derive(Debug, Clone, PartialEq)]
pub struct Accelerations {
    pub cart: Vector2<f64>,
    pub omega_dot: Vec<Vector3<f64>>,
}

/// Mass matrix over `[x'', w_1', .., w_n']`, symmetric positive definite.
fn assembled_mass(p: &ChainCartParams, st: &NonlinearState) -> DMatrix<f64> {
    let n = p.n();
    let blocks = mass_blocks(p);
    let c = embed();
    let hats: Vec<Matrix3<f64>> = st.q.iter().map(hat).collect();
    let dim = 2 + 3 * n;
    let mut m = DMatrix::zeros(dim, dim);
    m.fixed_view_mut::<2, 2>(0, 0)
        .fill_diagonal(blocks.m00);
    for i in 0..n {
        let r = 2 + 3 * i;
        let coupling = -(c.transpose() * hats[i]) * blocks.m0[i];
        m.fixed_view_mut::<2, 3>(0, r).copy_from(&coupling);
        m.fixed_view_mut::<3, 2>(r, 0).copy_from(&coupling.transpose());
        for j in 0..n {
            let cc = 2 + 3 * j;
            let blk = if i == j {
                Matrix3::identity() * blocks.mij[(i, i)]
            } else {
                -(hats[i] * hats[j]) * blocks.mij[(i, j)]
            };
            m.fixed_view_mut::<3, 3>(r, cc).copy_from(&blk);
        }
    }
    m
}

/// Solves the Euler-Lagrange equations for the accelerations.
///
/// `u` is a planar torque on the first link (the linear model's input
/// channel) and `w` a planar force on the cart.
pub fn nonlinear_accelerations(
    p: &ChainCartParams,
    st: &NonlinearState,
    u: &Vector2<f64>,
    w: &Vector2<f64>,
) -> Result<Accelerations> {
    let n = p.n();
    if st.n() != n {
        return Err(Error::ShapeMismatch(format!(
            "state has {} links, parameters have {}",
            st.n(),
            n
        )));
    }
    let blocks = mass_blocks(p);
    let c = embed();
    let hats: Vec<Matrix3<f64>> = st.q.iter().map(hat).collect();
    let spin: Vec<f64> = st.omega.iter().map(|w| w.norm_squared()).collect();

    let mut rhs = DVector::zeros(2 + 3 * n);
    let mut cart = w.clone_owned();
    for j in 0..n {
        cart += c.transpose() * st.q[j] * (blocks.m0[j] * spin[j]);
    }
    rhs.fixed_rows_mut::<2>(0).copy_from(&cart);
    for i in 0..n {
        let mut row = hats[i] * e3() * (p.outboard_mass(i) * p.g * p.lengths[i]);
        for j in (0..n).filter(|&j| j != i) {
            row += hats[i] * st.q[j] * (blocks.mij[(i, j)] * spin[j]);
        }
        if i == 0 {
            let torque = c * u;
            let q = st.q[0];
            row += torque - q * (q.dot(&torque) / q.norm_squared());
        }
        rhs.fixed_rows_mut::<3>(2 + 3 * i).copy_from(&row);
    }

    let chol = assembled_mass(p, st)
        .cholesky()
        .ok_or_else(|| Error::Precondition("singular mass matrix for this state".into()))?;
    let sol = chol.solve(&rhs);
    Ok(Accelerations {
        cart: sol.fixed_rows::<2>(0).into_owned(),
        omega_dot: (0..n)
            .map(|i| sol.fixed_rows::<3>(2 + 3 * i).into_owned())
            .collect(),
    })
}

/// Time derivative of the flat state `[x, v, q, w]`.
pub fn state_derivative(
    p: &ChainCartParams,
    st: &NonlinearState,
    u: &Vector2<f64>,
    w: &Vector2<f64>,
) -> Result<DVector<f64>> {
    let acc = nonlinear_accelerations(p, st, u, w)?;
    let n = st.n();
    let mut d = DVector::zeros(4 + 6 * n);
    d.fixed_rows_mut::<2>(0).copy_from(&st.v);
    d.fixed_rows_mut::<2>(2).copy_from(&acc.cart);
    for i in 0..n {
        d.fixed_rows_mut::<3>(4 + 3 * i)
            .copy_from(&st.omega[i].cross(&st.q[i]));
        d.fixed_rows_mut::<3>(4 + 3 * n + 3 * i)
            .copy_from(&acc.omega_dot[i]);
    }
    Ok(d)
}

pub fn kinetic_energy(p: &ChainCartParams, st: &NonlinearState) -> f64 {
    let n = p.n();
    let mut gen = DVector::zeros(2 + 3 * n);
    gen.fixed_rows_mut::<2>(0).copy_from(&st.v);
    for i in 0..n {
        gen.fixed_rows_mut::<3>(2 + 3 * i).copy_from(&st.omega[i]);
    }
    0.5 * gen.dot(&(assembled_mass(p, st) * &gen))
}

/// Gravity potential, minimal when every link hangs along `e3`.
pub fn potential_energy(p: &ChainCartParams, st: &NonlinearState) -> f64 {
    -(0..p.n())
        .map(|i| p.outboard_mass(i) * p.g * p.lengths[i] * st.q[i].dot(&e3()))
        .sum::<f64>()
}

pub fn energy(p: &ChainCartParams, st: &NonlinearState) -> f64 {
    kinetic_energy(p, st) + potential_energy(p, st)
}
