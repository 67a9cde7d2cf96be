//! Disturbance decoupling by state feedback.
//!
//! The maximal controlled invariant subspace inside `ker H` is computed
//! with the classical fixed-point iteration
//! `V_0 = ker H`, `V_{k+1} = V_k ∩ A^{-1}(V_k + Im B)`. The disturbance can
//! be decoupled from the output iff `Im E ⊂ V*`; a friend `F` with
//! `(A + BF) V* ⊂ V*` then does it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, two_norm};
use crate::model::{LinearModel, StateSpace};
use crate::subspaces::{self, Subspace, Tol};

/// Relative bound used for the containment, invariance and chain checks.
pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;

/// Relative rank cut used by [`solve_ddp`] unless overridden. Iterates carry
/// rounding well above machine epsilon, so the iteration cuts coarser than
/// the per-matrix default.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdpOptions {
    pub rank_tol: RankTolSetting,
    pub verify_tol: f64,
}

/// Serializable mirror of [`Tol`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankTolSetting {
    Auto,
    Rel(f64),
    Abs(f64),
}

impl Default for RankTolSetting {
    fn default() -> Self {
        RankTolSetting::Rel(DEFAULT_RANK_TOL)
    }
}

impl From<RankTolSetting> for Tol {
    fn from(s: RankTolSetting) -> Tol {
        match s {
            RankTolSetting::Auto => Tol::Auto,
            RankTolSetting::Rel(r) => Tol::Rel(r),
            RankTolSetting::Abs(t) => Tol::Abs(t),
        }
    }
}

impl Default for DdpOptions {
    fn default() -> Self {
        DdpOptions {
            rank_tol: RankTolSetting::default(),
            verify_tol: DEFAULT_VERIFY_TOL,
        }
    }
}

/// Outcome of the invariant subspace iteration.
#[derive(Debug, Clone)]
pub struct InvariantSubspace {
    pub subspace: Subspace,
    /// Number of updates applied until the dimension stopped changing.
    pub iterations: usize,
    /// `dim V_k` for every iterate, starting with `V_0`.
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DecouplingSolution {
    pub v_star: Subspace,
    /// `u = F x`; zero when the problem is not decouplable.
    pub friend: DMatrix<f64>,
    pub decouplable: bool,
    /// Residual of `Im E ⊂ V*`.
    pub containment_residual: f64,
    /// `max_j dist((A+BF) v_j, V*) / ||A||` over the basis of `V*`.
    pub invariance_residual: f64,
    pub chain_residual: f64,
    pub iterations: usize,
}


/// One update `V ∩ A^{-1}(V + Im B)`.
pub fn isa_step(a: &DMatrix<f64>, im_b: &Subspace, v: &Subspace, tol: Tol) -> Result<Subspace> {
    let widened = subspaces::sum(v, im_b, tol)?;
    let pre = subspaces::preimage(a, &widened, tol)?;
    subspaces::intersect(v, &pre, tol)
}

fn image_or_zero(m: &DMatrix<f64>, tol: Tol) -> Result<Subspace> {
    if m.ncols() == 0 {
        return Ok(Subspace::zero(m.nrows()));
    }
    subspaces::image(m, tol)
}

/// Largest `(A, B)`-controlled invariant subspace contained in `ker_h`.
pub fn maximal_controlled_invariant(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    ker_h: &Subspace,
    tol: Tol,
) -> Result<InvariantSubspace> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || ker_h.ambient_dim() != n {
        return Err(Error::ShapeMismatch(format!(
            "A is {}x{}, B is {}x{}, ker H lives in R^{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            ker_h.ambient_dim()
        )));
    }
    let im_b = image_or_zero(b, tol)?;
    let mut current = ker_h.clone();
    let mut dims = vec![current.dim()];
    let mut iterations = 0;
    // The dimension drops at least once per non-final update.
    for _ in 0..=n {
        let next = isa_step(a, &im_b, &current, tol)?;
        iterations += 1;
        dims.push(next.dim());
        let settled = next.dim() == current.dim();
        current = next;
        if settled || current.is_zero() {
            break;
        }
    }
    Ok(InvariantSubspace {
        subspace: current,
        iterations,
        dims,
    })
}

/// `max_v dist(Av, V + Im B) / ||A||` over the orthonormal basis of `V`.
pub fn check_controlled_invariance(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v: &Subspace,
    tol: Tol,
) -> Result<f64> {
    let a_norm = two_norm(a);
    if v.is_zero() || a_norm == 0.0 {
        return Ok(0.0);
    }
    let widened = subspaces::sum(v, &image_or_zero(b, tol)?, tol)?;
    let images = a * v.basis();
    let worst = images
        .column_iter()
        .map(|col| widened.distance(&col.into_owned()))
        .fold(0.0, f64::max);
    Ok(worst / a_norm)
}

/// `max_j dist((A+BF) v_j, V) / ||A||`.
pub fn invariance_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    f: &DMatrix<f64>,
    v: &Subspace,
) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let closed = a + b * f;
    let scale = two_norm(a).max(f64::MIN_POSITIVE);
    subspaces::containment_residual(v, &(closed * v.basis())) / scale
}

/// Friend of `v`: least-squares `[V | B] (a_j; w_j) = A v_j`, `F = -W V^T`.
pub fn compute_friend(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v: &Subspace,
    verify_tol: f64,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let m = b.ncols();
    if v.is_zero() || m == 0 {
        let f = DMatrix::zeros(m, n);
        let residual = invariance_residual(a, b, &f, v);
        if residual > verify_tol {
            return Err(Error::NotControlledInvariant {
                residual,
                bound: verify_tol,
            });
        }
        return Ok(f);
    }
    let r = v.dim();
    let mut stacked = DMatrix::zeros(n, r + m);
    stacked.columns_mut(0, r).copy_from(v.basis());
    stacked.columns_mut(r, m).copy_from(b);
    let target = a * v.basis();
    // Minimum-norm least squares through the pseudo-inverse.
    let svd = linalg::svd(&stacked)?;
    let cutoff = (n.max(r + m) as f64) * f64::EPSILON * svd.s.max();
    let k = svd.s.iter().take_while(|&&x| x > cutoff).count();
    let u_k = svd.u.columns(0, k);
    let inv_s = DMatrix::from_diagonal(&svd.s.rows(0, k).map(|x| 1.0 / x));
    let coeffs = svd.v.columns(0, k) * inv_s * (u_k.transpose() * &target);
    let w = coeffs.rows(r, m).into_owned();
    let f = -(w * v.basis().transpose());
    let residual = invariance_residual(a, b, &f, v);
    if residual > verify_tol {
        return Err(Error::NotControlledInvariant {
            residual,
            bound: verify_tol,
        });
    }
    Ok(f)
}

/// Scale-free form of `H [E, (A+BF)E, ..., (A+BF)^{N-1} E] = 0`:
/// the largest `|H (A+BF)^k E|_ij / (||(A+BF)^k|| ||E||)`.
pub fn verify_decoupling(sys: &StateSpace, f: &DMatrix<f64>) -> Result<f64> {
    sys.check_shapes()?;
    sys.check_feedback(f)?;
    let closed = sys.closed_loop(f);
    let e_norm = two_norm(&sys.e);
    if e_norm == 0.0 {
        return Ok(0.0);
    }
    let n = sys.dim();
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut worst: f64 = 0.0;
    for k in 0..n {
        if k > 0 {
            power = &closed * &power;
        }
        let p_norm = two_norm(&power);
        if p_norm == 0.0 {
            break;
        }
        let term = &sys.h * &power * &sys.e;
        worst = worst.max(term.amax() / (p_norm * e_norm));
    }
    Ok(worst)
}

/// Full pipeline: `ker H`, `V*`, containment of `Im E`, friend, chain check.
pub fn solve_ddp(sys: &StateSpace, opts: &DdpOptions) -> Result<DecouplingSolution> {
    sys.check_shapes()?;
    let tol: Tol = opts.rank_tol.into();
    let ker_h = subspaces::kernel(&sys.h, tol)?;
    let isa = maximal_controlled_invariant(&sys.a, &sys.b, &ker_h, tol)?;
    let v_star = isa.subspace;
    let containment_residual = if sys.e.ncols() == 0 {
        0.0
    } else {
        let e_norm = two_norm(&sys.e).max(f64::MIN_POSITIVE);
        subspaces::containment_residual(&v_star, &sys.e) / e_norm
    };
    let contained = containment_residual <= opts.verify_tol;
    let friend = if contained {
        compute_friend(&sys.a, &sys.b, &v_star, opts.verify_tol)?
    } else {
        DMatrix::zeros(sys.b.ncols(), sys.dim())
    };
    let invariance_residual = invariance_residual(&sys.a, &sys.b, &friend, &v_star);
    let chain_residual = verify_decoupling(sys, &friend)?;
    let decouplable = contained && chain_residual <= opts.verify_tol;
    Ok(DecouplingSolution {
        v_star,
        friend,
        decouplable,
        containment_residual,
        invariance_residual,
        chain_residual,
        iterations: isa.iterations,
    })
}

/// `{x : Hx = 0, x_{4n+1} = x_{4n+3}, x_{4n+2} = x_{4n+4}}` (1-based), the
/// subspace in which the last two links share the same tilt and the last
/// link is at rest.
pub fn proof_candidate_subspace(model: &LinearModel) -> Result<Subspace> {
    let n = model.n;
    if n < 2 {
        return Err(Error::Precondition(format!(
            "candidate subspace needs at least two links, got {n}"
        )));
    }
    let dim = model.dim();
    let prev = model.layout.link_tilt(n - 1).start;
    let last = model.layout.link_tilt(n).start;
    let mut constraints = DMatrix::zeros(4, dim);
    constraints.rows_mut(0, 2).copy_from(&model.h);
    for k in 0..2 {
        constraints[(2 + k, prev + k)] = 1.0;
        constraints[(2 + k, last + k)] = -1.0;
    }
    subspaces::kernel(&constraints, Tol::Auto)
}

/// Block gain `[0_{2x12}, -k I2, 0_{2x3}, k D2, 0_{2x1}]` with
/// `k = 735.75` and `D2` the 2x2 exchange matrix, for the four-link model.
/// Its block widths do not line up with the 2-column state blocks, so every
/// plausible column placement is produced, each with both overall signs.
pub fn block_gain_readings(model: &LinearModel) -> Result<Vec<(String, DMatrix<f64>)>> {
    const K: f64 = 735.75;
    if model.n != 4 {
        return Err(Error::Precondition(format!(
            "block gain readings need the four-link model, got n = {}",
            model.n
        )));
    }
    let dim = model.dim();
    let first = model.layout.link_tilt(1).start;
    let placements = [
        ("literal columns", first + 5),
        ("exchange block on xi_3", model.layout.link_tilt(3).start),
        ("exchange block on xi_4", model.layout.link_tilt(4).start),
    ];
    let mut out = Vec::new();
    for (name, col) in placements {
        for (sign, tag) in [(1.0, "as printed"), (-1.0, "negated")] {
            let mut f = DMatrix::zeros(2, dim);
            f[(0, first)] = -K * sign;
            f[(1, first + 1)] = -K * sign;
            f[(0, col + 1)] = K * sign;
            f[(1, col)] = K * sign;
            out.push((format!("{name}, {tag}"), f));
        }
    }
    Ok(out)
}

/// Residuals of one candidate gain against `V*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCheck {
    pub reading: String,
    pub invariance_residual: f64,
    pub chain_residual: f64,
}

pub fn check_gain_readings(model: &LinearModel, v_star: &Subspace) -> Result<Vec<GainCheck>> {
    block_gain_readings(model)?
        .into_iter()
        .map(|(reading, f)| {
            Ok(GainCheck {
                reading,
                invariance_residual: invariance_residual(&model.a, &model.b, &f, v_star),
                chain_residual: verify_decoupling(model, &f)?,
            })
        })
        .collect()
}
