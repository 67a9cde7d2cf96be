//! Subspace algebra over `R^n` backed by singular value decompositions.
//!
//! Every subspace carries an orthonormal basis (possibly with zero columns,
//! which encodes `{0}`) and the dimensionless tolerance that was used to
//! decide its rank. Because bases are orthonormal, that tolerance is on the
//! scale of a unit vector and can be reused by later operations.
//!
//! Rank decisions threshold singular values. By default a singular value
//! counts as nonzero when it exceeds `max(rows, cols) * EPSILON * sigma_max`;
//! every entry point accepts [`Tol::Rel`] or [`Tol::Abs`] to override that
//! threshold. Operations on existing subspaces never cut finer than the
//! tolerances stored on their operands unless the caller overrides.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Rank threshold policy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Tol {
    /// `max(rows, cols) * EPSILON * sigma_max`, or the operands' stored
    /// tolerance when that is coarser.
    #[default]
    Auto,
    /// Singular values `<= r * sigma_max` are treated as zero.
    Rel(f64),
    /// Singular values `<=` this absolute value are treated as zero.
    Abs(f64),
}

/// Resolved rank cut.
#[derive(Debug, Clone, Copy)]
enum Cut {
    Rel(f64),
    Abs(f64),
}

impl Cut {
    fn resolve(tol: Tol, rows: usize, cols: usize, inherited: f64) -> Cut {
        match tol {
            Tol::Auto => Cut::Rel(default_rel_tol(rows, cols).max(inherited)),
            Tol::Rel(r) => Cut::Rel(r),
            Tol::Abs(t) => Cut::Abs(t),
        }
    }

    fn threshold(self, scale: f64) -> f64 {
        match self {
            Cut::Rel(r) => r * scale,
            Cut::Abs(t) => t,
        }
    }

    /// Dimensionless tolerance to store on the result.
    fn stored(self, scale: f64) -> f64 {
        let rel = match self {
            Cut::Rel(r) => r,
            Cut::Abs(t) if scale > 0.0 => t / scale,
            Cut::Abs(t) => t,
        };
        rel.max(f64::EPSILON)
    }
}

/// A linear subspace of `R^ambient_dim` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
    tol: f64,
}

/// Result of a [`contains`] test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub holds: bool,
    /// Largest norm of a candidate basis vector's component orthogonal to the
    /// containing subspace.
    pub residual: f64,
}

impl Subspace {
    /// The zero subspace of `R^ambient_dim`.
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            basis: DMatrix::zeros(ambient_dim, 0),
            tol: 0.0,
        }
    }

    /// The whole space `R^ambient_dim` with the standard basis.
    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            tol: default_rel_tol(ambient_dim, ambient_dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// Orthonormal basis, one column per dimension.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.is_zero() {
            return DVector::zeros(v.len());
        }
        &self.basis * (self.basis.transpose() * v)
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Orthogonal complement, with the same tolerance.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient_dim();
        if self.is_zero() {
            return Subspace::full(n);
        }
        let rows = self.basis.transpose();
        let (r, c) = rows.shape();
        null_space(&rows, Cut::resolve(Tol::Auto, r, c, self.tol), None)
    }

    /// Matrix `I - Q Q^T` projecting onto the orthogonal complement.
    pub fn complement_projector(&self) -> DMatrix<f64> {
        let n = self.ambient_dim();
        let mut p = DMatrix::identity(n, n);
        if !self.is_zero() {
            p -= &self.basis * self.basis.transpose();
        }
        p
    }

    /// Largest deviation of `basis^T basis` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.dim();
        let gram = self.basis.transpose() * &self.basis;
        (gram - DMatrix::<f64>::identity(r, r)).amax()
    }
}

fn default_rel_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols).max(1) as f64 * f64::EPSILON
}

/// Column space of `m`.
pub fn image(m: &DMatrix<f64>, tol: Tol) -> Result<Subspace> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::DegenerateShape { rows, cols });
    }
    Ok(column_space(m, Cut::resolve(tol, rows, cols, 0.0)))
}

fn column_space(m: &DMatrix<f64>, cut: Cut) -> Subspace {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Subspace::zero(rows);
    }
    let Ok(svd) = linalg::svd(m) else {
        return Subspace::zero(rows);
    };
    let sigma_max = svd.s.max();
    let thr = cut.threshold(sigma_max);
    let rank = svd.s.iter().take_while(|&&x| x > thr).count();
    if rank == 0 {
        return Subspace::zero(rows);
    }
    Subspace {
        basis: svd.u.columns(0, rank).into_owned(),
        tol: cut.stored(sigma_max),
    }
}

/// Null space `{x : m x = 0}`.
pub fn kernel(m: &DMatrix<f64>, tol: Tol) -> Result<Subspace> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Err(Error::DegenerateShape { rows, cols });
    }
    if rows == 0 {
        return Ok(Subspace::full(cols));
    }
    Ok(null_space(m, Cut::resolve(tol, rows, cols, 0.0), None))
}

/// Null space; a relative cut is taken against `scale` when given, else
/// against the largest singular value of `m`.
fn null_space(m: &DMatrix<f64>, cut: Cut, scale: Option<f64>) -> Subspace {
    let cols = m.ncols();
    let Ok(svd) = linalg::svd(m) else {
        return Subspace::zero(cols);
    };
    let sigma_max = scale.unwrap_or_else(|| svd.s.iter().copied().fold(0.0, f64::max));
    let thr = cut.threshold(sigma_max);
    let rank = svd.s.iter().take_while(|&&x| x > thr).count();
    if rank == cols {
        return Subspace::zero(cols);
    }
    Subspace {
        basis: svd.v.columns(rank, cols - rank).into_owned(),
        tol: cut.stored(sigma_max),
    }
}

fn check_ambient(s: &Subspace, t: &Subspace) -> Result<()> {
    if s.ambient_dim() != t.ambient_dim() {
        return Err(Error::AmbientMismatch {
            left: s.ambient_dim(),
            right: t.ambient_dim(),
        });
    }
    Ok(())
}

/// `S + T`.
pub fn sum(s: &Subspace, t: &Subspace, tol: Tol) -> Result<Subspace> {
    check_ambient(s, t)?;
    if s.is_zero() {
        return Ok(t.clone());
    }
    if t.is_zero() {
        return Ok(s.clone());
    }
    let stacked = hstack(s.basis(), t.basis());
    let (r, c) = stacked.shape();
    Ok(column_space(&stacked, Cut::resolve(tol, r, c, s.tol.max(t.tol))))
}

/// `S ∩ T`, via the null space of `[S, -T]`.
pub fn intersect(s: &Subspace, t: &Subspace, tol: Tol) -> Result<Subspace> {
    check_ambient(s, t)?;
    let n = s.ambient_dim();
    if s.is_zero() || t.is_zero() {
        return Ok(Subspace::zero(n));
    }
    let stacked = hstack(s.basis(), &(-t.basis()));
    let (rr, cc) = stacked.shape();
    let cut = Cut::resolve(tol, rr, cc, s.tol.max(t.tol));
    let coeffs = null_space(&stacked, cut, None);
    if coeffs.is_zero() {
        return Ok(Subspace::zero(n));
    }
    // Average both representations of each intersection vector so that the
    // result sits symmetrically between S and T.
    let r = s.dim();
    let a = coeffs.basis().rows(0, r);
    let b = coeffs.basis().rows(r, t.dim());
    let vectors = (s.basis() * a + t.basis() * b) * 0.5;
    let mut out = column_space(&vectors, Cut::Rel(default_rel_tol(n, vectors.ncols())));
    out.tol = out.tol.max(coeffs.tol);
    Ok(out)
}

/// `{x : A x ∈ S}`.
pub fn preimage(a: &DMatrix<f64>, s: &Subspace, tol: Tol) -> Result<Subspace> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::ShapeMismatch(format!(
            "preimage needs a square matrix, got {rows}x{cols}"
        )));
    }
    if s.ambient_dim() != rows {
        return Err(Error::AmbientMismatch {
            left: rows,
            right: s.ambient_dim(),
        });
    }
    // Components of A x orthogonal to S must vanish. The rank cut is taken
    // relative to ||A||: when S is nearly everything, Q_perp^T A is rounding
    // noise and must not be mistaken for rank.
    let perp = s.complement();
    if perp.is_zero() {
        return Ok(Subspace::full(cols));
    }
    let off = perp.basis().transpose() * a;
    let a_scale = linalg::two_norm(a);
    let (r, c) = off.shape();
    Ok(null_space(&off, Cut::resolve(tol, r, c, s.tol), Some(a_scale)))
}

/// Whether `T ⊂ S`, using `sqrt` of the larger stored tolerance as the
/// membership bound.
pub fn contains(s: &Subspace, t: &Subspace) -> Result<Containment> {
    let bound = s.tol.max(t.tol).max(f64::EPSILON).sqrt();
    contains_within(s, t, bound)
}

/// Whether `T ⊂ S` with an explicit bound on the residual.
pub fn contains_within(s: &Subspace, t: &Subspace, bound: f64) -> Result<Containment> {
    check_ambient(s, t)?;
    let residual = containment_residual(s, t.basis());
    Ok(Containment {
        holds: residual <= bound,
        residual,
    })
}

/// Largest distance from a column of `vectors` to `s`.
pub fn containment_residual(s: &Subspace, vectors: &DMatrix<f64>) -> f64 {
    if vectors.ncols() == 0 {
        return 0.0;
    }
    let off = s.complement_projector() * vectors;
    off.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Span of the given standard basis vectors (0-based indices).
pub fn coordinate_span(ambient_dim: usize, indices: &[usize]) -> Subspace {
    let mut basis = DMatrix::zeros(ambient_dim, indices.len());
    for (col, &i) in indices.iter().enumerate() {
        basis[(i, col)] = 1.0;
    }
    let (r, c) = basis.shape();
    column_space(&basis, Cut::resolve(Tol::Auto, r, c, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn e(n: usize, i: usize) -> DMatrix<f64> {
        let mut v = DMatrix::zeros(n, 1);
        v[(i, 0)] = 1.0;
        v
    }

    fn span(cols: &[DMatrix<f64>]) -> Subspace {
        let n = cols[0].nrows();
        let mut m = DMatrix::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_column(j, &c.column(0));
        }
        image(&m, Tol::Auto).unwrap()
    }

    fn same(s: &Subspace, t: &Subspace) -> bool {
        s.dim() == t.dim()
            && contains(s, t).unwrap().holds
            && contains(t, s).unwrap().holds
    }

    #[test]
    fn image_examples() {
        let s = image(&dmatrix![1.0, 0.0; 0.0, 0.0], Tol::Auto).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(same(&s, &span(&[e(2, 0)])));

        let z = image(&DMatrix::zeros(3, 2), Tol::Auto).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.ambient_dim(), 3);

        let r1 = image(&dmatrix![1.0, 2.0; 2.0, 4.0], Tol::Auto).unwrap();
        assert_eq!(r1.dim(), 1);
        let b = r1.basis().column(0).abs();
        let five = 5f64.sqrt();
        assert!((b[0] - 1.0 / five).abs() < 1e-14 && (b[1] - 2.0 / five).abs() < 1e-14);
    }

    #[test]
    fn empty_matrix_is_degenerate() {
        let err = image(&DMatrix::zeros(0, 2), Tol::Auto).unwrap_err();
        assert!(err.to_string().contains("degenerate shape"));
        assert!(image(&DMatrix::zeros(2, 0), Tol::Auto).is_err());
        assert!(kernel(&DMatrix::zeros(2, 0), Tol::Auto).is_err());
    }

    #[test]
    fn kernel_examples() {
        // H = [0 I2 0] for n = 2 selects coordinates 5 and 6 (1-based).
        let mut h = DMatrix::zeros(2, 12);
        h[(0, 4)] = 1.0;
        h[(1, 5)] = 1.0;
        let k = kernel(&h, Tol::Auto).unwrap();
        let expected: Vec<usize> = (0..12).filter(|&i| i != 4 && i != 5).collect();
        assert!(same(&k, &coordinate_span(12, &expected)));

        assert!(kernel(&DMatrix::identity(3, 3), Tol::Auto).unwrap().is_zero());

        let k = kernel(&dmatrix![1.0, 1.0], Tol::Auto).unwrap();
        assert_eq!(k.dim(), 1);
        let v = k.basis().column(0);
        assert!((v[0] + v[1]).abs() < 1e-15);
        assert!((v[0].abs() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sum_examples() {
        let e1 = span(&[e(3, 0)]);
        let e2 = span(&[e(3, 1)]);
        let both = span(&[e(3, 0), e(3, 1)]);
        assert!(same(&sum(&e1, &e2, Tol::Auto).unwrap(), &both));
        assert!(same(&sum(&e1, &Subspace::zero(3), Tol::Auto).unwrap(), &e1));
        let diag = span(&[e(3, 0) + e(3, 1)]);
        assert!(same(&sum(&e1, &diag, Tol::Auto).unwrap(), &both));
    }

    #[test]
    fn intersect_examples() {
        let s = span(&[e(3, 0), e(3, 1)]);
        let t = span(&[e(3, 1), e(3, 2)]);
        assert!(same(&intersect(&s, &t, Tol::Auto).unwrap(), &span(&[e(3, 1)])));
        assert!(same(&intersect(&s, &Subspace::full(3), Tol::Auto).unwrap(), &s));
        let z = intersect(&span(&[e(3, 0)]), &span(&[e(3, 1)]), Tol::Auto).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn ambient_mismatch_is_an_error() {
        let a = Subspace::full(2);
        let b = Subspace::full(3);
        assert!(matches!(sum(&a, &b, Tol::Auto), Err(Error::AmbientMismatch { .. })));
        assert!(intersect(&a, &b, Tol::Auto).is_err());
        assert!(contains(&a, &b).is_err());
        assert!(preimage(&DMatrix::identity(3, 3), &a, Tol::Auto).is_err());
        assert!(preimage(&DMatrix::zeros(2, 3), &a, Tol::Auto).is_err());
    }

    #[test]
    fn preimage_examples() {
        let a = dmatrix![0.0, 1.0; 0.0, 0.0];
        let p = preimage(&a, &span(&[e(2, 1)]), Tol::Auto).unwrap();
        assert!(same(&p, &span(&[e(2, 0)])));

        let s = span(&[e(3, 2)]);
        let full = preimage(&DMatrix::zeros(3, 3), &s, Tol::Auto).unwrap();
        assert_eq!(full.dim(), 3);

        let s = span(&[e(3, 0) + e(3, 2)]);
        assert!(same(&preimage(&DMatrix::identity(3, 3), &s, Tol::Auto).unwrap(), &s));
    }

    #[test]
    fn contains_examples() {
        let s = span(&[e(2, 0), e(2, 1)]);
        let c = contains(&s, &span(&[e(2, 0)])).unwrap();
        assert!(c.holds);
        assert_eq!(c.residual, 0.0);

        let c = contains(&span(&[e(2, 0)]), &span(&[e(2, 1)])).unwrap();
        assert!(!c.holds);
        assert!((c.residual - 1.0).abs() < 1e-15);

        let c = contains(&span(&[e(2, 0)]), &Subspace::zero(2)).unwrap();
        assert!(c.holds);
    }

    #[test]
    fn abs_tolerance_override_changes_rank() {
        let m = dmatrix![1.0, 0.0; 0.0, 1e-9];
        assert_eq!(image(&m, Tol::Auto).unwrap().dim(), 2);
        assert_eq!(image(&m, Tol::Abs(1e-6)).unwrap().dim(), 1);
        assert_eq!(kernel(&m, Tol::Abs(1e-6)).unwrap().dim(), 1);
    }

    #[test]
    fn complement_is_orthogonal() {
        let s = span(&[e(4, 0) + e(4, 3), e(4, 1)]);
        let c = s.complement();
        assert_eq!(c.dim(), 2);
        assert!((s.basis().transpose() * c.basis()).amax() < 1e-15);
        assert_eq!(Subspace::zero(3).complement().dim(), 3);
    }
}
