// Image, kernel, sum, intersection and preimage on small matrices.

use chain_ddp::subspaces::{self, Tol};
use nalgebra::{dmatrix, DMatrix};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let h = dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 1.0];
    let ker_h = subspaces::kernel(&h, Tol::Auto)?;
    println!("dim ker H = {}", ker_h.dim());
    assert_eq!(ker_h.dim(), 1);

    // A rank-one matrix: its image is a line.
    let r1 = dmatrix![1.0, 2.0; 2.0, 4.0];
    let line = subspaces::image(&r1, Tol::Auto)?;
    println!("rank of [[1,2],[2,4]] = {}", line.dim());

    let xy = subspaces::image(&dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0], Tol::Auto)?;
    let yz = subspaces::image(&dmatrix![0.0, 0.0; 1.0, 0.0; 0.0, 1.0], Tol::Auto)?;
    let both = subspaces::sum(&xy, &yz, Tol::Auto)?;
    let meet = subspaces::intersect(&xy, &yz, Tol::Auto)?;
    println!("dim(xy + yz) = {}, dim(xy ∩ yz) = {}", both.dim(), meet.dim());
    assert_eq!((both.dim(), meet.dim()), (3, 1));

    // {x : A x ∈ span(e2)} for a nilpotent shift.
    let a = dmatrix![0.0, 1.0; 0.0, 0.0];
    let target = subspaces::image(&dmatrix![0.0; 1.0], Tol::Auto)?;
    let pre = subspaces::preimage(&a, &target, Tol::Auto)?;
    println!("preimage basis:\n{}", pre.basis());

    let containment = subspaces::contains(&both, &meet)?;
    println!("xy ∩ yz ⊂ xy + yz: {} (residual {:e})", containment.holds, containment.residual);

    // A tiny perturbation only counts as rank with a fine enough cut.
    let nearly = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-9]);
    let coarse = subspaces::image(&nearly, Tol::Rel(1e-6))?.dim();
    let fine = subspaces::image(&nearly, Tol::Auto)?.dim();
    println!("rank with Rel(1e-6): {coarse}, with Auto: {fine}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
