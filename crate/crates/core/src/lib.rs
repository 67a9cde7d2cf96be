//! Disturbance decoupling workbench for the n-link chain pendulum on a cart.
//!
//! * [`subspaces`]: SVD-based subspace algebra (image, kernel, sum,
//!   intersection, preimage, containment).
//! * [`model`]: mass blocks, equilibria, the linearized `(A, B, E, H)` model
//!   and the nonlinear Euler-Lagrange dynamics.
//! * [`ddp`]: maximal controlled invariant subspace in `ker H`, friend
//!   synthesis and decoupling checks.
//! * [`sim`]: fixed-step RK4 simulation of the linear closed loop and of the
//!   nonlinear system, plus the with/without feedback difference experiment.
//! * [`cli`]: configuration files, reports and the four command workflows
//!   behind the `chain-ddp` binary.

pub mod cli;
pub mod ddp;
pub mod error;
pub mod linalg;
pub mod model;
pub mod sim;
pub mod subspaces;

pub use error::{Error, Result};
