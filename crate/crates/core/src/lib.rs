//! Numerical laboratory for thin obstacle (Signorini) problems on box grids.
//!
//! The crate solves the constrained minimization of a variable-coefficient
//! Dirichlet energy over even-symmetric fields on `[-1,1]^(n+1)` with the
//! unilateral constraint `u >= 0` on the thin plane `{x_{n+1} = 0}`, and
//! computes the quantities used to study the resulting free boundary:
//!
//! * smoothed frequency functions `I = r D / H` with a `C^{1,1}` cutoff,
//!   their radial derivative identities, doubling ratios and
//!   quasi-monotonicity constants ([`frequency`]);
//! * the intrinsic frequency `N` obtained from the affine change of
//!   variables that normalizes the coefficient matrix at a base point
//!   ([`intrinsic`]);
//! * solid/spherical Almgren quantities `E0, H0, I0` for Lipschitz
//!   coefficients ([`almgren`]);
//! * free-boundary extraction, Jones beta numbers, Minkowski content and
//!   order-of-contact estimators, together with an exact two-dimensional
//!   library of homogeneous solutions ([`geometry`]).
//!
//! Everything is deterministic: fields are immutable after construction and
//! all quadratures are fixed-order midpoint/trapezoid rules.

pub mod almgren;
pub mod coefficients;
pub mod error;
pub mod fields;
pub mod frequency;
pub mod geometry;
pub mod intrinsic;
pub mod matrix;
pub mod solver;

pub use error::{Error, Result};
pub use fields::{GridSpec, ScalarField};
