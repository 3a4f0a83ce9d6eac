//! Numerical verification toolkit for Harnack-type estimates governed by a
//! nonhomogeneous gradient drift.
//!
//! The central object is a drift function `phi(t) = eta(t) * t` controlling
//! first-order terms of a uniformly elliptic equation. The library provides
//!
//! * structure checks on the drift (monotonicity, slow variation, Osgood
//!   divergence) in [`drift`],
//! * the generalized Harnack functional `int_m^M dt / (R^2 phi(t/R) + t)`
//!   and its rescalings in [`harnack`],
//! * Pucci extremal operators and grid residual checks in [`pucci`],
//! * a radial barrier construction with a feasibility radius in [`barrier`],
//! * one-dimensional extremal solutions saturating the estimate in
//!   [`extremal1d`],
//! * level-set decay diagnostics and a discrete isoperimetric check in
//!   [`levelsets`],
//! * the variable-exponent (`p(x)`-Laplacian) specialization in [`pxlab`].
//!
//! Solutions of interest range over `exp(-exp(k))` scales, far below `f64`
//! underflow, so every quantity that can degenerate is carried in the log
//! domain: positive values as [`LogVal`], integrals via the substitution
//! `s = ln t`, and solution grids as `ln u`. See [`logval`] for conventions.

// Validation guards are written `!(x > 0.0)` so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod drift;
pub mod error;
pub mod extremal1d;
pub mod grid;
pub mod harnack;
pub mod levelsets;
pub mod logval;
pub mod ode;
pub mod pucci;
pub mod pxlab;
pub mod quad;
pub mod roots;
pub mod suite;

pub use error::{Error, Result};
pub use logval::LogVal;
