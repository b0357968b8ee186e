//! Mesh-free solver for one-dimensional time-fractional KdV / Burgers /
//! KdV–Burgers equations,
//!
//! ```text
//!   D_t^alpha u + eta * u * u_x - xi * u_xx + zeta * u_xxx = f(x, t)
//! ```
//!
//! with a Caputo time derivative of order `alpha` in (0, 1]. Space is
//! discretized by radial-basis-function generated finite differences (RBF-FD)
//! on scattered 1-D nodes; time is handled by taking the Laplace transform,
//! solving one complex collocation system per quadrature node of a deformed
//! Bromwich contour, and inverting with the trapezoidal rule. Nonlinear
//! advection is Picard-linearized around the previous iterate.
//!
//! The crate ships the numerical kernels (RBF kernels, stencil geometry,
//! differentiation matrices, contour quadrature, transform data), the solver
//! driver, a suite of built-in benchmark problems, and a small CLI that runs
//! configurations and writes CSV tables plus a reproducibility manifest.

pub mod config;
pub mod contour;
pub mod diffmat;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod par;
pub mod presets;
pub mod problems;
pub mod runner;
pub mod solver;
pub mod transforms;

pub use error::{Error, Result};
