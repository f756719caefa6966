//! Multivariate Cauchy families on the extended Euclidean space and on the
//! sphere, together with the Möbius groups that act on them.
//!
//! The crate is `no_std` (it needs `alloc`). Every map and density here is a
//! pure function of immutable values, so all of it is `Send + Sync`.
//!
//! Layout:
//!
//! - [`geometry`]: extended points, extended complex parameters, rotations.
//! - [`moebius`]: Euclidean Möbius maps, the sphere subgroup, stereographic transport.
//! - [`densities`]: the four density families and the parameter pushforward rules.
//! - [`special`] and [`moments`]: Gauss hypergeometric function, marginal moments,
//!   method of moments.
//! - [`estimation`]: likelihood, closed-form and numeric maximum likelihood.
//! - [`sampling`]: reproducible random streams and exact samplers.
//! - [`oracle`]: quadrature, finite-difference Jacobians, simplex search and
//!   Kolmogorov–Smirnov statistics used to check everything else.
#![no_std]
// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod densities;
pub mod error;
pub mod estimation;
pub mod geometry;
mod math;
pub mod moebius;
pub mod moments;
pub mod oracle;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};

/// Column vector with a runtime dimension.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix with runtime dimensions.
pub type Matrix = nalgebra::DMatrix<f64>;
