//! Independent numerical machinery used to check the rest of the crate:
//! quadrature, finite-difference Jacobians, simplex search and
//! Kolmogorov–Smirnov statistics.
//!
//! Nothing in here calls into the density, Möbius or estimation code, so a
//! check built from these pieces is a genuinely separate route.

pub mod fd;
pub mod ks;
pub mod optimize;
pub mod quadrature;

/// Tolerances, orders and budgets shared by every check.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Finite-difference step.
    pub fd_step: f64,
    /// Absolute tolerance between successive quadrature refinements.
    pub quad_tol: f64,
    /// Starting node count for Gauss–Legendre rules.
    pub quad_order: usize,
    /// Largest node count tried before giving up.
    pub quad_max_order: usize,
    /// Function-evaluation budget per simplex run.
    pub nm_budget: usize,
    /// Random restarts after the first simplex run.
    pub nm_restarts: usize,
    pub ks_alpha: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            fd_step: 1e-5,
            quad_tol: 1e-10,
            quad_order: 16,
            quad_max_order: 2048,
            nm_budget: 20_000,
            nm_restarts: 3,
            ks_alpha: 0.01,
            seed: 7,
        }
    }
}
