//! File formats, density grids, the verification suite and the `ccauchy`
//! command line, on top of `conformal-cauchy`.

// Negated comparisons are how NaN flag values get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod formats;
pub mod grid;
pub mod verify;
