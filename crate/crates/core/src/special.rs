//! Gauss hypergeometric function `₂F₁(a, b; c; z)` for real arguments `z < 1`.

use alloc::format;

use crate::error::{Error, Result};
use crate::math::{abs, exp, floor, ln, ln_gamma, powf};
use crate::oracle::quadrature::tanh_sinh_endpoint;

/// Relative tolerance of the series evaluation.
pub const SERIES_TOL: f64 = 1e-15;
/// Term cap of the series evaluation.
pub const MAX_TERMS: usize = 1_000_000;

/// Validated arguments of `₂F₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyp2F1Args {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && floor(x) == x
}

impl Hyp2F1Args {
    pub fn new(a: f64, b: f64, c: f64, z: f64) -> Result<Self> {
        if [a, b, c, z].iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite hypergeometric argument".into()));
        }
        if is_nonpositive_integer(c) {
            return Err(Error::InvalidParameter(format!("c = {c} is a non-positive integer")));
        }
        if !(z < 1.0) {
            return Err(Error::Domain(format!("z must be below 1, got {z}")));
        }
        Ok(Self { a, b, c, z })
    }

    pub fn eval(&self) -> Result<f64> {
        hyp2f1(self)
    }
}

/// Sums the power series at `|z| < 1`. Stops once a bound on the geometric
/// tail falls below [`SERIES_TOL`] times the partial sum.
fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let zabs = abs(z);
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let ratio = (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        term *= ratio;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        let r = abs(ratio).max(zabs);
        if r < 1.0 && abs(term) * r / (1.0 - r) <= SERIES_TOL * abs(sum) {
            return Ok(sum);
        }
    }
    Err(Error::NotConverged { what: "hypergeometric series", iterations: MAX_TERMS })
}

fn polynomial(a: f64, b: f64, c: f64, z: f64, degree: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..degree {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
    }
    sum
}

/// `₂F₁(a, b; c; z)` for `z < 1`.
///
/// Terminating series are summed exactly. For `z < 0` the argument is moved
/// into `(0, 1)` by a Pfaff transformation, choosing the variant whose
/// coefficients decay faster.
pub fn hyp2f1(args: &Hyp2F1Args) -> Result<f64> {
    let Hyp2F1Args { a, b, c, z } = *args;
    if z == 0.0 || a == 0.0 || b == 0.0 {
        return Ok(1.0);
    }
    for p in [a, b] {
        if is_nonpositive_integer(p) {
            return Ok(polynomial(a, b, c, z, (-p) as usize));
        }
    }
    if z > -0.5 {
        return series(a, b, c, z);
    }
    let w = z / (z - 1.0);
    let pre_a = || exp(-a * ln(1.0 - z));
    let pre_b = || exp(-b * ln(1.0 - z));
    let cb = c - b;
    let ca = c - a;
    if is_nonpositive_integer(cb) {
        return Ok(pre_a() * polynomial(a, cb, c, w, (-cb) as usize));
    }
    if is_nonpositive_integer(ca) {
        return Ok(pre_b() * polynomial(ca, b, c, w, (-ca) as usize));
    }
    if a <= b {
        Ok(pre_a() * series(a, cb, c, w)?)
    } else {
        Ok(pre_b() * series(ca, b, c, w)?)
    }
}

/// `₂F₁` through the Euler integral
/// `Γ(c)/(Γ(b)Γ(c − b)) ∫₀¹ t^{b−1}(1 − t)^{c−b−1}(1 − zt)^{−a} dt`, valid for
/// `c > b > 0`. An independent route for cross-checking [`hyp2f1`].
pub fn hyp2f1_integral(args: &Hyp2F1Args, tol: f64) -> Result<f64> {
    let Hyp2F1Args { a, b, c, z } = *args;
    if !(b > 0.0 && c > b) {
        return Err(Error::Domain("the integral representation needs c > b > 0".into()));
    }
    let ln_pre = ln_gamma(c) - ln_gamma(b) - ln_gamma(c - b);
    let f = |t: f64, t0: f64, t1: f64| powf(t0, b - 1.0) * powf(t1, c - b - 1.0) * powf(1.0 - z * t, -a);
    Ok(exp(ln_pre) * tanh_sinh_endpoint(f, 0.0, 1.0, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn f(a: f64, b: f64, c: f64, z: f64) -> f64 {
        Hyp2F1Args::new(a, b, c, z).unwrap().eval().unwrap()
    }

    #[test]
    fn elementary_values() {
        assert_eq!(f(0.3, 1.7, 2.2, 0.0), 1.0);
        let z: f64 = -0.5;
        assert_relative_eq!(f(1.0, 1.0, 2.0, z), -(1.0 - z).ln() / z, max_relative = 1e-14);
        let z = 0.3f64;
        assert_relative_eq!(f(0.5, 1.0, 1.5, z * z), z.atanh() / z, max_relative = 1e-14);
        for z in [-50.0f64, -3.0, -0.7, 0.4, 0.9] {
            assert_relative_eq!(f(0.5, -0.5, 0.5, z), (1.0 - z).sqrt(), max_relative = 1e-13);
            assert_relative_eq!(f(1.0, 1.0, 2.0, z), -(1.0 - z).ln() / z, max_relative = 1e-13);
        }
        let z = -200.0f64;
        assert_relative_eq!(f(0.5, 0.5, 1.5, z), (-z).sqrt().asinh() / (-z).sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn polynomial_case() {
        // F(−2, b; c; z) = 1 − 2bz/c + b(b+1)z²/(c(c+1)).
        let (b, c, z) = (1.5, 2.5, -3.0);
        let want = 1.0 - 2.0 * b * z / c + b * (b + 1.0) * z * z / (c * (c + 1.0));
        assert_relative_eq!(f(-2.0, b, c, z), want, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(Hyp2F1Args::new(1.0, 1.0, -2.0, 0.1).is_err());
        assert!(Hyp2F1Args::new(1.0, 1.0, 2.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn series_matches_integral(a in -2.0f64..3.0, b in 0.3f64..3.0, extra in 0.3f64..3.0, z in -30.0f64..0.8) {
            let args = Hyp2F1Args::new(a, b, b + extra, z).unwrap();
            let s = args.eval().unwrap();
            let i = hyp2f1_integral(&args, 1e-13).unwrap();
            prop_assert!((s - i).abs() <= 1e-10 * s.abs().max(1e-3));
        }
    }
}
