//! Densities of the Cauchy family on `R^d`, the spherical Cauchy family on
//! `S^d`, its one-dimensional marginal, and the Kent-type extension, plus the
//! parameter update rules under Möbius and stereographic maps.
//!
//! Log-densities are primary; linear densities exponentiate them.

use alloc::format;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{ExtendedComplexParam, ExtendedPoint};
use crate::math::{abs, atan2, cos, exp, ln, ln_gamma, sin, sqrt, LN_2, PI};
use crate::moebius::{
    check_unit, inv_stereographic, inv_stereographic_ext, stereographic, stereographic_point,
    MoebiusChain, SphereMoebius, UNIT_NORM_GUARD,
};
use crate::{Matrix, Vector};

/// Tolerance on `‖y‖ − 1` accepted by the sphere densities.
pub const UNIT_TOL: f64 = 1e-10;

/// `ln` of `2^{d−1} Γ((d+1)/2) / π^{(d+1)/2}`.
pub fn ln_euclid_const(d: usize) -> f64 {
    let h = (d as f64 + 1.0) / 2.0;
    (d as f64 - 1.0) * LN_2 + ln_gamma(h) - h * ln(PI)
}

/// `ln` of `Γ((d+1)/2) / (2 π^{(d+1)/2})`, the reciprocal surface area of `S^d`.
pub fn ln_sphere_const(d: usize) -> f64 {
    let h = (d as f64 + 1.0) / 2.0;
    ln_gamma(h) - LN_2 - h * ln(PI)
}

/// Cauchy law `C_d(θ)` on `R̄^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanCauchy {
    theta: ExtendedComplexParam,
}

impl EuclideanCauchy {
    pub fn new(theta: ExtendedComplexParam) -> Self {
        Self { theta }
    }

    pub fn theta(&self) -> &ExtendedComplexParam {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    /// `σ = 0` or `θ = ∞`.
    pub fn is_point_mass(&self) -> bool {
        self.theta.as_finite().map_or(true, |p| p.sigma() == 0.0)
    }

    pub fn ln_pdf(&self, x: &ExtendedPoint) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        let p = match self.theta.as_finite() {
            Some(p) if p.sigma() > 0.0 => p,
            _ => return Err(Error::PointMass),
        };
        let Some(x) = x.as_finite() else {
            return Ok(f64::NEG_INFINITY);
        };
        let s = p.sigma();
        let r2 = (x - p.mu()).norm_squared();
        let d = self.dim() as f64;
        Ok(ln_euclid_const(self.dim()) + d * (ln(s) - ln(s * s + r2)))
    }

    pub fn pdf(&self, x: &ExtendedPoint) -> Result<f64> {
        self.ln_pdf(x).map(exp)
    }
}

/// Spherical Cauchy law `C*_d(φ)` on `S^d ⊂ R^{d+1}`; `φ = 0` and `φ = ∞`
/// give the uniform law.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCauchy {
    phi: ExtendedPoint,
}

impl SphericalCauchy {
    pub fn new(phi: ExtendedPoint) -> Result<Self> {
        if phi.dim() < 2 {
            return Err(Error::InvalidParameter("phi needs at least two coordinates".into()));
        }
        Ok(Self { phi })
    }

    pub fn from_vector(phi: Vector) -> Result<Self> {
        Self::new(ExtendedPoint::finite(phi)?)
    }

    pub fn uniform(ambient: usize) -> Result<Self> {
        Self::new(ExtendedPoint::infinity(ambient))
    }

    pub fn phi(&self) -> &ExtendedPoint {
        &self.phi
    }

    /// Sphere dimension `d`.
    pub fn dim(&self) -> usize {
        self.phi.dim() - 1
    }

    pub fn is_point_mass(&self) -> bool {
        self.phi.as_finite().is_some_and(|p| abs(p.norm() - 1.0) <= UNIT_NORM_GUARD)
    }

    pub fn ln_pdf(&self, y: &Vector) -> Result<f64> {
        check_dim(self.phi.dim(), y.len())?;
        check_unit(y, UNIT_TOL)?;
        let d = self.dim();
        let c = ln_sphere_const(d);
        let Some(phi) = self.phi.as_finite() else {
            return Ok(c);
        };
        let p2 = phi.norm_squared();
        if p2 == 0.0 {
            return Ok(c);
        }
        if self.is_point_mass() {
            return Err(Error::PointMass);
        }
        let r2 = (y - phi).norm_squared();
        Ok(c + d as f64 * (ln(abs(1.0 - p2)) - ln(r2)))
    }

    pub fn pdf(&self, y: &Vector) -> Result<f64> {
        self.ln_pdf(y).map(exp)
    }
}

/// Law of the first coordinate of `C*_ν(ϕe_1)`, with `ν > 0` real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalCauchyBeta {
    varphi: f64,
    nu: f64,
    ln_norm: f64,
}

impl MarginalCauchyBeta {
    pub fn new(varphi: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        if !varphi.is_finite() || abs(abs(varphi) - 1.0) <= UNIT_NORM_GUARD {
            return Err(Error::InvalidParameter(format!("varphi must be finite with |varphi| != 1, got {varphi}")));
        }
        let ln_beta = ln_gamma(nu / 2.0) + ln_gamma(0.5) - ln_gamma(nu / 2.0 + 0.5);
        Ok(Self { varphi, nu, ln_norm: -ln_beta })
    }

    pub fn varphi(&self) -> f64 {
        self.varphi
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ln_pdf(&self, y1: f64) -> Result<f64> {
        if !(y1 > -1.0 && y1 < 1.0) {
            return Err(Error::Domain(format!("y1 must lie in (-1, 1), got {y1}")));
        }
        let p = self.varphi;
        let num = abs((1.0 - p) * (1.0 + p));
        let den = (1.0 - p) * (1.0 - p) + 2.0 * p * (1.0 - y1);
        let edge = ln((1.0 - y1) * (1.0 + y1));
        Ok(self.ln_norm + self.nu * (ln(num) - ln(den)) + (self.nu - 2.0) / 2.0 * edge)
    }

    pub fn pdf(&self, y1: f64) -> Result<f64> {
        self.ln_pdf(y1).map(exp)
    }
}

/// `y ↦ (y + b)/(by + 1)`, the real Möbius map preserving `(−1, 1)`.
pub fn real_moebius(b: f64, y: f64) -> f64 {
    (y + b) / (b * y + 1.0)
}

/// Parameter of the marginal law of `(Y_1 + b)/(bY_1 + 1)` when `Y_1` has
/// parameter `ϕ`.
pub fn marginal_pushforward_param(varphi: f64, b: f64) -> Result<f64> {
    if !(b > -1.0 && b < 1.0) {
        return Err(Error::Domain(format!("b must lie in (-1, 1), got {b}")));
    }
    if !varphi.is_finite() || abs(abs(varphi) - 1.0) <= UNIT_NORM_GUARD {
        return Err(Error::InvalidParameter(format!("|varphi| must differ from 1, got {varphi}")));
    }
    if b == 0.0 {
        return Ok(varphi);
    }
    let bp = b / (1.0 + sqrt((1.0 - b) * (1.0 + b)));
    let den = varphi * bp + 1.0;
    if den == 0.0 {
        // ϕ' = −1/ϕ sends the parameter to ∞, equivalent to 0.
        return Ok(0.0);
    }
    Ok((varphi + bp) / den)
}

/// Mode and antimode of a [`KentTypeCauchy`] density.
#[derive(Debug, Clone, PartialEq)]
pub struct KentExtrema {
    pub mode: Vector,
    pub antimode: Vector,
    pub fmax: f64,
    pub fmin: f64,
    /// Set when the smallest or largest eigenvalue of `A` is repeated, so the
    /// maximizer or minimizer is not unique.
    pub degenerate: bool,
}

/// Law of `h(U) = G(μ + L·G⁻¹(U))` for `U` uniform on `S^d`, with `G` the
/// inverse stereographic projection.
#[derive(Debug, Clone, PartialEq)]
pub struct KentTypeCauchy {
    mu: Vector,
    l: Matrix,
    a_mat: Matrix,
    ln_c: f64,
    eigenvalues: Vector,
    eigenvectors: Matrix,
}

impl KentTypeCauchy {
    pub fn new(mu: Vector, l: Matrix) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        check_dim(d, l.nrows())?;
        check_dim(d, l.ncols())?;
        if mu.iter().chain(l.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite Kent parameter".into()));
        }
        let det = l.determinant();
        let scale = l.amax().max(f64::MIN_POSITIVE);
        if !(abs(det) > 1e-14 * libm::pow(scale, d as f64)) {
            return Err(Error::Domain("L is singular".into()));
        }
        let m = (&l * l.transpose())
            .try_inverse()
            .ok_or_else(|| Error::Domain("L Lᵀ is not invertible".into()))?;
        let m = (&m + m.transpose()) * 0.5;
        let mmu = &m * &mu;
        let mut a = Matrix::zeros(d + 1, d + 1);
        a.view_mut((0, 0), (d, d)).copy_from(&m);
        a.view_mut((0, d), (d, 1)).copy_from(&mmu);
        a.view_mut((d, 0), (1, d)).copy_from(&mmu.transpose());
        a[(d, d)] = 1.0 + mu.dot(&mmu);
        let eig = a.clone().symmetric_eigen();
        let mut order: alloc::vec::Vec<usize> = (0..=d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues = Vector::from_fn(d + 1, |k, _| eig.eigenvalues[order[k]]);
        let eigenvectors = Matrix::from_fn(d + 1, d + 1, |r, k| eig.eigenvectors[(r, order[k])]);
        let ln_c = ln_sphere_const(d) - ln(abs(det));
        Ok(Self { mu, l, a_mat: a, ln_c, eigenvalues, eigenvectors })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &Vector {
        &self.mu
    }

    pub fn l(&self) -> &Matrix {
        &self.l
    }

    /// The quadratic-form matrix `A = [[M, Mμ], [μᵀM, 1 + μᵀMμ]]`,
    /// `M = (LLᵀ)⁻¹`.
    pub fn a_matrix(&self) -> &Matrix {
        &self.a_mat
    }

    /// `tr(A)/(d + 1)`.
    pub fn q_bar(&self) -> f64 {
        self.a_mat.trace() / (self.dim() as f64 + 1.0)
    }

    /// Trace-free part `A − Q̄ I`.
    pub fn t_matrix(&self) -> Matrix {
        let n = self.dim() + 1;
        &self.a_mat - Matrix::identity(n, n) * self.q_bar()
    }

    /// Eigenvalues of `A`, ascending.
    pub fn eigenvalues(&self) -> &Vector {
        &self.eigenvalues
    }

    /// Columns are the eigenvectors matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    /// `ỹ = (y − e_{d+1})/‖y − e_{d+1}‖`.
    fn direction(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.dim() + 1, y.len())?;
        check_unit(y, UNIT_TOL)?;
        let mut w = y.clone();
        w[self.dim()] -= 1.0;
        let n = w.norm();
        if n == 0.0 {
            return Err(Error::Singular);
        }
        Ok(w / n)
    }

    pub fn ln_pdf(&self, y: &Vector) -> Result<f64> {
        let yt = self.direction(y)?;
        let q = yt.dot(&(&self.a_mat * &yt));
        Ok(self.ln_c - self.dim() as f64 * ln(q))
    }

    pub fn pdf(&self, y: &Vector) -> Result<f64> {
        self.ln_pdf(y).map(exp)
    }

    /// The same density written as `C (Q̄ + ỹᵀTỹ)^{−d}`.
    pub fn pdf_trace_form(&self, y: &Vector) -> Result<f64> {
        let yt = self.direction(y)?;
        let q = self.q_bar() + yt.dot(&(self.t_matrix() * &yt));
        Ok(exp(self.ln_c - self.dim() as f64 * ln(q)))
    }

    /// `h(u) = G(μ + L·G⁻¹(u))` for `u ∈ S^d`.
    pub fn transform(&self, u: &Vector) -> Vector {
        let d = self.dim();
        match stereographic_point(u) {
            Ok(ExtendedPoint::Finite(x)) => inv_stereographic(&ExtendedPoint::Finite(&self.mu + &self.l * x)),
            _ => inv_stereographic(&ExtendedPoint::infinity(d)),
        }
    }

    fn direction_to_point(&self, yt: &Vector) -> Vector {
        let d = self.dim();
        let last = yt[d];
        if abs(last) < 1e-15 {
            return inv_stereographic(&ExtendedPoint::infinity(d));
        }
        let x = yt.rows(0, d) / (-last);
        inv_stereographic(&ExtendedPoint::Finite(x))
    }

    pub fn mode_antimode(&self) -> KentExtrema {
        let n = self.dim() + 1;
        let d = self.dim() as f64;
        let lam = &self.eigenvalues;
        let pick = |k: usize| {
            let v = self.eigenvectors.column(k).into_owned();
            if v[n - 1] > 0.0 {
                -v
            } else {
                v
            }
        };
        let tie_tol = 1e-12 * lam[n - 1].max(1.0);
        let degenerate = lam[1] - lam[0] <= tie_tol || lam[n - 1] - lam[n - 2] <= tie_tol;
        KentExtrema {
            mode: self.direction_to_point(&pick(0)),
            antimode: self.direction_to_point(&pick(n - 1)),
            fmax: exp(self.ln_c - d * ln(lam[0])),
            fmin: exp(self.ln_c - d * ln(lam[n - 1])),
            degenerate,
        }
    }
}

/// The `d = 2`, `μ = 0` Kent-type density in polar and equal-area
/// coordinates, parameterized by the entries of `a = (LLᵀ)⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KentD2 {
    a11: f64,
    a12: f64,
    a22: f64,
    c2: f64,
}

impl KentD2 {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Result<Self> {
        let det = a11 * a22 - a12 * a12;
        if !(a11 > 0.0 && det > 0.0) || !a12.is_finite() || !a22.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "(a11, a12, a22) = ({a11}, {a12}, {a22}) is not positive definite"
            )));
        }
        Ok(Self { a11, a12, a22, c2: sqrt(det) / (4.0 * PI) })
    }

    pub fn from_kent(k: &KentTypeCauchy) -> Result<Self> {
        if k.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: k.dim() });
        }
        if k.mu().norm() != 0.0 {
            return Err(Error::InvalidParameter("chart forms need mu = 0".into()));
        }
        let a = k.a_matrix();
        Self::new(a[(0, 0)], a[(0, 1)], a[(1, 1)])
    }

    /// Normalizing constant `(a11 a22 − a12²)^{1/2}/(4π)`, i.e. `1/(4π|det L|)`.
    pub fn constant(&self) -> f64 {
        self.c2
    }

    pub fn alpha(&self) -> f64 {
        let dd = self.a11 - self.a22;
        sqrt(dd * dd + 4.0 * self.a12 * self.a12)
    }

    pub fn beta(&self) -> f64 {
        atan2(2.0 * self.a12, self.a11 - self.a22) / 2.0
    }

    fn quad(&self, c: f64, s: f64) -> f64 {
        (self.a11 - 1.0) * c * c + 2.0 * self.a12 * c * s + (self.a22 - 1.0) * s * s
    }

    fn check_polar(xi1: f64, xi2: f64) -> Result<()> {
        if !(0.0..=PI).contains(&xi1) || !(-PI..=PI).contains(&xi2) {
            return Err(Error::Domain(format!("polar coordinates ({xi1}, {xi2}) out of range")));
        }
        Ok(())
    }

    /// Density w.r.t. `sin ξ1 dξ1 dξ2`, with `ξ1` the angle from the pole
    /// `−e_3`.
    pub fn pdf_polar(&self, xi1: f64, xi2: f64) -> Result<f64> {
        Self::check_polar(xi1, xi2)?;
        let h = sin(xi1 / 2.0);
        let br = 1.0 + h * h * self.quad(cos(xi2), sin(xi2));
        Ok(self.c2 / (br * br))
    }

    /// [`Self::pdf_polar`] via the harmonic form
    /// `q(ξ2) = (a11 + a22)/2 + (α/2) cos 2(ξ2 − β)`.
    pub fn pdf_polar_harmonic(&self, xi1: f64, xi2: f64) -> Result<f64> {
        Self::check_polar(xi1, xi2)?;
        let q = (self.a11 + self.a22) / 2.0 + self.alpha() / 2.0 * cos(2.0 * (xi2 - self.beta()));
        let (ch, sh) = (cos(xi1 / 2.0), sin(xi1 / 2.0));
        let br = ch * ch + sh * sh * q;
        Ok(self.c2 / (br * br))
    }

    /// Density on the disk `‖v‖ ≤ 2` w.r.t. Lebesgue measure.
    pub fn pdf_lambert(&self, v1: f64, v2: f64) -> Result<f64> {
        let r2 = v1 * v1 + v2 * v2;
        if !(r2 <= 4.0 * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("({v1}, {v2}) lies outside the disk of radius 2")));
        }
        let br = 1.0 + 0.25 * self.quad(v1, v2);
        Ok(self.c2 / (br * br))
    }
}

/// `(sin ξ1 cos ξ2, sin ξ1 sin ξ2, −cos ξ1)`.
pub fn polar_to_sphere(xi1: f64, xi2: f64) -> Vector {
    Vector::from_column_slice(&[sin(xi1) * cos(xi2), sin(xi1) * sin(xi2), -cos(xi1)])
}

/// Equal-area chart `v = 2 sin(ξ1/2)(cos ξ2, sin ξ2)` inverted to `(ξ1, ξ2)`.
pub fn lambert_to_polar(v1: f64, v2: f64) -> (f64, f64) {
    let r = sqrt(v1 * v1 + v2 * v2).min(2.0);
    (2.0 * libm::asin(r / 2.0), atan2(v2, v1))
}

/// A transform whose parameter action is known in closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Euclidean(MoebiusChain),
    Sphere(SphereMoebius),
    /// `R̄^d → S^d`.
    InverseStereographic,
    /// `S^d → R̄^d`.
    Stereographic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyParam {
    /// `θ` of `C_d(θ)`.
    Euclidean(ExtendedComplexParam),
    /// `φ` of `C*_d(φ)`.
    Sphere(ExtendedPoint),
}

/// Parameter of the image law: if `X` has parameter `param`, then
/// `transform(X)` has the returned parameter.
pub fn pushforward_params(transform: &Transform, param: &FamilyParam) -> Result<FamilyParam> {
    match (transform, param) {
        (Transform::Euclidean(c), FamilyParam::Euclidean(t)) => c.apply_param(t).map(FamilyParam::Euclidean),
        (Transform::Sphere(s), FamilyParam::Sphere(p)) => s.apply(p).map(FamilyParam::Sphere),
        (Transform::InverseStereographic, FamilyParam::Euclidean(t)) => {
            Ok(FamilyParam::Sphere(inv_stereographic_ext(t)))
        }
        (Transform::Stereographic, FamilyParam::Sphere(p)) => {
            if p.dim() < 2 {
                return Err(Error::InvalidParameter("phi needs at least two coordinates".into()));
            }
            stereographic(p).map(FamilyParam::Euclidean)
        }
        _ => Err(Error::KindMismatch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::random_rotation_with;
    use crate::moebius::MoebiusMap;
    use crate::sampling::{sample_uniform_sphere, RngStream};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn theta(mu: &[f64], s: f64) -> ExtendedComplexParam {
        ExtendedComplexParam::new(v(mu), s).unwrap()
    }

    #[test]
    fn euclid_examples() {
        let c = EuclideanCauchy::new(theta(&[0.0], 1.0));
        assert_relative_eq!(c.pdf(&ExtendedPoint::origin(1)).unwrap(), 1.0 / PI, max_relative = 1e-15);
        for d in 1..4 {
            let mu = alloc::vec![0.3; d];
            let c = EuclideanCauchy::new(theta(&mu, 0.7));
            let at = c.pdf(&ExtendedPoint::from_slice(&mu).unwrap()).unwrap();
            let h = (d as f64 + 1.0) / 2.0;
            let want = 2f64.powi(d as i32 - 1) * libm::tgamma(h) / (PI.powf(h) * 0.7f64.powi(d as i32));
            assert_relative_eq!(at, want, max_relative = 1e-13);
        }
        let pm = EuclideanCauchy::new(theta(&[0.0], 0.0));
        assert_eq!(pm.pdf(&ExtendedPoint::origin(1)), Err(Error::PointMass));
        let inf = EuclideanCauchy::new(ExtendedComplexParam::infinity(1));
        assert_eq!(inf.pdf(&ExtendedPoint::origin(1)), Err(Error::PointMass));
        assert_eq!(c_at_inf(), 0.0);
    }

    fn c_at_inf() -> f64 {
        EuclideanCauchy::new(theta(&[0.0], 1.0)).pdf(&ExtendedPoint::infinity(1)).unwrap()
    }

    #[test]
    fn sphere_examples() {
        let u = SphericalCauchy::from_vector(Vector::zeros(2)).unwrap();
        assert_relative_eq!(u.pdf(&v(&[0.6, 0.8])).unwrap(), 1.0 / (2.0 * PI), max_relative = 1e-15);
        let s2 = SphericalCauchy::uniform(3).unwrap();
        assert_relative_eq!(s2.pdf(&v(&[0.0, 0.0, 1.0])).unwrap(), 1.0 / (4.0 * PI), max_relative = 1e-15);
        let s = SphericalCauchy::from_vector(v(&[0.5, 0.0])).unwrap();
        let r = SphericalCauchy::from_vector(v(&[2.0, 0.0])).unwrap();
        let mut rng = RngStream::new(1, 0);
        for y in sample_uniform_sphere(1, 20, &mut rng) {
            assert_relative_eq!(s.pdf(&y).unwrap(), r.pdf(&y).unwrap(), max_relative = 1e-13);
        }
        assert!(matches!(s.pdf(&v(&[1.0, 1.0])), Err(Error::Domain(_))));
        let pm = SphericalCauchy::from_vector(v(&[1.0, 0.0])).unwrap();
        assert_eq!(pm.pdf(&v(&[0.0, 1.0])), Err(Error::PointMass));
    }

    #[test]
    fn marginal_examples() {
        let m = MarginalCauchyBeta::new(0.0, 2.0).unwrap();
        for y in [-0.9, -0.2, 0.0, 0.5, 0.99] {
            assert_relative_eq!(m.pdf(y).unwrap(), 0.5, max_relative = 1e-14);
        }
        let a = MarginalCauchyBeta::new(0.4, 3.0).unwrap();
        let b = MarginalCauchyBeta::new(2.5, 3.0).unwrap();
        for k in 0..20 {
            let y = -0.95 + 0.1 * k as f64;
            assert_relative_eq!(a.pdf(y).unwrap(), b.pdf(y).unwrap(), max_relative = 1e-13);
        }
        assert!(matches!(a.pdf(1.0), Err(Error::Domain(_))));
        assert!(MarginalCauchyBeta::new(1.0, 2.0).is_err());
        assert!(MarginalCauchyBeta::new(0.5, 0.0).is_err());
    }

    #[test]
    fn pushforward_param_examples() {
        assert_eq!(marginal_pushforward_param(0.3, 0.0).unwrap(), 0.3);
        assert_abs_diff_eq!(marginal_pushforward_param(0.5, -0.8).unwrap(), 0.0, epsilon = 1e-15);
        assert!(marginal_pushforward_param(0.5, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn marginal_change_of_variables(p in -0.95f64..0.95, b in -0.95f64..0.95, y in -0.99f64..0.99, nu in 0.5f64..6.0) {
            let f = MarginalCauchyBeta::new(p, nu).unwrap();
            let g = MarginalCauchyBeta::new(marginal_pushforward_param(p, b).unwrap(), nu).unwrap();
            let jac = (1.0 - b * b) / ((b * y + 1.0) * (b * y + 1.0));
            let lhs = g.pdf(real_moebius(b, y)).unwrap() * jac;
            let rhs = f.pdf(y).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
        }
    }

    #[test]
    fn kent_identity_is_uniform() {
        let mut rng = RngStream::new(2, 0);
        for d in 1..4 {
            let k = KentTypeCauchy::new(Vector::zeros(d), Matrix::identity(d, d)).unwrap();
            let c = exp(ln_sphere_const(d));
            for y in sample_uniform_sphere(d, 20, &mut rng) {
                assert_relative_eq!(k.pdf(&y).unwrap(), c, max_relative = 1e-12);
            }
            assert!(k.mode_antimode().degenerate);
        }
    }

    #[test]
    fn kent_forms_agree() {
        let mut rng = RngStream::new(3, 0);
        let l = Matrix::from_row_slice(2, 2, &[0.4, 0.3, -0.1, 0.7]);
        let k = KentTypeCauchy::new(v(&[0.2, -0.5]), l).unwrap();
        assert_abs_diff_eq!(k.t_matrix().trace(), 0.0, epsilon = 1e-12);
        for y in sample_uniform_sphere(2, 50, &mut rng) {
            assert_relative_eq!(k.pdf(&y).unwrap(), k.pdf_trace_form(&y).unwrap(), max_relative = 1e-12);
        }
        assert_eq!(k.pdf(&v(&[0.0, 0.0, 1.0])), Err(Error::Singular));
        assert!(KentTypeCauchy::new(Vector::zeros(2), Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn kent_scalar_l_is_spherical_cauchy() {
        let mut rng = RngStream::new(4, 0);
        for (mu, s) in [(alloc::vec![0.0, 0.0], 0.5), (alloc::vec![0.4, -1.1], 1.7)] {
            let k = KentTypeCauchy::new(v(&mu), Matrix::identity(2, 2) * s).unwrap();
            let phi = inv_stereographic_ext(&theta(&mu, s));
            let sc = SphericalCauchy::new(phi).unwrap();
            for y in sample_uniform_sphere(2, 30, &mut rng) {
                assert_relative_eq!(k.pdf(&y).unwrap(), sc.pdf(&y).unwrap(), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn kent_extrema_bound_density() {
        let mut rng = RngStream::new(5, 0);
        let k = KentTypeCauchy::new(v(&[0.4, -0.3]), Matrix::from_diagonal(&v(&[0.3, 0.5]))).unwrap();
        let ex = k.mode_antimode();
        assert!(!ex.degenerate);
        assert_relative_eq!(k.pdf(&ex.mode).unwrap(), ex.fmax, max_relative = 1e-10);
        assert_relative_eq!(k.pdf(&ex.antimode).unwrap(), ex.fmin, max_relative = 1e-10);
        for y in sample_uniform_sphere(2, 1000, &mut rng) {
            let f = k.pdf(&y).unwrap();
            assert!(f <= ex.fmax * (1.0 + 1e-12) && f >= ex.fmin * (1.0 - 1e-12));
        }
    }

    #[test]
    fn d2_chart_forms_agree() {
        let l = Matrix::from_diagonal(&v(&[0.3, 0.5]));
        let k = KentTypeCauchy::new(Vector::zeros(2), l).unwrap();
        let c = KentD2::from_kent(&k).unwrap();
        assert_relative_eq!(c.constant(), 1.0 / (4.0 * PI * 0.15), max_relative = 1e-14);
        for i in 0..12 {
            for j in 0..12 {
                let xi1 = PI * i as f64 / 11.0;
                let xi2 = -PI + 2.0 * PI * j as f64 / 12.0;
                let p = c.pdf_polar(xi1, xi2).unwrap();
                assert_relative_eq!(p, c.pdf_polar_harmonic(xi1, xi2).unwrap(), max_relative = 1e-12);
                let vv = 2.0 * (xi1 / 2.0).sin();
                assert_relative_eq!(p, c.pdf_lambert(vv * xi2.cos(), vv * xi2.sin()).unwrap(), max_relative = 1e-12);
                if i < 11 {
                    assert_relative_eq!(p, k.pdf(&polar_to_sphere(xi1, xi2)).unwrap(), max_relative = 1e-10);
                }
            }
        }
        for xi2 in [-3.0, 0.0, 1.0] {
            assert_relative_eq!(c.pdf_polar(0.0, xi2).unwrap(), c.constant(), max_relative = 1e-15);
        }
        assert!(c.pdf_lambert(2.0, 0.5).is_err());
        assert!(c.pdf_polar(-0.1, 0.0).is_err());
    }

    #[test]
    fn pushforward_dispatch() {
        let t = FamilyParam::Euclidean(theta(&[0.5], 2.0));
        let id = Transform::Euclidean(MoebiusChain::single(MoebiusMap::identity(1)));
        assert_eq!(pushforward_params(&id, &t).unwrap(), t);
        let mut rng = RngStream::new(6, 0);
        let r = random_rotation_with(3, &mut rng);
        let psi = v(&[0.2, 0.3, -0.1]);
        let s = SphereMoebius::new(r.clone(), psi.clone()).unwrap();
        let out = pushforward_params(&Transform::Sphere(s), &FamilyParam::Sphere(ExtendedPoint::origin(3))).unwrap();
        let FamilyParam::Sphere(ExtendedPoint::Finite(p)) = out else { panic!() };
        assert_abs_diff_eq!(p, r.matrix() * psi, epsilon = 1e-15);
        assert_eq!(pushforward_params(&Transform::Stereographic, &t), Err(Error::KindMismatch));
        let back = pushforward_params(
            &Transform::Stereographic,
            &pushforward_params(&Transform::InverseStereographic, &t).unwrap(),
        )
        .unwrap();
        let FamilyParam::Euclidean(b) = back else { panic!() };
        assert!((b.as_finite().unwrap().lift() - v(&[0.5, 2.0])).norm() < 1e-12);
    }

    #[test]
    fn conjugate_parameter_reflects_in_sphere() {
        let a = inv_stereographic_ext(&theta(&[0.3, -0.4], 0.8)).into_finite().unwrap();
        let lifted = ExtendedPoint::Finite(v(&[0.3, -0.4, -0.8]));
        let b = crate::moebius::inv_stereographic_lifted(&lifted).into_finite().unwrap();
        assert!((&a / a.norm_squared() - b).norm() < 1e-14);
    }
}
