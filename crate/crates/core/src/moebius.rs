//! Möbius maps on `R̄^d`, their action on extended complex parameters, the
//! subgroup preserving the unit sphere, and stereographic transport.

use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    check_orthogonal, reflection_matrix, ExtendedComplexParam, ExtendedPoint, Rotation,
    ORTHOGONALITY_TOL,
};
use crate::math::{abs, sqrt};
use crate::{Matrix, Vector};

/// Exponent of `‖x + a‖` in the map: `0` (similarity) or `2` (with inversion).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Zero,
    Two,
}

impl Exponent {
    pub fn from_value(e: u8) -> Result<Self> {
        match e {
            0 => Ok(Self::Zero),
            2 => Ok(Self::Two),
            _ => Err(Error::InvalidParameter(format!("epsilon must be 0 or 2, got {e}"))),
        }
    }

    pub fn value(self) -> u8 {
        match self {
            Self::Zero => 0,
            Self::Two => 2,
        }
    }
}

/// `g(x) = A(γ(x + a)/‖x + a‖^ε + b)`.
///
/// Conventions at the exceptional points: for `ε = 0`, `g(∞) = ∞`; for
/// `ε = 2`, `g(−a) = ∞` and `g(∞) = Ab`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusMap {
    orth: Matrix,
    gamma: f64,
    a: Vector,
    b: Vector,
    epsilon: Exponent,
}

impl MoebiusMap {
    pub fn new(orth: Matrix, gamma: f64, a: Vector, b: Vector, epsilon: Exponent) -> Result<Self> {
        check_orthogonal(&orth)?;
        let d = orth.nrows();
        check_dim(d, a.len())?;
        check_dim(d, b.len())?;
        if !gamma.is_finite() || gamma == 0.0 {
            return Err(Error::InvalidParameter(format!("gamma must be finite and non-zero, got {gamma}")));
        }
        if a.iter().chain(b.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite shift".into()));
        }
        Ok(Self { orth, gamma, a, b, epsilon })
    }

    pub fn identity(d: usize) -> Self {
        Self::similarity(Matrix::identity(d, d), 1.0, Vector::zeros(d), Vector::zeros(d))
    }

    pub fn translation(a: Vector) -> Self {
        let d = a.len();
        Self::similarity(Matrix::identity(d, d), 1.0, a, Vector::zeros(d))
    }

    pub fn scaling(d: usize, gamma: f64) -> Result<Self> {
        Self::new(Matrix::identity(d, d), gamma, Vector::zeros(d), Vector::zeros(d), Exponent::Zero)
    }

    pub fn orthogonal(orth: Matrix) -> Result<Self> {
        let d = orth.nrows();
        Self::new(orth, 1.0, Vector::zeros(d), Vector::zeros(d), Exponent::Zero)
    }

    /// `x ↦ x/‖x‖²`.
    pub fn inversion(d: usize) -> Self {
        Self {
            orth: Matrix::identity(d, d),
            gamma: 1.0,
            a: Vector::zeros(d),
            b: Vector::zeros(d),
            epsilon: Exponent::Two,
        }
    }

    fn similarity(orth: Matrix, gamma: f64, a: Vector, b: Vector) -> Self {
        Self { orth, gamma, a, b, epsilon: Exponent::Zero }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn orth(&self) -> &Matrix {
        &self.orth
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a(&self) -> &Vector {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn epsilon(&self) -> Exponent {
        self.epsilon
    }

    /// Applies the map to a point whose first `d` coordinates carry `a`, `b`
    /// and `A`; trailing coordinates only see the scalar part.
    fn act(&self, x: &ExtendedPoint) -> ExtendedPoint {
        let d = self.dim();
        let n = x.dim();
        let pad = |v: &Vector| {
            let mut out = Vector::zeros(n);
            out.rows_mut(0, d).copy_from(v);
            out
        };
        let rotate = |mut v: Vector| {
            let head = &self.orth * v.rows(0, d);
            v.rows_mut(0, d).copy_from(&head);
            v
        };
        match (self.epsilon, x) {
            (Exponent::Zero, ExtendedPoint::Infinity { .. }) => x.clone(),
            (Exponent::Two, ExtendedPoint::Infinity { .. }) => ExtendedPoint::Finite(rotate(pad(&self.b))),
            (eps, ExtendedPoint::Finite(v)) => {
                let w = v + pad(&self.a);
                let scaled = match eps {
                    Exponent::Zero => w * self.gamma,
                    Exponent::Two => {
                        let n2 = w.norm_squared();
                        if n2 == 0.0 {
                            return ExtendedPoint::infinity(n);
                        }
                        w * (self.gamma / n2)
                    }
                };
                ExtendedPoint::Finite(rotate(scaled + pad(&self.b)))
            }
        }
    }

    pub fn apply(&self, x: &ExtendedPoint) -> Result<ExtendedPoint> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.act(x))
    }

    /// Action on `θ = μ + iσ`: the same map on `(μ, σ) ∈ R̄^{d+1}` with
    /// orthogonal part `diag(A, 1)` and shifts `(a, 0)`, `(b, 0)`.
    pub fn apply_param(&self, theta: &ExtendedComplexParam) -> Result<ExtendedComplexParam> {
        check_dim(self.dim(), theta.dim())?;
        ExtendedComplexParam::from_lifted(&self.act(&theta.lift()))
    }

    /// The inverse, in closed form.
    pub fn inverse(&self) -> Self {
        let at = self.orth.transpose();
        let ab = &self.orth * &self.b;
        let aa = &self.orth * &self.a;
        let gamma = match self.epsilon {
            Exponent::Zero => 1.0 / self.gamma,
            Exponent::Two => self.gamma,
        };
        Self { orth: at, gamma, a: -ab, b: -aa, epsilon: self.epsilon }
    }

    /// Scalar `c` with `Dg(x) = c·Q`, `Q` orthogonal; `None` at `x = −a`.
    pub fn conformal_factor(&self, x: &Vector) -> Option<f64> {
        match self.epsilon {
            Exponent::Zero => Some(abs(self.gamma)),
            Exponent::Two => {
                let n2 = (x + &self.a).norm_squared();
                (n2 > 0.0).then(|| abs(self.gamma) / n2)
            }
        }
    }
}

/// A composition `maps[0] ∘ maps[1] ∘ … ∘ maps[k−1]` (the last map acts first).
#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusChain {
    maps: Vec<MoebiusMap>,
}

impl MoebiusChain {
    pub fn new(maps: Vec<MoebiusMap>) -> Result<Self> {
        let first = maps.first().ok_or(Error::Empty)?;
        let d = first.dim();
        for m in &maps {
            check_dim(d, m.dim())?;
        }
        Ok(Self { maps })
    }

    pub fn single(map: MoebiusMap) -> Self {
        Self { maps: vec![map] }
    }

    pub fn identity(d: usize) -> Self {
        Self::single(MoebiusMap::identity(d))
    }

    pub fn maps(&self) -> &[MoebiusMap] {
        &self.maps
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn apply(&self, x: &ExtendedPoint) -> Result<ExtendedPoint> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.maps.iter().rev().fold(x.clone(), |p, m| m.act(&p)))
    }

    pub fn apply_param(&self, theta: &ExtendedComplexParam) -> Result<ExtendedComplexParam> {
        self.maps.iter().rev().try_fold(theta.clone(), |t, m| m.apply_param(&t))
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        check_dim(outer.dim(), inner.dim())?;
        let mut maps = outer.maps.clone();
        maps.extend(inner.maps.iter().cloned());
        Ok(Self { maps })
    }

    pub fn inverse(&self) -> Self {
        Self { maps: self.maps.iter().map(MoebiusMap::inverse).collect() }
            .reversed()
    }

    fn reversed(mut self) -> Self {
        self.maps.reverse();
        self
    }

    /// Product of the conformal factors along the chain; `None` if some
    /// intermediate point is exceptional.
    pub fn conformal_factor(&self, x: &Vector) -> Option<f64> {
        let mut p = x.clone();
        let mut c = 1.0;
        for m in self.maps.iter().rev() {
            c *= m.conformal_factor(&p)?;
            p = m.act(&ExtendedPoint::Finite(p)).into_finite()?;
        }
        Some(c)
    }
}

/// Guard around `‖φ‖ = 1`, where the sphere map degenerates.
pub const UNIT_NORM_GUARD: f64 = 1e-12;

/// `g(x) = R{(1 − ‖φ‖²)(x̃ + φ)/‖x̃ + φ‖² + φ}` with `x̃ = x/‖x‖²`, acting on
/// `R̄^{d+1}` and mapping `S^d` onto itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMoebius {
    rotation: Rotation,
    phi: Vector,
}

impl SphereMoebius {
    pub fn new(rotation: Rotation, phi: Vector) -> Result<Self> {
        check_dim(rotation.dim(), phi.len())?;
        if rotation.dim() < 2 {
            return Err(Error::InvalidParameter("sphere maps need ambient dimension >= 2".into()));
        }
        if phi.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite phi".into()));
        }
        if abs(phi.norm() - 1.0) <= UNIT_NORM_GUARD {
            return Err(Error::InvalidParameter("‖phi‖ must differ from 1".into()));
        }
        Ok(Self { rotation, phi })
    }

    /// Builds the map from the parameter of the reflected form,
    /// `φ̃ = φ/‖φ‖²`.
    pub fn from_inversion_parameter(rotation: Rotation, phi_tilde: &Vector) -> Result<Self> {
        let n2 = phi_tilde.norm_squared();
        if n2 == 0.0 {
            return Err(Error::DegenerateComposition);
        }
        Self::new(rotation, phi_tilde / n2)
    }

    pub fn identity(n: usize) -> Self {
        Self { rotation: Rotation::identity(n), phi: Vector::zeros(n) }
    }

    /// Ambient dimension `d + 1`.
    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn phi(&self) -> &Vector {
        &self.phi
    }

    /// `φ̃ = φ/‖φ‖²`; `None` when `φ = 0`.
    pub fn inversion_parameter(&self) -> Option<Vector> {
        let n2 = self.phi.norm_squared();
        (n2 > 0.0).then(|| &self.phi / n2)
    }

    pub fn apply(&self, x: &ExtendedPoint) -> Result<ExtendedPoint> {
        check_dim(self.dim(), x.dim())?;
        let r = self.rotation.matrix();
        let n = self.dim();
        let p2 = self.phi.norm_squared();
        if p2 == 0.0 {
            return Ok(match x {
                ExtendedPoint::Finite(v) => ExtendedPoint::Finite(r * v),
                ExtendedPoint::Infinity { .. } => x.clone(),
            });
        }
        let xt = match x {
            ExtendedPoint::Infinity { .. } => Vector::zeros(n),
            ExtendedPoint::Finite(v) => {
                let n2 = v.norm_squared();
                if n2 == 0.0 {
                    return Ok(ExtendedPoint::Finite(r * &self.phi));
                }
                v / n2
            }
        };
        let scale = xt.norm() + self.phi.norm();
        let w = xt + &self.phi;
        let w2 = w.norm_squared();
        if w.norm() <= 4.0 * f64::EPSILON * scale {
            return Ok(ExtendedPoint::infinity(n));
        }
        Ok(ExtendedPoint::Finite(r * (w * ((1.0 - p2) / w2) + &self.phi)))
    }

    /// Applies the equivalent reflected form
    /// `R T_φ{(1 − ‖φ̃‖²)(x + φ̃)/‖x + φ̃‖² + φ̃}` to a finite point.
    pub fn apply_reflected(&self, x: &Vector) -> Result<ExtendedPoint> {
        check_dim(self.dim(), x.len())?;
        let Some(pt) = self.inversion_parameter() else {
            return Ok(ExtendedPoint::Finite(self.rotation.matrix() * x));
        };
        match reflected_core(&pt, x) {
            Some(v) => Ok(ExtendedPoint::Finite(self.rotation.matrix() * v)),
            None => Ok(ExtendedPoint::infinity(self.dim())),
        }
    }

    /// The composition `self ∘ inner` in closed form.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        check_dim(self.dim(), inner.dim())?;
        let (r2, r1) = (self.rotation.matrix(), inner.rotation.matrix());
        let r21 = nearest_rotation(r2 * r1)?;
        let (pt2, pt1) = match (self.inversion_parameter(), inner.inversion_parameter()) {
            (None, _) => return Self::new(r21, inner.phi.clone()),
            (Some(_), None) => return Self::new(r21, r1.transpose() * &self.phi),
            (Some(p2), Some(p1)) => (p2, p1),
        };
        let x = r1.transpose() * &pt2;
        let v = &x + &pt1;
        let scale = pt1.norm().max(x.norm()).max(1.0);
        if v.norm() < 1e-9 * scale {
            return Self::new(r21, Vector::zeros(self.dim()));
        }
        let beta = reflection_matrix(&pt1)? * &v / v.norm_squared();
        let pchk = reflected_core(&pt1, &x).ok_or(Error::DegenerateComposition)?;
        if pchk.norm_squared() == 0.0 || pchk.norm() < 1e-14 * scale {
            return Err(Error::DegenerateComposition);
        }
        let r = r2
            * reflection_matrix(&self.phi)?
            * r1
            * reflection_matrix(&inner.phi)?
            * reflection_matrix(&beta)?
            * reflection_matrix(&pchk)?;
        Self::from_inversion_parameter(nearest_rotation(r)?, &pchk)
    }

    /// `(R, φ)⁻¹ = (Rᵀ, −Rφ)`.
    pub fn inverse(&self) -> Self {
        Self {
            rotation: self.rotation.transpose(),
            phi: -(self.rotation.matrix() * &self.phi),
        }
    }
}

/// `T_p{(1 − ‖p‖²)(x + p)/‖x + p‖² + p}`; `None` at `x = −p`.
fn reflected_core(p: &Vector, x: &Vector) -> Option<Vector> {
    let w = x + p;
    let w2 = w.norm_squared();
    if w2 == 0.0 {
        return None;
    }
    let inner = w * ((1.0 - p.norm_squared()) / w2) + p;
    let p2 = p.norm_squared();
    Some(p * (2.0 * p.dot(&inner) / p2) - inner)
}

/// Cleans rounding drift off a product of orthogonal factors with one
/// Newton–Schulz step, then validates.
fn nearest_rotation(m: Matrix) -> Result<Rotation> {
    let n = m.nrows();
    let dev = (&m * m.transpose() - Matrix::identity(n, n)).amax();
    if dev > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "composed matrix drifted from orthogonality by {dev:.3e}"
        )));
    }
    let fixed = if dev > ORTHOGONALITY_TOL / 4.0 {
        (&m * 3.0 - &m * m.transpose() * &m) * 0.5
    } else {
        m
    };
    Rotation::new(fixed)
}

fn last_axis(n: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[n - 1] = 1.0;
    e
}

/// Inverse stereographic projection `R̄^d → S^d`:
/// `x ↦ (2x, ‖x‖² − 1)/(‖x‖² + 1)`, `∞ ↦ e_{d+1}`.
pub fn inv_stereographic(x: &ExtendedPoint) -> Vector {
    match x {
        ExtendedPoint::Infinity { dim } => last_axis(dim + 1),
        ExtendedPoint::Finite(v) => {
            let d = v.len();
            let n2 = v.norm_squared();
            let mut y = Vector::zeros(d + 1);
            if n2.is_infinite() {
                y[d] = 1.0;
                return y;
            }
            let s = 1.0 / (n2 + 1.0);
            y.rows_mut(0, d).copy_from(&(v * (2.0 * s)));
            y[d] = (n2 - 1.0) * s;
            y
        }
    }
}

/// Stereographic projection `S^d → R̄^d`, `x = y_{1:d}/(1 − y_{d+1})`, with
/// `e_{d+1} ↦ ∞`. The input is not checked for unit norm.
pub fn stereographic_point(y: &Vector) -> Result<ExtendedPoint> {
    if y.len() < 2 {
        return Err(Error::InvalidParameter("sphere points need at least two coordinates".into()));
    }
    let d = y.len() - 1;
    let den = 1.0 - y[d];
    if den <= 0.0 {
        return Ok(ExtendedPoint::infinity(d));
    }
    Ok(ExtendedPoint::Finite(y.rows(0, d) / den))
}

/// Extension of [`inv_stereographic`] to parameters:
/// `θ ↦ (2/‖θ + i‖²)(μ, (‖θ‖² − 1)/2)`, with `−i ↦ ∞` and `∞ ↦ e_{d+1}`.
pub fn inv_stereographic_ext(theta: &ExtendedComplexParam) -> ExtendedPoint {
    inv_stereographic_lifted(&theta.lift())
}

/// The map above on all of `R̄^{d+1}`, reading the last coordinate as a
/// signed `σ`.
pub fn inv_stereographic_lifted(p: &ExtendedPoint) -> ExtendedPoint {
    let n = p.dim();
    match p {
        ExtendedPoint::Infinity { .. } => ExtendedPoint::Finite(last_axis(n)),
        ExtendedPoint::Finite(v) => {
            let d = n - 1;
            let mu = v.rows(0, d);
            let sigma = v[d];
            let mu2 = mu.norm_squared();
            let den = mu2 + (sigma + 1.0) * (sigma + 1.0);
            if den == 0.0 {
                return ExtendedPoint::infinity(n);
            }
            let mut y = Vector::zeros(n);
            y.rows_mut(0, d).copy_from(&(mu * (2.0 / den)));
            y[d] = (mu2 + sigma * sigma - 1.0) / den;
            ExtendedPoint::Finite(y)
        }
    }
}

/// Exact inverse of [`inv_stereographic_lifted`]: `y ↦ 2w/‖w‖² − e` with
/// `w = (y_{1:d}, 1 − y_{d+1})`.
pub fn stereographic_lifted(y: &ExtendedPoint) -> ExtendedPoint {
    let n = y.dim();
    match y {
        ExtendedPoint::Infinity { .. } => {
            let mut v = Vector::zeros(n);
            v[n - 1] = -1.0;
            ExtendedPoint::Finite(v)
        }
        ExtendedPoint::Finite(v) => {
            let mut w = v.clone();
            w[n - 1] = 1.0 - v[n - 1];
            let w2 = w.norm_squared();
            if w2 == 0.0 {
                return ExtendedPoint::infinity(n);
            }
            let mut out = w * (2.0 / w2);
            out[n - 1] -= 1.0;
            ExtendedPoint::Finite(out)
        }
    }
}

/// Inverse of [`inv_stereographic_ext`] with `σ` canonicalized to `σ >= 0`.
pub fn stereographic(y: &ExtendedPoint) -> Result<ExtendedComplexParam> {
    ExtendedComplexParam::from_lifted(&stereographic_lifted(y))
}

/// [`inv_stereographic_lifted`] written as a single Möbius map
/// `x ↦ F(2(x + e)/‖x + e‖² − e)`, `F` flipping the last coordinate.
pub fn stereographic_moebius(n: usize) -> MoebiusMap {
    let e = last_axis(n);
    let mut flip = Matrix::identity(n, n);
    flip[(n - 1, n - 1)] = -1.0;
    MoebiusMap {
        orth: flip,
        gamma: 2.0,
        a: e.clone(),
        b: -e,
        epsilon: Exponent::Two,
    }
}

/// Unit vector check shared by the sphere densities.
pub(crate) fn check_unit(y: &Vector, tol: f64) -> Result<()> {
    let n = y.norm();
    if abs(n - 1.0) > tol {
        return Err(Error::Domain(format!("point is not on the unit sphere (‖y‖ = {n})")));
    }
    Ok(())
}

/// `‖x‖` treating `∞` as infinite.
pub fn extended_norm(x: &ExtendedPoint) -> f64 {
    x.as_finite().map_or(f64::INFINITY, |v| sqrt(v.norm_squared()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{random_orthogonal, random_rotation_with};
    use crate::sampling::RngStream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn fin(xs: &[f64]) -> ExtendedPoint {
        ExtendedPoint::from_slice(xs).unwrap()
    }

    fn normal_vec(rng: &mut RngStream, n: usize) -> Vector {
        Vector::from_fn(n, |_, _| rng.standard_normal())
    }

    fn random_map(rng: &mut RngStream, d: usize) -> MoebiusMap {
        let eps = if rng.uniform() < 0.5 { Exponent::Zero } else { Exponent::Two };
        let gamma = (0.5 + 1.5 * rng.uniform()) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        MoebiusMap::new(random_orthogonal(d, rng), gamma, normal_vec(rng, d), normal_vec(rng, d), eps)
            .unwrap()
    }

    fn random_sphere_map(rng: &mut RngStream, n: usize) -> SphereMoebius {
        let dir = normal_vec(rng, n).normalize();
        let r = if rng.uniform() < 0.5 { 0.05 + 0.8 * rng.uniform() } else { 1.2 + 2.0 * rng.uniform() };
        SphereMoebius::new(random_rotation_with(n, rng), dir * r).unwrap()
    }

    fn close(a: &ExtendedPoint, b: &ExtendedPoint, tol: f64) -> bool {
        match (a, b) {
            (ExtendedPoint::Finite(x), ExtendedPoint::Finite(y)) => (x - y).norm() <= tol * (1.0 + x.norm()),
            (ExtendedPoint::Infinity { dim: p }, ExtendedPoint::Infinity { dim: q }) => p == q,
            _ => false,
        }
    }

    #[test]
    fn apply_examples() {
        let id = MoebiusMap::identity(2);
        assert_eq!(id.apply(&fin(&[1.0, 2.0])).unwrap(), fin(&[1.0, 2.0]));
        let inv = MoebiusMap::inversion(2);
        let y = inv.apply(&fin(&[3.0, 4.0])).unwrap().into_finite().unwrap();
        assert_abs_diff_eq!(y, v(&[0.12, 0.16]), epsilon = 1e-15);
        let a = v(&[1.0, -2.0]);
        let m = MoebiusMap::new(Matrix::identity(2, 2), 1.0, -&a, Vector::zeros(2), Exponent::Two).unwrap();
        assert!(m.apply(&ExtendedPoint::Finite(a)).unwrap().is_infinity());
    }

    #[test]
    fn infinity_conventions() {
        let mut rng = RngStream::new(3, 0);
        let m = random_map(&mut rng, 3);
        let img = m.apply(&ExtendedPoint::infinity(3)).unwrap();
        match m.epsilon() {
            Exponent::Zero => assert!(img.is_infinity()),
            Exponent::Two => assert_abs_diff_eq!(img.into_finite().unwrap(), m.orth() * m.b(), epsilon = 1e-15),
        }
        let sim = MoebiusMap::new(m.orth().clone(), 2.0, m.a().clone(), m.b().clone(), Exponent::Zero).unwrap();
        let at = sim.apply(&ExtendedPoint::Finite(-m.a())).unwrap().into_finite().unwrap();
        assert_abs_diff_eq!(at, m.orth() * m.b(), epsilon = 1e-14);
    }

    #[test]
    fn infinity_image_is_continuous_limit() {
        let mut rng = RngStream::new(11, 0);
        for _ in 0..10 {
            let mut m = random_map(&mut rng, 2);
            m.epsilon = Exponent::Two;
            let far = normal_vec(&mut rng, 2).normalize() * 1e9;
            let near = m.apply(&ExtendedPoint::Finite(far)).unwrap().into_finite().unwrap();
            let at = m.apply(&ExtendedPoint::infinity(2)).unwrap().into_finite().unwrap();
            assert!((near - at).norm() < 1e-8);
        }
    }

    #[test]
    fn param_action_examples() {
        let theta = ExtendedComplexParam::new(v(&[1.0, 0.0]), 1.0).unwrap();
        assert_eq!(MoebiusMap::identity(2).apply_param(&theta).unwrap(), theta);
        let theta = ExtendedComplexParam::new(v(&[0.0, 0.0]), 2.0).unwrap();
        let out = MoebiusMap::inversion(2).apply_param(&theta).unwrap();
        let p = out.as_finite().unwrap();
        assert_abs_diff_eq!(p.mu().norm(), 0.0);
        assert_abs_diff_eq!(p.sigma(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn real_params_follow_points() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..50 {
            let d = 1 + (rng.next_u64() % 3) as usize;
            let m = random_map(&mut rng, d);
            let x = normal_vec(&mut rng, d);
            let p = m.apply(&ExtendedPoint::Finite(x.clone())).unwrap();
            let t = m.apply_param(&ExtendedComplexParam::real(x).unwrap()).unwrap();
            let tp = t.as_finite().unwrap();
            assert_eq!(tp.sigma(), 0.0);
            assert_abs_diff_eq!(tp.mu().clone(), p.into_finite().unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn chain_composition_is_pointwise() {
        let mut rng = RngStream::new(8, 0);
        for _ in 0..30 {
            let d = 1 + (rng.next_u64() % 3) as usize;
            let c1 = MoebiusChain::new((0..3).map(|_| random_map(&mut rng, d)).collect()).unwrap();
            let c2 = MoebiusChain::new((0..2).map(|_| random_map(&mut rng, d)).collect()).unwrap();
            let both = MoebiusChain::compose(&c2, &c1).unwrap();
            let x = ExtendedPoint::Finite(normal_vec(&mut rng, d));
            let lhs = both.apply(&x).unwrap();
            let rhs = c2.apply(&c1.apply(&x).unwrap()).unwrap();
            assert!(close(&lhs, &rhs, 1e-10));
        }
        let inv = MoebiusChain::new(vec![MoebiusMap::inversion(2), MoebiusMap::inversion(2)]).unwrap();
        let x = fin(&[0.3, -0.7]);
        assert!(close(&inv.apply(&x).unwrap(), &x, 1e-15));
        assert!(MoebiusChain::new(vec![]).is_err());
        assert!(MoebiusChain::compose(&MoebiusChain::identity(2), &MoebiusChain::identity(3)).is_err());
    }

    #[test]
    fn inverse_round_trips() {
        let mut rng = RngStream::new(9, 0);
        for _ in 0..50 {
            let d = 1 + (rng.next_u64() % 3) as usize;
            let m = random_map(&mut rng, d);
            let x = ExtendedPoint::Finite(normal_vec(&mut rng, d));
            assert!(close(&m.inverse().apply(&m.apply(&x).unwrap()).unwrap(), &x, 1e-9));
            let c = MoebiusChain::new(vec![m.clone(), random_map(&mut rng, d)]).unwrap();
            assert!(close(&c.inverse().apply(&c.apply(&x).unwrap()).unwrap(), &x, 1e-9));
            let inf = ExtendedPoint::infinity(d);
            assert!(close(&m.inverse().apply(&m.apply(&inf).unwrap()).unwrap(), &inf, 0.0));
        }
    }

    #[test]
    fn sphere_map_examples() {
        let id = SphereMoebius::identity(3);
        let y = fin(&[0.0, 0.6, 0.8]);
        assert_eq!(id.apply(&y).unwrap(), y);
        let mut rng = RngStream::new(12, 0);
        let s = random_sphere_map(&mut rng, 3);
        let at0 = s.apply(&ExtendedPoint::origin(3)).unwrap().into_finite().unwrap();
        assert_abs_diff_eq!(at0, s.rotation().matrix() * s.phi(), epsilon = 1e-15);
        let pole = -s.phi() / s.phi().norm_squared();
        assert!(s.apply(&ExtendedPoint::Finite(pole)).unwrap().is_infinity());
        let atinf = s.apply(&ExtendedPoint::infinity(3)).unwrap().into_finite().unwrap();
        assert_abs_diff_eq!(atinf, s.rotation().matrix() * s.phi() / s.phi().norm_squared(), epsilon = 1e-14);
        assert!(SphereMoebius::new(Rotation::identity(2), v(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn sphere_map_preserves_sphere_and_ball() {
        let mut rng = RngStream::new(13, 0);
        for _ in 0..100 {
            let n = 2 + (rng.next_u64() % 3) as usize;
            let s = random_sphere_map(&mut rng, n);
            let y = normal_vec(&mut rng, n).normalize();
            let out = s.apply(&ExtendedPoint::Finite(y.clone())).unwrap().into_finite().unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-10);
            let refl = s.apply_reflected(&y).unwrap().into_finite().unwrap();
            assert!((refl - &out).norm() < 1e-10);
            if s.phi().norm() < 1.0 {
                let inside = y * 0.7;
                let o = s.apply(&ExtendedPoint::Finite(inside)).unwrap().into_finite().unwrap();
                assert!(o.norm() < 1.0);
            }
        }
    }

    #[test]
    fn lemma_composition_is_pointwise() {
        let mut rng = RngStream::new(14, 0);
        for k in 0..100 {
            let n = 2 + (rng.next_u64() % 3) as usize;
            let s1 = random_sphere_map(&mut rng, n);
            let s2 = if k % 10 == 0 {
                SphereMoebius::new(random_rotation_with(n, &mut rng), -(s1.rotation().matrix() * s1.phi())).unwrap()
            } else {
                random_sphere_map(&mut rng, n)
            };
            let c = s2.compose(&s1).unwrap();
            if k % 10 == 0 {
                assert_eq!(c.phi().norm(), 0.0);
            }
            for _ in 0..20 {
                let y = ExtendedPoint::Finite(normal_vec(&mut rng, n).normalize());
                let lhs = c.apply(&y).unwrap().into_finite().unwrap();
                let rhs = s2.apply(&s1.apply(&y).unwrap()).unwrap().into_finite().unwrap();
                assert!((lhs - rhs).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn compose_with_pure_rotations() {
        let mut rng = RngStream::new(15, 0);
        let s = random_sphere_map(&mut rng, 3);
        let rot = SphereMoebius::new(random_rotation_with(3, &mut rng), Vector::zeros(3)).unwrap();
        for (a, b) in [(&s, &rot), (&rot, &s)] {
            let c = a.compose(b).unwrap();
            let y = ExtendedPoint::Finite(normal_vec(&mut rng, 3).normalize());
            let lhs = c.apply(&y).unwrap().into_finite().unwrap();
            let rhs = a.apply(&b.apply(&y).unwrap()).unwrap().into_finite().unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
        let id = SphereMoebius::identity(3);
        assert_eq!(s.compose(&id).unwrap().phi(), s.phi());
    }

    #[test]
    fn sphere_inverse() {
        assert_eq!(SphereMoebius::identity(3).inverse(), SphereMoebius::identity(3));
        let mut rng = RngStream::new(16, 0);
        for _ in 0..50 {
            let s = random_sphere_map(&mut rng, 3);
            let y = ExtendedPoint::Finite(normal_vec(&mut rng, 3).normalize());
            let back = s.inverse().apply(&s.apply(&y).unwrap()).unwrap();
            assert!(close(&back, &y, 1e-10));
            let twice = s.inverse().inverse();
            assert!(close(&twice.apply(&y).unwrap(), &s.apply(&y).unwrap(), 1e-12));
        }
    }

    #[test]
    fn stereographic_examples() {
        assert_eq!(inv_stereographic(&ExtendedPoint::origin(2)), v(&[0.0, 0.0, -1.0]));
        let x = v(&[0.6, 0.8]);
        assert_abs_diff_eq!(inv_stereographic(&ExtendedPoint::Finite(x)), v(&[0.6, 0.8, 0.0]), epsilon = 1e-15);
        assert_eq!(inv_stereographic(&ExtendedPoint::infinity(2)), v(&[0.0, 0.0, 1.0]));

        let unit_i = ExtendedComplexParam::new(v(&[0.0, 0.0]), 1.0).unwrap();
        let p = inv_stereographic_ext(&unit_i).into_finite().unwrap();
        assert_abs_diff_eq!(p, Vector::zeros(3), epsilon = 1e-15);
        assert!(inv_stereographic_lifted(&fin(&[0.0, 0.0, -1.0])).is_infinity());
        assert_eq!(
            inv_stereographic_ext(&ExtendedComplexParam::infinity(2)),
            fin(&[0.0, 0.0, 1.0])
        );
        assert_eq!(stereographic(&fin(&[0.0, 0.0, 1.0])).unwrap(), ExtendedComplexParam::infinity(2));
        assert_eq!(
            stereographic(&fin(&[0.0, 0.0, -1.0])).unwrap(),
            ExtendedComplexParam::new(Vector::zeros(2), 0.0).unwrap()
        );
    }

    #[test]
    fn extension_reduces_on_real_axis() {
        let mut rng = RngStream::new(17, 0);
        for _ in 0..50 {
            let x = normal_vec(&mut rng, 2) * 3.0;
            let a = inv_stereographic(&ExtendedPoint::Finite(x.clone()));
            let b = inv_stereographic_ext(&ExtendedComplexParam::real(x).unwrap()).into_finite().unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn lifted_map_equals_moebius_form() {
        let mut rng = RngStream::new(18, 0);
        for n in 2..5 {
            let g = stereographic_moebius(n);
            for _ in 0..20 {
                let p = ExtendedPoint::Finite(normal_vec(&mut rng, n) * 2.0);
                assert!(close(&inv_stereographic_lifted(&p), &g.apply(&p).unwrap(), 1e-13));
            }
            let inf = ExtendedPoint::infinity(n);
            assert!(close(&inv_stereographic_lifted(&inf), &g.apply(&inf).unwrap(), 0.0));
            let mut south = Vector::zeros(n);
            south[n - 1] = -1.0;
            assert!(g.apply(&ExtendedPoint::Finite(south)).unwrap().is_infinity());
        }
    }

    #[test]
    fn stereographic_point_inverts() {
        let mut rng = RngStream::new(19, 0);
        for _ in 0..50 {
            let x = normal_vec(&mut rng, 3);
            let y = inv_stereographic(&ExtendedPoint::Finite(x.clone()));
            assert!((y.norm() - 1.0).abs() < 1e-15);
            let back = stereographic_point(&y).unwrap().into_finite().unwrap();
            assert!((back - x).norm() < 1e-12);
        }
        assert!(stereographic_point(&v(&[0.0, 1.0])).unwrap().is_infinity());
    }

    proptest! {
        #[test]
        fn lifted_round_trip(xs in proptest::collection::vec(-20f64..20.0, 2..5)) {
            let p = ExtendedPoint::from_slice(&xs).unwrap();
            let back = stereographic_lifted(&inv_stereographic_lifted(&p));
            prop_assert!(close(&back, &p, 1e-12));
        }

        #[test]
        fn canonical_round_trip(mu in proptest::collection::vec(-20f64..20.0, 1..4), s in 0f64..20.0) {
            let theta = ExtendedComplexParam::new(v(&mu), s).unwrap();
            let back = stereographic(&inv_stereographic_ext(&theta)).unwrap();
            let (a, b) = (back.as_finite().unwrap(), theta.as_finite().unwrap());
            prop_assert!((a.lift() - b.lift()).norm() <= 1e-12 * (1.0 + b.norm()));
        }

        #[test]
        fn similarity_conformal_factor(g in 0.1f64..5.0, seed in 0u64..1000) {
            let mut rng = RngStream::new(seed, 0);
            let m = MoebiusMap::new(random_orthogonal(2, &mut rng), g, normal_vec(&mut rng, 2), normal_vec(&mut rng, 2), Exponent::Zero).unwrap();
            prop_assert_eq!(m.conformal_factor(&Vector::zeros(2)), Some(g));
        }
    }
}
