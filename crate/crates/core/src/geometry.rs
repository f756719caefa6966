//! Extended points, extended complex parameters and orthogonal matrices.

use alloc::format;

use crate::error::{check_dim, Error, Result};
use crate::math::{abs, sqrt};
use crate::sampling::RngStream;
use crate::{Matrix, Vector};

/// Orthogonality and determinant tolerance used when validating matrices.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// A point of the one-point compactification of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtendedPoint {
    Finite(Vector),
    Infinity { dim: usize },
}

impl ExtendedPoint {
    /// Checked constructor: `d >= 1` and every coordinate finite.
    pub fn finite(coords: Vector) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("a point needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "finite point has a non-finite coordinate".into(),
            ));
        }
        Ok(Self::Finite(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::finite(Vector::from_column_slice(coords))
    }

    pub fn infinity(dim: usize) -> Self {
        Self::Infinity { dim }
    }

    pub fn origin(dim: usize) -> Self {
        Self::Finite(Vector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Finite(v) => v.len(),
            Self::Infinity { dim } => *dim,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Self::Infinity { .. })
    }

    pub fn as_finite(&self) -> Option<&Vector> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinity { .. } => None,
        }
    }

    pub fn into_finite(self) -> Option<Vector> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinity { .. } => None,
        }
    }
}

/// Sphere inversion `x ↦ x/‖x‖²`, with `0 ↔ ∞`.
pub fn invert_point(x: &ExtendedPoint) -> ExtendedPoint {
    match x {
        ExtendedPoint::Infinity { dim } => ExtendedPoint::origin(*dim),
        ExtendedPoint::Finite(v) => {
            let n2 = v.norm_squared();
            if n2 == 0.0 {
                ExtendedPoint::infinity(v.len())
            } else {
                ExtendedPoint::Finite(v / n2)
            }
        }
    }
}

/// A finite parameter `θ = μ + iσ` stored with `σ >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexParam {
    mu: Vector,
    sigma: f64,
}

impl ComplexParam {
    pub fn new(mu: Vector, sigma: f64) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidParameter("location needs at least one coordinate".into()));
        }
        if !sigma.is_finite() || mu.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite location or scale".into()));
        }
        Ok(Self { mu, sigma: abs(sigma) })
    }

    pub fn mu(&self) -> &Vector {
        &self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `‖θ‖ = (‖μ‖² + σ²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        sqrt(self.mu.norm_squared() + self.sigma * self.sigma)
    }

    /// `(μ, σ)` as a vector of length `d + 1`.
    pub fn lift(&self) -> Vector {
        let d = self.dim();
        let mut v = Vector::zeros(d + 1);
        v.rows_mut(0, d).copy_from(&self.mu);
        v[d] = self.sigma;
        v
    }
}

/// `θ ∈ (R^d + iR) ∪ {∞}` in canonical form.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtendedComplexParam {
    Finite(ComplexParam),
    Infinity { dim: usize },
}

impl ExtendedComplexParam {
    pub fn new(mu: Vector, sigma: f64) -> Result<Self> {
        ComplexParam::new(mu, sigma).map(Self::Finite)
    }

    /// A real parameter (`σ = 0`).
    pub fn real(mu: Vector) -> Result<Self> {
        Self::new(mu, 0.0)
    }

    pub fn infinity(dim: usize) -> Self {
        Self::Infinity { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Finite(p) => p.dim(),
            Self::Infinity { dim } => *dim,
        }
    }

    pub fn as_finite(&self) -> Option<&ComplexParam> {
        match self {
            Self::Finite(p) => Some(p),
            Self::Infinity { .. } => None,
        }
    }

    /// `+∞` for the point at infinity.
    pub fn norm(&self) -> f64 {
        match self {
            Self::Finite(p) => p.norm(),
            Self::Infinity { .. } => f64::INFINITY,
        }
    }

    /// The point `(μ, σ)` of `R̄^{d+1}`.
    pub fn lift(&self) -> ExtendedPoint {
        match self {
            Self::Finite(p) => ExtendedPoint::Finite(p.lift()),
            Self::Infinity { dim } => ExtendedPoint::infinity(dim + 1),
        }
    }

    /// Reads the last coordinate of a point of `R̄^{d+1}` as `σ` and
    /// canonicalizes its sign.
    pub fn from_lifted(p: &ExtendedPoint) -> Result<Self> {
        if p.dim() < 2 {
            return Err(Error::InvalidParameter(
                "a lifted parameter needs at least two coordinates".into(),
            ));
        }
        match p {
            ExtendedPoint::Infinity { dim } => Ok(Self::infinity(dim - 1)),
            ExtendedPoint::Finite(v) => {
                let d = v.len() - 1;
                Self::new(v.rows(0, d).into_owned(), v[d])
            }
        }
    }
}

/// Validates that `m` is square and orthogonal to [`ORTHOGONALITY_TOL`].
pub fn check_orthogonal(m: &Matrix) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidParameter(format!(
            "orthogonal matrix must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let dev = (m * m.transpose() - Matrix::identity(m.nrows(), m.ncols())).amax();
    if !(dev <= ORTHOGONALITY_TOL) {
        return Err(Error::InvalidParameter(format!(
            "matrix is not orthogonal (max |MMᵀ - I| = {dev:.3e})"
        )));
    }
    Ok(())
}

/// A proper rotation: orthogonal with determinant `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation(Matrix);

impl Rotation {
    pub fn new(m: Matrix) -> Result<Self> {
        check_orthogonal(&m)?;
        let det = m.determinant();
        if abs(det - 1.0) > ORTHOGONALITY_TOL {
            return Err(Error::InvalidParameter(format!(
                "rotation must have determinant +1, got {det}"
            )));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `self · other`, validated again so drift is caught early.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Self::new(&self.0 * &other.0)
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(&self.0 * x)
    }
}

/// The reflection `T_φ = 2φφᵀ/‖φ‖² − I`.
pub fn reflection_matrix(phi: &Vector) -> Result<Matrix> {
    let n2 = phi.norm_squared();
    if n2 == 0.0 {
        return Err(Error::Domain("reflection axis must be non-zero".into()));
    }
    let n = phi.len();
    Ok(phi * phi.transpose() * (2.0 / n2) - Matrix::identity(n, n))
}

/// `T_φ x`. Involutive and norm preserving.
pub fn reflect(phi: &Vector, x: &Vector) -> Result<Vector> {
    check_dim(phi.len(), x.len())?;
    let n2 = phi.norm_squared();
    if n2 == 0.0 {
        return Err(Error::Domain("reflection axis must be non-zero".into()));
    }
    Ok(phi * (2.0 * phi.dot(x) / n2) - x)
}

/// `A(γ(θ + a))` for a parameter `θ`, re-canonicalized. `A` acts on `μ` only.
pub fn ext_param_transform(
    theta: &ExtendedComplexParam,
    a: &Vector,
    gamma: f64,
    orth: &Matrix,
) -> Result<ExtendedComplexParam> {
    let d = theta.dim();
    check_dim(d, a.len())?;
    check_dim(d, orth.nrows())?;
    check_orthogonal(orth)?;
    match theta {
        ExtendedComplexParam::Infinity { .. } => Ok(theta.clone()),
        ExtendedComplexParam::Finite(p) => {
            let mu = orth * ((p.mu() + a) * gamma);
            ExtendedComplexParam::new(mu, gamma * p.sigma())
        }
    }
}

/// Haar-distributed element of `SO(d)`, deterministic in `seed`.
pub fn random_rotation(d: usize, seed: u64) -> Rotation {
    let mut rng = RngStream::new(seed, 0);
    random_rotation_with(d, &mut rng)
}

/// As [`random_rotation`], drawing from an existing stream.
pub fn random_rotation_with(d: usize, rng: &mut RngStream) -> Rotation {
    if d <= 1 {
        return Rotation::identity(d.max(1));
    }
    let g = Matrix::from_fn(d, d, |_, _| rng.standard_normal());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    Rotation(q)
}

/// Haar-distributed orthogonal matrix (either determinant sign).
pub fn random_orthogonal(d: usize, rng: &mut RngStream) -> Matrix {
    let mut q = random_rotation_with(d, rng).into_matrix();
    if rng.uniform() < 0.5 {
        q.column_mut(0).neg_mut();
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn invert_point_cases() {
        let x = ExtendedPoint::from_slice(&[3.0, 4.0]).unwrap();
        let y = invert_point(&x).into_finite().unwrap();
        assert_abs_diff_eq!(y, v(&[3.0 / 25.0, 4.0 / 25.0]), epsilon = 1e-15);
        assert_eq!(invert_point(&ExtendedPoint::origin(2)), ExtendedPoint::infinity(2));
        assert_eq!(invert_point(&ExtendedPoint::infinity(3)), ExtendedPoint::origin(3));
        let e1 = ExtendedPoint::from_slice(&[1.0, 0.0]).unwrap();
        assert_eq!(invert_point(&e1), e1);
    }

    #[test]
    fn finite_rejects_nan() {
        assert!(ExtendedPoint::from_slice(&[1.0, f64::NAN]).is_err());
        assert!(ExtendedPoint::from_slice(&[]).is_err());
    }

    #[test]
    fn reflect_cases() {
        let e1 = v(&[1.0, 0.0]);
        let e2 = v(&[0.0, 1.0]);
        assert_abs_diff_eq!(reflect(&e1, &e1).unwrap(), e1, epsilon = 1e-15);
        assert_abs_diff_eq!(reflect(&e1, &e2).unwrap(), -e2, epsilon = 1e-15);
        assert!(matches!(reflect(&v(&[0.0, 0.0]), &e1), Err(Error::Domain(_))));
        let t = reflection_matrix(&v(&[1.0, 2.0])).unwrap();
        assert_abs_diff_eq!(&t * &t, Matrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn ext_param_examples() {
        let theta = ExtendedComplexParam::new(v(&[0.0, 0.0]), 1.0).unwrap();
        let out = ext_param_transform(&theta, &v(&[1.0, 0.0]), 1.0, &Matrix::identity(2, 2)).unwrap();
        assert_eq!(out, ExtendedComplexParam::new(v(&[1.0, 0.0]), 1.0).unwrap());

        let theta = ExtendedComplexParam::new(v(&[1.0, 0.0]), 1.0).unwrap();
        let out = ext_param_transform(&theta, &v(&[0.0, 0.0]), -2.0, &Matrix::identity(2, 2)).unwrap();
        let p = out.as_finite().unwrap();
        assert_abs_diff_eq!(p.mu().clone(), v(&[-2.0, 0.0]));
        assert_eq!(p.sigma(), 2.0);
        assert_abs_diff_eq!(theta.norm(), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn sigma_is_canonical() {
        let a = ExtendedComplexParam::new(v(&[1.0]), -3.0).unwrap();
        let b = ExtendedComplexParam::new(v(&[1.0]), 3.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lift_round_trip() {
        let theta = ExtendedComplexParam::new(v(&[1.0, -2.0]), 0.5).unwrap();
        assert_eq!(ExtendedComplexParam::from_lifted(&theta.lift()).unwrap(), theta);
        let inf = ExtendedComplexParam::infinity(2);
        assert_eq!(inf.lift().dim(), 3);
        assert_eq!(ExtendedComplexParam::from_lifted(&inf.lift()).unwrap(), inf);
    }

    #[test]
    fn rotation_validation() {
        assert!(Rotation::new(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
        assert!(Rotation::new(Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).is_err());
        assert!(Rotation::new(Matrix::identity(3, 3)).is_ok());
    }

    #[test]
    fn random_rotation_cases() {
        assert_eq!(random_rotation(1, 9).matrix(), &Matrix::identity(1, 1));
        for d in 2..6 {
            let r = random_rotation(d, 42);
            assert!(Rotation::new(r.matrix().clone()).is_ok());
            assert_eq!(r, random_rotation(d, 42));
            assert_ne!(r, random_rotation(d, 43));
        }
    }

    proptest! {
        #[test]
        fn invert_point_is_involution(xs in proptest::collection::vec(-1e3f64..1e3, 1..5)) {
            let x = ExtendedPoint::from_slice(&xs).unwrap();
            let back = invert_point(&invert_point(&x));
            match (&x, &back) {
                (ExtendedPoint::Finite(a), ExtendedPoint::Finite(b)) => {
                    prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
                }
                _ => prop_assert_eq!(x, back),
            }
        }

        #[test]
        fn reflection_preserves_norm(
            phi in proptest::collection::vec(-5f64..5.0, 3),
            x in proptest::collection::vec(-5f64..5.0, 3),
        ) {
            let phi = v(&phi);
            prop_assume!(phi.norm() > 1e-3);
            let x = v(&x);
            let y = reflect(&phi, &x).unwrap();
            prop_assert!((y.norm() - x.norm()).abs() <= 1e-12 * (1.0 + x.norm()));
            prop_assert!((reflect(&phi, &y).unwrap() - &x).norm() <= 1e-12 * (1.0 + x.norm()));
        }

        #[test]
        fn trivial_transform_is_identity(mu in proptest::collection::vec(-5f64..5.0, 2), s in 0f64..4.0) {
            let theta = ExtendedComplexParam::new(v(&mu), s).unwrap();
            let out = ext_param_transform(&theta, &Vector::zeros(2), 1.0, &Matrix::identity(2, 2)).unwrap();
            prop_assert_eq!(out, theta);
        }
    }
}
