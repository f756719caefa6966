//! Finite-difference Jacobians: central differences with one Richardson
//! extrapolation step.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, sqrt};
use crate::{Matrix, Vector};

/// Derivative of `curve` at `t = 0`.
fn derivative<F: Fn(f64) -> Option<Vector>>(curve: &F, h: f64) -> Result<Vector> {
    for s in [-10.0 * h, 10.0 * h] {
        curve(s).ok_or(Error::Singular)?;
    }
    let diff = |k: f64| -> Result<Vector> {
        let p = curve(k).ok_or(Error::Singular)?;
        let m = curve(-k).ok_or(Error::Singular)?;
        Ok((p - m) / (2.0 * k))
    };
    let coarse = diff(h)?;
    let fine = diff(h / 2.0)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Jacobian matrix of `map` at `x`. `map` returns `None` at singular points;
/// the evaluation is refused if any probe within `10h` of `x` is singular.
pub fn jacobian_fd<F: Fn(&Vector) -> Option<Vector>>(map: F, x: &Vector, h: f64) -> Result<Matrix> {
    let n = x.len();
    let mut cols: Vec<Vector> = Vec::with_capacity(n);
    for j in 0..n {
        let curve = |t: f64| {
            let mut p = x.clone();
            p[j] += t;
            map(&p)
        };
        cols.push(derivative(&curve, h)?);
    }
    Ok(Matrix::from_columns(&cols))
}

/// `|det J|` for a map between spaces of equal dimension.
pub fn jacobian_det_fd<F: Fn(&Vector) -> Option<Vector>>(map: F, x: &Vector, h: f64) -> Result<f64> {
    let j = jacobian_fd(map, x, h)?;
    if !j.is_square() {
        return Err(Error::DimensionMismatch { expected: j.ncols(), found: j.nrows() });
    }
    Ok(abs(j.determinant()))
}

/// Volume scaling `sqrt(det JᵀJ)` of a map into a higher-dimensional space.
pub fn gram_det_fd<F: Fn(&Vector) -> Option<Vector>>(map: F, x: &Vector, h: f64) -> Result<f64> {
    let j = jacobian_fd(map, x, h)?;
    Ok(sqrt(abs((j.transpose() * &j).determinant())))
}

/// Orthonormal basis of the tangent space `y⊥` of the unit sphere at `y`,
/// as the columns of a `(d+1) × d` matrix.
pub fn tangent_frame(y: &Vector) -> Matrix {
    let n = y.len();
    let mut basis: Vec<Vector> = Vec::with_capacity(n);
    basis.push(y.normalize());
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = Vector::zeros(n);
        v[k] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let norm = v.norm();
        if norm > 0.3 {
            basis.push(v / norm);
        }
    }
    Matrix::from_columns(&basis[1..])
}

/// Surface Jacobian of a map `S^d → R^m` at `y`: `sqrt(det JᵀJ)` with `J` the
/// derivative along unit-speed great circles through `y` in an orthonormal
/// tangent frame.
pub fn sphere_jacobian_det_fd<F: Fn(&Vector) -> Option<Vector>>(map: F, y: &Vector, h: f64) -> Result<f64> {
    let frame = tangent_frame(y);
    let mut cols: Vec<Vector> = Vec::with_capacity(frame.ncols());
    for k in 0..frame.ncols() {
        let v = frame.column(k).into_owned();
        let curve = |t: f64| {
            let p = y + &v * t;
            let n = p.norm();
            map(&(p / n))
        };
        cols.push(derivative(&curve, h)?);
    }
    let j = Matrix::from_columns(&cols);
    Ok(sqrt(abs((j.transpose() * &j).determinant())))
}
