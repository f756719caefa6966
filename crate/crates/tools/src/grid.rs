//! Plot-ready density grids.

use std::f64::consts::PI;

use conformal_cauchy::densities::{
    lambert_to_polar, polar_to_sphere, EuclideanCauchy, KentD2, MarginalCauchyBeta, SphericalCauchy,
};
use conformal_cauchy::geometry::{ExtendedComplexParam, ExtendedPoint};
use conformal_cauchy::{Error, Result, Vector};

use crate::formats::Family;

/// Column names and rows, the last column being the density.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Grid {
    fn new(names: &[&str]) -> Self {
        Self { header: names.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { (lo + hi) / 2.0 } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// Points of a `size × size` lattice on `[−2, 2]²` inside the closed disk of
/// radius 2, row-major with `v1` varying fastest.
fn lambert_points(size: usize) -> impl Iterator<Item = (f64, f64)> {
    linspace(-2.0, 2.0, size)
        .flat_map(move |v2| linspace(-2.0, 2.0, size).map(move |v1| (v1, v2)))
        .filter(|(v1, v2)| v1 * v1 + v2 * v2 <= 4.0)
}

/// The `μ = 0`, `d = 2` Kent-type density on the equal-area disk.
pub fn lambert_grid(k: &KentD2, size: usize) -> Result<Grid> {
    let mut g = Grid::new(&["v1", "v2", "pdf"]);
    for (v1, v2) in lambert_points(size) {
        g.rows.push(vec![v1, v2, k.pdf_lambert(v1, v2)?]);
    }
    Ok(g)
}

/// A density on `S²` charted on the equal-area disk centred at `−e_3`. The
/// rim of the disk is the single point `e_3` and is left out.
fn sphere_lambert<F: Fn(&Vector) -> Result<f64>>(pdf: F, size: usize) -> Result<Grid> {
    let mut g = Grid::new(&["v1", "v2", "pdf"]);
    for (v1, v2) in lambert_points(size).filter(|(a, b)| a * a + b * b < 4.0) {
        let (xi1, xi2) = lambert_to_polar(v1, v2);
        g.rows.push(vec![v1, v2, pdf(&polar_to_sphere(xi1, xi2))?]);
    }
    Ok(g)
}

/// A density on `S¹` against the angle in `[−π, π)`.
fn circle<F: Fn(&Vector) -> Result<f64>>(pdf: F, size: usize) -> Result<Grid> {
    let mut g = Grid::new(&["angle", "pdf"]);
    for i in 0..size {
        let t = -PI + 2.0 * PI * i as f64 / size as f64;
        g.rows.push(vec![t, pdf(&Vector::from_column_slice(&[t.cos(), t.sin()]))?]);
    }
    Ok(g)
}

fn sphere_grid<F: Fn(&Vector) -> Result<f64>>(ambient: usize, pdf: F, size: usize) -> Result<Grid> {
    match ambient {
        2 => circle(pdf, size),
        3 => sphere_lambert(pdf, size),
        n => Err(Error::InvalidParameter(format!("density grids cover S^1 and S^2, got S^{}", n - 1))),
    }
}

/// Density grid for `family`: a line or `size × size` rectangle over
/// `[lo, hi]` in `R^1`/`R^2`, the angle on `S¹`, the equal-area disk on
/// `S²`, and midpoints of `size` cells of `(−1, 1)` for the marginal law.
pub fn density_grid(family: &Family, size: usize, lo: f64, hi: f64) -> Result<Grid> {
    if size == 0 {
        return Err(Error::InvalidParameter("grid size must be positive".into()));
    }
    match family {
        Family::EuclidCauchy(theta) => {
            let dist = EuclideanCauchy::new(ExtendedComplexParam::Finite(theta.clone()));
            let pdf = |x: &[f64]| dist.pdf(&ExtendedPoint::Finite(Vector::from_column_slice(x)));
            match theta.dim() {
                1 => {
                    let mut g = Grid::new(&["x1", "pdf"]);
                    for x in linspace(lo, hi, size) {
                        g.rows.push(vec![x, pdf(&[x])?]);
                    }
                    Ok(g)
                }
                2 => {
                    let mut g = Grid::new(&["x1", "x2", "pdf"]);
                    for x2 in linspace(lo, hi, size) {
                        for x1 in linspace(lo, hi, size) {
                            g.rows.push(vec![x1, x2, pdf(&[x1, x2])?]);
                        }
                    }
                    Ok(g)
                }
                d => Err(Error::InvalidParameter(format!("density grids cover d = 1, 2, got {d}"))),
            }
        }
        Family::SphereCauchy(phi) => {
            let dist = SphericalCauchy::from_vector(phi.clone())?;
            sphere_grid(phi.len(), |y| dist.pdf(y), size)
        }
        Family::UniformSphere { d } => {
            let dist = SphericalCauchy::uniform(d + 1)?;
            sphere_grid(d + 1, |y| dist.pdf(y), size)
        }
        Family::Kent(k) => sphere_grid(k.dim() + 1, |y| k.pdf(y), size),
        Family::Marginal { varphi, nu } => {
            let dist = MarginalCauchyBeta::new(*varphi, *nu as f64)?;
            let mut g = Grid::new(&["y1", "pdf"]);
            for i in 0..size {
                let y = -1.0 + (2.0 * i as f64 + 1.0) / size as f64;
                g.rows.push(vec![y, dist.pdf(y)?]);
            }
            Ok(g)
        }
    }
}
