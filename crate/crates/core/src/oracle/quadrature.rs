//! Gauss–Legendre product rules, periodic trapezoid rules and tanh-sinh.

use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{Error, Result};
use crate::math::{abs, cos, cosh, exp, sin, sinh, sqrt, PI};

/// Sum in a fixed pairwise order, so results are bit-stable.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if abs(dz) <= 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Integration domains. Points are passed to the integrand as coordinates:
/// `[x]`, `[x, y]`, `[cos t, sin t]`, `[x, y, z]` on the unit sphere, and
/// `[v1, v2]` on the disk of radius 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Circle,
    Sphere,
    LambertDisk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub domain: Domain,
    pub order: usize,
    pub tol: f64,
    pub max_order: usize,
}

impl QuadratureSpec {
    pub fn new(domain: Domain, order: usize, tol: f64) -> Result<Self> {
        if order < 8 {
            return Err(Error::InvalidParameter(format!("quadrature order must be at least 8, got {order}")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerance must be positive".into()));
        }
        Ok(Self { domain, order, tol, max_order: 4096 })
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }
}

fn rule<F: Fn(&[f64]) -> f64>(f: &F, domain: Domain, n: usize) -> f64 {
    let mut vals = Vec::new();
    match domain {
        Domain::Interval { lo, hi } => {
            let (x, w) = gauss_legendre(n);
            let (c, h) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
            for (xi, wi) in x.iter().zip(&w) {
                vals.push(wi * h * f(&[c + h * xi]));
            }
        }
        Domain::Rectangle { x0, x1, y0, y1 } => {
            let (x, w) = gauss_legendre(n);
            let (cx, hx) = ((x0 + x1) / 2.0, (x1 - x0) / 2.0);
            let (cy, hy) = ((y0 + y1) / 2.0, (y1 - y0) / 2.0);
            for (xi, wi) in x.iter().zip(&w) {
                for (yj, wj) in x.iter().zip(&w) {
                    vals.push(wi * wj * hx * hy * f(&[cx + hx * xi, cy + hy * yj]));
                }
            }
        }
        Domain::Circle => {
            let h = 2.0 * PI / n as f64;
            for k in 0..n {
                let t = h * (k as f64 + 0.5);
                vals.push(h * f(&[cos(t), sin(t)]));
            }
        }
        Domain::Sphere => {
            let (x, w) = gauss_legendre(n);
            let m = 2 * n;
            let h = 2.0 * PI / m as f64;
            for (xi, wi) in x.iter().zip(&w) {
                // Colatitude t ∈ [0, π]; the sin t Jacobian cancels against
                // the substitution z = cos t.
                let z = *xi;
                let s = sqrt((1.0 - z * z).max(0.0));
                let mut ring = Vec::with_capacity(m);
                for k in 0..m {
                    let p = h * (k as f64 + 0.5);
                    ring.push(f(&[s * cos(p), s * sin(p), z]));
                }
                vals.push(wi * h * pairwise_sum(&ring));
            }
        }
        Domain::LambertDisk => {
            let (x, w) = gauss_legendre(n);
            let m = 2 * n;
            let h = 2.0 * PI / m as f64;
            for (xi, wi) in x.iter().zip(&w) {
                let r = 1.0 + xi;
                let mut ring = Vec::with_capacity(m);
                for k in 0..m {
                    let p = h * (k as f64 + 0.5);
                    ring.push(f(&[r * cos(p), r * sin(p)]));
                }
                vals.push(wi * r * h * pairwise_sum(&ring));
            }
        }
    }
    pairwise_sum(&vals)
}

/// Integrates `f` over `spec.domain`, doubling the order until two
/// successive estimates differ by less than `spec.tol`.
pub fn integrate<F: Fn(&[f64]) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    let mut n = spec.order;
    let mut prev = rule(&f, spec.domain, n);
    while n < spec.max_order {
        n *= 2;
        let next = rule(&f, spec.domain, n);
        if abs(next - prev) < spec.tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NotConverged { what: "quadrature", iterations: n })
}

/// Fixed-order Gauss–Legendre on `[lo, hi]`.
pub fn gauss_legendre_fixed<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (c, h) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let vals: Vec<f64> = nodes.0.iter().zip(&nodes.1).map(|(x, w)| w * f(c + h * x)).collect();
    h * pairwise_sum(&vals)
}

const TS_MAX_LEVEL: usize = 12;
const TS_T_MAX: f64 = 6.0;

/// Tanh-sinh quadrature on `[a, b]` for integrands that may be singular at
/// the endpoints. `f(x, x − a, b − x)` receives both endpoint distances,
/// computed without cancellation.
pub fn tanh_sinh_endpoint<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let hw = (b - a) / 2.0;
    let eval = |t: f64| -> f64 {
        let u = PI / 2.0 * sinh(t);
        let e = exp(-2.0 * abs(u));
        let ch = cosh(u);
        let w = PI / 2.0 * cosh(t) / (ch * ch);
        // Distance from the nearer endpoint: hw (1 − tanh|u|).
        let near = hw * 2.0 * e / (1.0 + e);
        let far = 2.0 * hw - near;
        let (x, dl, dr) = if t >= 0.0 { (b - near, far, near) } else { (a + near, near, far) };
        if near <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let v = f(x, dl, dr);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };
    let mut h = 1.0;
    let mut acc = Vec::new();
    let kmax = (TS_T_MAX / h) as i64;
    for j in -kmax..=kmax {
        acc.push(eval(j as f64 * h));
    }
    let mut sum = pairwise_sum(&acc);
    let mut est = sum * h * hw;
    for level in 1..=TS_MAX_LEVEL {
        h /= 2.0;
        let kmax = (TS_T_MAX / h) as i64;
        acc.clear();
        let mut j = -kmax + if kmax % 2 == 0 { 1 } else { 0 };
        while j <= kmax {
            acc.push(eval(j as f64 * h));
            j += 2;
        }
        sum += pairwise_sum(&acc);
        let next = sum * h * hw;
        if level >= 3 && abs(next - est) < tol {
            return Ok(next);
        }
        est = next;
    }
    Err(Error::NotConverged { what: "tanh-sinh quadrature", iterations: TS_MAX_LEVEL })
}

/// [`tanh_sinh_endpoint`] for integrands of `x` alone.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    tanh_sinh_endpoint(|x, _, _| f(x), a, b, tol)
}
