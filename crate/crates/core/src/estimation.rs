//! Maximum likelihood for `C_d(θ)` and, through stereographic transport,
//! for `C*_d(φ)`.
//!
//! Notation: `x̄_j = x_j − μ`, `r_j = ‖x̄_j‖`, `D_j = σ² + r_j²`. The scaled
//! log-likelihood `ℓ̃ = n ln σ − Σ ln D_j` differs from the log-likelihood by
//! the factor `d` and the constant `n ln c_d`.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::densities::ln_euclid_const;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{ComplexParam, ExtendedComplexParam, ExtendedPoint};
use crate::math::{abs, exp, ln, sqrt};
use crate::moebius::{inv_stereographic, inv_stereographic_ext, stereographic_point};
use crate::sampling::RngStream;
use crate::{Matrix, Vector};

/// Numeric MLE settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MleConfig {
    /// Target for `σ̂ ‖A.1‖ / n`, the scale-free gradient residual.
    pub tol: f64,
    /// Cap on likelihood evaluations across all starts.
    pub max_evals: usize,
    pub seed: u64,
    /// Extra starts drawn around the median; the best end point is kept.
    pub restarts: usize,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_evals: 10_000, seed: 7, restarts: 3 }
    }
}

/// First- and second-order checks at a candidate `θ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDiagnostics {
    /// `‖Σ x̄_j / D_j‖`.
    pub grad_mu_residual: f64,
    /// `Σ σ²/D_j − n/2`.
    pub grad_sigma_residual: f64,
    /// Largest eigenvalue of the log-likelihood Hessian in `(σ, μ)`.
    pub hessian_max_eigenvalue: f64,
    /// Half or more of the observations coincide.
    pub coincidence_flag: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MleResult {
    /// Likelihood unbounded as `σ → 0` at this location.
    PointMass(Vector),
    /// Every `θ` on this circle in `R^{d+1}` attains the supremum. `plane`
    /// holds two orthonormal spanning vectors, the second being `e_{d+1}`.
    ContourCircle { center: Vector, radius: f64, plane: (Vector, Vector) },
    Estimate { theta: ComplexParam, loglik: f64, diagnostics: StationaryDiagnostics, converged: bool },
}

impl MleResult {
    pub fn theta(&self) -> Option<&ComplexParam> {
        match self {
            MleResult::Estimate { theta, .. } => Some(theta),
            _ => None,
        }
    }
}

/// `σ̂(μ)` with the profile log-likelihood `λ(μ) = ℓ(μ, σ̂(μ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSigma {
    pub sigma: f64,
    pub lambda: f64,
    /// Half or more of the data sit at `μ`: `σ̂ = 0` and `lambda` is the
    /// `σ → 0` limit (`+∞` for a strict majority).
    pub diverges: bool,
}

fn check_data(data: &[Vector]) -> Result<usize> {
    let first = data.first().ok_or(Error::Empty)?;
    let d = first.len();
    if d == 0 {
        return Err(Error::InvalidParameter("points must have at least one coordinate".into()));
    }
    for x in data {
        check_dim(d, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("data must be finite".into()));
        }
    }
    Ok(d)
}

fn check_theta(theta: &ComplexParam, data: &[Vector]) -> Result<usize> {
    let d = check_data(data)?;
    check_dim(d, theta.dim())?;
    if !(theta.sigma() > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {}", theta.sigma())));
    }
    Ok(d)
}

/// `n ln c_d + d (n ln σ − Σ ln(σ² + ‖x_j − μ‖²))`.
pub fn loglik_euclid(theta: &ComplexParam, data: &[Vector]) -> Result<f64> {
    let d = check_theta(theta, data)?;
    Ok(loglik_unchecked(theta.mu(), theta.sigma(), data, d))
}

fn loglik_unchecked(mu: &Vector, sigma: f64, data: &[Vector], d: usize) -> f64 {
    let n = data.len() as f64;
    let s2 = sigma * sigma;
    let sum: f64 = data.iter().map(|x| ln(s2 + (x - mu).norm_squared())).sum();
    n * ln_euclid_const(d) + d as f64 * (n * ln(sigma) - sum)
}

/// `Σ_j G((x_j − μ)/σ)` in `R^{d+1}` with `G` the inverse stereographic
/// projection. Its first `d` coordinates are `2σ Σ x̄_j/D_j` and its last is
/// `n − 2 Σ σ²/D_j`, so it vanishes exactly at stationary points.
pub fn likelihood_residual(theta: &ComplexParam, data: &[Vector]) -> Result<Vector> {
    let d = check_theta(theta, data)?;
    let mut s = Vector::zeros(d + 1);
    for x in data {
        let a = (x - theta.mu()) / theta.sigma();
        s += inv_stereographic(&ExtendedPoint::Finite(a));
    }
    Ok(s)
}

struct Derivs {
    grad_mu: Vector,
    /// `Σ σ²/D_j − n/2`.
    sigma_residual: f64,
    /// Hessian of `ℓ̃` in `(σ, μ)` order.
    hessian: Matrix,
}

fn derivs(mu: &Vector, sigma: f64, data: &[Vector]) -> Derivs {
    let d = mu.len();
    let n = data.len() as f64;
    let s2 = sigma * sigma;
    let mut grad_mu = Vector::zeros(d);
    let mut ratio = 0.0;
    let mut h = Matrix::zeros(d + 1, d + 1);
    h[(0, 0)] = -n / s2;
    for x in data {
        let xb = x - mu;
        let r2 = xb.norm_squared();
        let den = s2 + r2;
        let den2 = den * den;
        grad_mu += &xb / den;
        ratio += s2 / den;
        h[(0, 0)] -= 2.0 * (r2 - s2) / den2;
        let cross = &xb * (-4.0 * sigma / den2);
        for i in 0..d {
            h[(0, i + 1)] += cross[i];
            h[(i + 1, 0)] += cross[i];
            h[(i + 1, i + 1)] -= 2.0 / den;
            for j in 0..d {
                h[(i + 1, j + 1)] += 4.0 * xb[i] * xb[j] / den2;
            }
        }
    }
    Derivs { grad_mu, sigma_residual: ratio - n / 2.0, hessian: h }
}

/// Hessian of the log-likelihood with respect to `(σ, μ_1, …, μ_d)`.
pub fn loglik_hessian(theta: &ComplexParam, data: &[Vector]) -> Result<Matrix> {
    let d = check_theta(theta, data)?;
    Ok(derivs(theta.mu(), theta.sigma(), data).hessian * d as f64)
}

/// Gradient of the log-likelihood with respect to `(σ, μ_1, …, μ_d)`.
pub fn loglik_gradient(theta: &ComplexParam, data: &[Vector]) -> Result<Vector> {
    let d = check_theta(theta, data)?;
    let dv = derivs(theta.mu(), theta.sigma(), data);
    let mut g = Vector::zeros(d + 1);
    // ∂ℓ̃/∂σ = n/σ − 2σ Σ 1/D = (n − 2 Σ σ²/D)/σ.
    g[0] = -2.0 * dv.sigma_residual / theta.sigma();
    g.rows_mut(1, d).copy_from(&(dv.grad_mu * 2.0));
    Ok(g * d as f64)
}

fn max_multiplicity(data: &[Vector]) -> usize {
    groups(data).iter().map(|g| g.1).max().unwrap_or(0)
}

fn lex(a: &Vector, b: &Vector) -> Ordering {
    a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Distinct points with their multiplicities, exact equality.
fn groups(data: &[Vector]) -> Vec<(Vector, usize)> {
    let mut sorted: Vec<&Vector> = data.iter().collect();
    sorted.sort_by(|a, b| lex(a, b));
    let mut out: Vec<(Vector, usize)> = Vec::new();
    for x in sorted {
        match out.last_mut() {
            Some((p, k)) if p == x => *k += 1,
            _ => out.push((x.clone(), 1)),
        }
    }
    out
}

pub fn stationary_diagnostics(theta: &ComplexParam, data: &[Vector]) -> Result<StationaryDiagnostics> {
    let d = check_theta(theta, data)?;
    let dv = derivs(theta.mu(), theta.sigma(), data);
    let h = dv.hessian * d as f64;
    let max_eig = h.symmetric_eigen().eigenvalues.max();
    Ok(StationaryDiagnostics {
        grad_mu_residual: dv.grad_mu.norm(),
        grad_sigma_residual: dv.sigma_residual,
        hessian_max_eigenvalue: max_eig,
        coincidence_flag: 2 * max_multiplicity(data) >= data.len(),
    })
}

/// Solves `Σ σ²/(σ² + r_j²) = n/2` for `σ` at fixed `μ` by safeguarded
/// Newton in `s = ln σ`. The left side increases from the fraction of data at
/// `μ` to `n`, so the root is unique when fewer than half the data sit at `μ`.
pub fn profile_sigma(mu: &Vector, data: &[Vector]) -> Result<ProfileSigma> {
    let d = check_data(data)?;
    check_dim(d, mu.len())?;
    let n = data.len();
    if n < 2 {
        return Err(Error::InvalidParameter("profile likelihood needs at least two observations".into()));
    }
    let r2: Vec<f64> = data.iter().map(|x| (x - mu).norm_squared()).collect();
    let at_mu = r2.iter().filter(|v| **v == 0.0).count();
    if 2 * at_mu >= n {
        let lambda = if 2 * at_mu > n {
            f64::INFINITY
        } else {
            let rest: f64 = r2.iter().filter(|v| **v > 0.0).map(|v| ln(*v)).sum();
            n as f64 * ln_euclid_const(d) - d as f64 * rest
        };
        return Ok(ProfileSigma { sigma: 0.0, lambda, diverges: true });
    }
    let half = n as f64 / 2.0;
    // h(s) = Σ 1/(1 + r² e^{−2s}) − n/2, increasing in s.
    let h = |s: f64| -> (f64, f64) {
        let mut v = -half;
        let mut dv = 0.0;
        for &q in &r2 {
            let t = q * exp(-2.0 * s);
            let w = 1.0 / (1.0 + t);
            v += w;
            dv += 2.0 * t * w * w;
        }
        (v, dv)
    };
    let positive = r2.iter().copied().filter(|v| *v > 0.0);
    let rmin = positive.clone().fold(f64::INFINITY, f64::min);
    let rmax = positive.fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.5 * ln(rmin) - 1.0, 0.5 * ln(rmax) + 1.0);
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, dv) = h(s);
        if v == 0.0 {
            break;
        }
        if v < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - v / dv;
        let next = if dv > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if abs(next - s) <= 1e-15 * (1.0 + abs(s)) {
            s = next;
            break;
        }
        s = next;
    }
    let sigma = exp(s);
    Ok(ProfileSigma { sigma, lambda: loglik_unchecked(mu, sigma, data, d), diverges: false })
}

/// Closed-form MLE for one to three observations.
pub fn mle_closed(data: &[Vector]) -> Result<MleResult> {
    let d = check_data(data)?;
    match data.len() {
        1 => Ok(MleResult::PointMass(data[0].clone())),
        2 => Ok(two_point(&data[0], &data[1], d)),
        3 => {
            let (x1, x2, x3) = (&data[0], &data[1], &data[2]);
            if let Some(p) = majority(data) {
                return Ok(MleResult::PointMass(p));
            }
            let a = (x1 - x2).norm_squared();
            let b = (x2 - x3).norm_squared();
            let c = (x3 - x1).norm_squared();
            let den = a + b + c;
            let mu = (x3 * a + x1 * b + x2 * c) / den;
            let sigma = sqrt(3.0) * sqrt(a) * sqrt(b) * sqrt(c) / den;
            let theta = ComplexParam::new(mu, sigma)?;
            estimate(theta, data, true)
        }
        n => Err(Error::InvalidParameter(format!("closed form covers 1 to 3 observations, got {n}"))),
    }
}

fn two_point(x1: &Vector, x2: &Vector, d: usize) -> MleResult {
    if x1 == x2 {
        return MleResult::PointMass(x1.clone());
    }
    let diff = x1 - x2;
    let mut u = Vector::zeros(d + 1);
    u.rows_mut(0, d).copy_from(&(&diff / diff.norm()));
    let mut e = Vector::zeros(d + 1);
    e[d] = 1.0;
    MleResult::ContourCircle { center: (x1 + x2) / 2.0, radius: diff.norm() / 2.0, plane: (u, e) }
}

fn majority(data: &[Vector]) -> Option<Vector> {
    groups(data).into_iter().find(|g| 2 * g.1 > data.len()).map(|g| g.0)
}

fn estimate(theta: ComplexParam, data: &[Vector], converged: bool) -> Result<MleResult> {
    let loglik = loglik_euclid(&theta, data)?;
    let diagnostics = stationary_diagnostics(&theta, data)?;
    Ok(MleResult::Estimate { theta, loglik, diagnostics, converged })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Ascent {
    mu: Vector,
    profile: ProfileSigma,
    converged: bool,
}

/// Newton ascent on the profile likelihood `λ(μ)`. By the envelope theorem
/// its gradient is `∂ℓ̃/∂μ` at `σ̂(μ)` and its Hessian is the Schur complement
/// `H_μμ − H_μσ H_σμ / H_σσ`. Steps that fail to increase `λ` are halved;
/// where the Schur complement is not negative definite the step falls back
/// to a scaled gradient.
fn ascend(start: Vector, data: &[Vector], tol: f64, evals: &mut usize, budget: usize) -> Result<Ascent> {
    let n = data.len() as f64;
    let d = start.len();
    let mut mu = start;
    let mut prof = profile_sigma(&mu, data)?;
    *evals += 1;
    while prof.diverges {
        // Nudge off a half-coincident point: the limit value is finite but
        // the derivatives are not defined there.
        let scale = data.iter().map(|x| (x - &mu).norm()).fold(0.0, f64::max).max(1.0);
        mu[0] += 1e-3 * scale;
        prof = profile_sigma(&mu, data)?;
        *evals += 1;
    }
    let mut converged = false;
    while *evals < budget {
        let dv = derivs(&mu, prof.sigma, data);
        let scaled = prof.sigma * dv.grad_mu.norm() / n;
        if scaled <= tol {
            converged = true;
            break;
        }
        let h = &dv.hessian;
        let hss = h[(0, 0)];
        let hms = h.view((1, 0), (d, 1)).into_owned();
        let schur = h.view((1, 1), (d, d)).into_owned() - &hms * hms.transpose() / hss;
        let g = &dv.grad_mu * 2.0;
        let newton = schur.clone().cholesky().is_none() && (-&schur).cholesky().is_some();
        let mut step = if newton {
            let neg = (-schur).cholesky().ok_or(Error::Singular)?;
            neg.solve(&g)
        } else {
            &g * (prof.sigma * prof.sigma / n)
        };
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &mu + &step;
            let p = profile_sigma(&cand, data)?;
            *evals += 1;
            if !p.diverges && p.lambda >= prof.lambda - 1e-14 * abs(prof.lambda).max(1.0) {
                let moved = step.amax() <= 1e-16 * (1.0 + mu.amax());
                mu = cand;
                prof = p;
                accepted = true;
                if moved {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || converged {
            converged = converged || scaled <= sqrt(tol);
            break;
        }
    }
    Ok(Ascent { mu, profile: prof, converged })
}

/// Maximum likelihood for `C_d(θ)` from any number of observations.
///
/// One to three points use [`mle_closed`]. Otherwise a strict majority of
/// coincident points gives [`MleResult::PointMass`] and an exact half/half
/// split between two values gives the two-point circle; everything else is a
/// Newton ascent on the profile likelihood from the coordinate-wise median,
/// plus `restarts` seeded starts scattered by the median absolute deviation.
pub fn mle_numeric(data: &[Vector], config: &MleConfig) -> Result<MleResult> {
    let d = check_data(data)?;
    let n = data.len();
    if n <= 3 {
        return mle_closed(data);
    }
    if let Some(p) = majority(data) {
        return Ok(MleResult::PointMass(p));
    }
    let g = groups(data);
    if g.len() == 2 && g[0].1 == g[1].1 {
        return Ok(two_point(&g[0].0, &g[1].0, d));
    }
    let med = Vector::from_fn(d, |i, _| median(data.iter().map(|x| x[i]).collect()));
    let mad = Vector::from_fn(d, |i, _| median(data.iter().map(|x| abs(x[i] - med[i])).collect()));
    let spread = mad.amax().max(1e-300);
    let mut evals = 0usize;
    let budget_per = config.max_evals / (config.restarts + 1);
    let mut best = ascend(med.clone(), data, config.tol, &mut evals, budget_per)?;
    let mut rng = RngStream::new(config.seed, 0x6d6c65);
    for k in 0..config.restarts {
        let start = Vector::from_fn(d, |i, _| {
            let w = if mad[i] > 0.0 { mad[i] } else { spread };
            med[i] + w * rng.standard_normal()
        });
        let cap = budget_per * (k + 2);
        let run = ascend(start, data, config.tol, &mut evals, cap)?;
        if run.profile.lambda > best.profile.lambda {
            best = run;
        }
    }
    let theta = ComplexParam::new(best.mu, best.profile.sigma)?;
    estimate(theta, data, best.converged)
}

/// MLE result for `C*_d(φ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SphereMleResult {
    /// Likelihood unbounded at this sphere point.
    PointMass(Vector),
    /// Two distinct values, each carrying half the data: the maximizers form
    /// the circle through `y1` and `y2` orthogonal to the unit sphere.
    ContourCircle { y1: Vector, y2: Vector },
    Estimate { phi: Vector, loglik: f64, diagnostics: StationaryDiagnostics, converged: bool },
}

/// Householder reflection swapping unit vectors `p` and `e_{d+1}`.
fn householder_to_pole(p: &Vector) -> Matrix {
    let n = p.len();
    let mut e = Vector::zeros(n);
    e[n - 1] = 1.0;
    let v = p - &e;
    let v2 = v.norm_squared();
    if v2 < 1e-30 {
        return Matrix::identity(n, n);
    }
    Matrix::identity(n, n) - &v * v.transpose() * (2.0 / v2)
}

/// Pole kept away from the data: the candidate among `−ȳ/‖ȳ‖` and `±e_k`
/// maximizing the smallest distance to an observation.
fn far_pole(data: &[Vector]) -> Vector {
    let n = data[0].len();
    let mut cands: Vec<Vector> = Vec::new();
    let mean = data.iter().fold(Vector::zeros(n), |acc, y| acc + y);
    if mean.norm() > 1e-12 {
        cands.push(-&mean / mean.norm());
    }
    for k in 0..n {
        for s in [1.0, -1.0] {
            let mut e = Vector::zeros(n);
            e[k] = s;
            cands.push(e);
        }
    }
    let score = |c: &Vector| data.iter().map(|y| (y - c).norm()).fold(f64::INFINITY, f64::min);
    cands.into_iter().max_by(|a, b| score(a).total_cmp(&score(b))).unwrap_or_else(|| Vector::zeros(n))
}

/// Maximum likelihood for `C*_d(φ)` from unit vectors in `R^{d+1}`: rotate a
/// pole away from the data to `e_{d+1}`, project stereographically, fit in
/// `R^d`, and carry `θ̂` back.
pub fn mle_sphere(data: &[Vector], config: &MleConfig) -> Result<SphereMleResult> {
    let n = check_data(data)?;
    if n < 2 {
        return Err(Error::InvalidParameter("sphere points need at least two coordinates".into()));
    }
    for y in data {
        crate::moebius::check_unit(y, crate::densities::UNIT_TOL)?;
    }
    let g = groups(data);
    if let Some(p) = g.iter().find(|g| 2 * g.1 > data.len()) {
        return Ok(SphereMleResult::PointMass(p.0.clone()));
    }
    if g.len() == 2 && g[0].1 == g[1].1 {
        return Ok(SphereMleResult::ContourCircle { y1: g[0].0.clone(), y2: g[1].0.clone() });
    }
    let h = householder_to_pole(&far_pole(data));
    let mut xs = Vec::with_capacity(data.len());
    for y in data {
        match stereographic_point(&(&h * y))? {
            ExtendedPoint::Finite(x) => xs.push(x),
            ExtendedPoint::Infinity { .. } => return Err(Error::Singular),
        }
    }
    match mle_numeric(&xs, config)? {
        MleResult::PointMass(x) => Ok(SphereMleResult::PointMass(&h * inv_stereographic(&ExtendedPoint::Finite(x)))),
        MleResult::ContourCircle { .. } => Err(Error::Singular),
        MleResult::Estimate { theta, diagnostics, converged, .. } => {
            let phi_rot = inv_stereographic_ext(&ExtendedComplexParam::Finite(theta))
                .into_finite()
                .ok_or(Error::Singular)?;
            let phi = &h * phi_rot;
            let loglik = sphere_loglik(&phi, data)?;
            Ok(SphereMleResult::Estimate { phi, loglik, diagnostics, converged })
        }
    }
}

/// `Σ ln f(y_j; φ)` for the spherical Cauchy density.
pub fn sphere_loglik(phi: &Vector, data: &[Vector]) -> Result<f64> {
    let dist = crate::densities::SphericalCauchy::from_vector(phi.clone())?;
    data.iter().map(|y| dist.ln_pdf(y)).sum()
}
