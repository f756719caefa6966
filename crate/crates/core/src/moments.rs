//! Moments of the marginal law of `Y_1` under `C*_ν(ϕe_1)`, the mean and
//! scatter of the spherical Cauchy law, and the method-of-moments estimator.
//!
//! `μ1(ν, ϕ)` is odd and `μ2(ν, ϕ)` even in `ϕ`, so every route below works
//! at `|ϕ|` and restores the sign afterwards.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, asinh, sqrt};
use crate::special::Hyp2F1Args;
use crate::{Matrix, Vector};

/// Below this `|ϕ|` the moments are summed from their power series.
pub const SERIES_THRESHOLD: f64 = 0.25;
/// Upper end of the concentration interval searched by [`mom_estimate`].
pub const MOM_R_MAX: f64 = 1.0 - 1e-9;

const SERIES_TOL: f64 = 1e-17;
const FORM_AGREEMENT: f64 = 1e-8;

fn check(nu: f64, varphi: f64) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    if !(abs(varphi) < 1.0) {
        return Err(Error::Domain(format!("|varphi| must be below 1, got {varphi}")));
    }
    Ok(())
}

fn f21(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    Hyp2F1Args::new(a, b, c, z)?.eval()
}

fn integer_nu(nu: f64) -> Option<usize> {
    (nu >= 1.0 && nu == crate::math::floor(nu) && nu < 1e6).then_some(nu as usize)
}

fn log_ratio(p: f64) -> f64 {
    crate::math::ln_1p(2.0 * p / (1.0 - p))
}

/// Closed forms of `μ1` for `ν ∈ {1, 2, 3, 4}`.
pub fn mean_closed(nu: usize, varphi: f64) -> Result<f64> {
    check(nu as f64, varphi)?;
    let p = abs(varphi);
    if p == 0.0 {
        return Ok(0.0);
    }
    let q = 1.0 - p * p;
    let pre = (1.0 + p * p) / (2.0 * p);
    let m = match nu {
        1 => p,
        2 => pre * (1.0 - q * q / (2.0 * p * (1.0 + p * p)) * log_ratio(p)),
        3 => p * (3.0 - p * p) / 2.0,
        4 => {
            let q4 = q * q * q * q;
            pre * (1.0 - 3.0 * q * q / (8.0 * p * p) + 3.0 / (16.0 * p * p * p) * q4 / (1.0 + p * p) * log_ratio(p))
        }
        _ => return Err(Error::InvalidParameter(format!("no closed form for nu = {nu}"))),
    };
    Ok(m.copysign(varphi))
}

/// Closed forms of `μ2` for `ν ∈ {1, 2, 3, 4}`.
pub fn second_moment_closed(nu: usize, varphi: f64) -> Result<f64> {
    check(nu as f64, varphi)?;
    let p = abs(varphi);
    if p == 0.0 && (1..=4).contains(&nu) {
        return Ok(1.0 / (nu as f64 + 1.0));
    }
    let p2 = p * p;
    let q = 1.0 - p2;
    Ok(match nu {
        1 => (1.0 + p2) / 2.0,
        2 => (1.0 + p2) / (4.0 * p2) * (2.0 * (1.0 + p2 * p2) / (1.0 + p2) - q * q / p * log_ratio(p)),
        3 => (1.0 + 6.0 * p2 - 3.0 * p2 * p2) / 4.0,
        4 => {
            let poly = 3.0 - 8.0 * p2 + 2.0 * p2 * p2 - 8.0 * p2 * p2 * p2 + 3.0 * p2 * p2 * p2 * p2;
            (1.0 + p2) / (16.0 * p2 * p2) * (-2.0 * poly / (1.0 + p2) + 3.0 * q * q * q * q / p * log_ratio(p))
        }
        _ => return Err(Error::InvalidParameter(format!("no closed form for nu = {nu}"))),
    })
}

/// `μ1` from `(1+ϕ²)/(2ϕ)[1 − (1+ϕ)²/(1+ϕ²) F(1, ν/2; ν; −4ϕ/(1−ϕ)²)]`.
pub fn mean_hypergeometric(nu: f64, varphi: f64) -> Result<f64> {
    check(nu, varphi)?;
    let p = abs(varphi);
    if p == 0.0 {
        return Ok(0.0);
    }
    let z = -4.0 * p / ((1.0 - p) * (1.0 - p));
    let f = f21(1.0, nu / 2.0, nu, z)?;
    let m = (1.0 + p * p) / (2.0 * p) * (1.0 - (1.0 + p) * (1.0 + p) / (1.0 + p * p) * f);
    Ok(m.copysign(varphi))
}

/// `μ1` from `(1+ϕ²)/(2ϕ)[1 − (1−ϕ²)/(1+ϕ²) F(½, (ν−1)/2; (ν+1)/2; −4ϕ²/(1−ϕ²)²)]`.
pub fn mean_hypergeometric_alt(nu: f64, varphi: f64) -> Result<f64> {
    check(nu, varphi)?;
    let p = abs(varphi);
    if p == 0.0 {
        return Ok(0.0);
    }
    let q = 1.0 - p * p;
    let f = f21(0.5, (nu - 1.0) / 2.0, (nu + 1.0) / 2.0, -4.0 * p * p / (q * q))?;
    Ok(form_b(p, f).copysign(varphi))
}

fn form_b(p: f64, f: f64) -> f64 {
    let q = 1.0 - p * p;
    (1.0 + p * p) / (2.0 * p) * (1.0 - q / (1.0 + p * p) * f)
}

/// `μ2` from its `₂F₁` representation with `z = −4ϕ/(1−ϕ)²`.
pub fn second_moment_hypergeometric(nu: f64, varphi: f64) -> Result<f64> {
    check(nu, varphi)?;
    let p = abs(varphi);
    if p == 0.0 {
        return Ok(1.0 / (nu + 1.0));
    }
    let z = -4.0 * p / ((1.0 - p) * (1.0 - p));
    let f1 = f21(1.0, nu / 2.0, nu, z)?;
    let f2 = f21(2.0, nu / 2.0, nu, z)?;
    let s = 1.0 + p * p;
    let t = (1.0 + p) * (1.0 + p) / s;
    Ok(s * s / (4.0 * p * p) * (1.0 - 2.0 * t * f1 + t * t * f2))
}

/// `(μ1, μ2)` from the power series in `b = −2ϕ/(1+ϕ²)`, built on the even
/// moments of the symmetric beta law. Converges for all `|ϕ| < 1`; used for
/// small `|ϕ|` where the closed forms cancel.
pub fn moments_series(nu: f64, varphi: f64) -> Result<(f64, f64)> {
    check(nu, varphi)?;
    let p = abs(varphi);
    let b = -2.0 * p / (1.0 + p * p);
    let b2 = b * b;
    // m_{2k} = E Z^{2k}; `m` holds m_{2k}, `m_next` holds m_{2k+2}.
    let mut m = 1.0;
    let mut bpow = 1.0; // b^{2k}
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 0..100_000usize {
        let kf = k as f64;
        let m_next = m * (2.0 * kf + 1.0) / (nu + 1.0 + 2.0 * kf);
        let t1 = -nu * bpow * b * m / (nu + 1.0 + 2.0 * kf);
        let t2 = (2.0 * kf + 1.0) * bpow * (m_next + b2 * m) - 4.0 * (kf + 1.0) * bpow * b2 * m_next;
        s1 += t1;
        s2 += t2;
        if abs(t1) <= SERIES_TOL * abs(s1) && abs(t2) <= SERIES_TOL * abs(s2) && k > 2 {
            return Ok((s1.copysign(varphi), s2));
        }
        m = m_next;
        bpow *= b2;
    }
    Err(Error::NotConverged { what: "moment series", iterations: 100_000 })
}

/// `F_ν(z) = F(½, (ν−1)/2; (ν+1)/2; z)` for integer `ν ≥ 0` and `z < 0`.
///
/// Uses the elementary values at `ν ≤ 3` and [`gauss_recursion_step`] upwards
/// when `|z| ≥ 1`; below that the upward recursion loses digits and the
/// series is summed directly.
pub fn half_family(nu: usize, z: f64) -> Result<f64> {
    if !(z < 0.0) {
        return Err(Error::Domain(format!("half_family needs z < 0, got {z}")));
    }
    let base = |k: usize| -> f64 {
        match k {
            0 => sqrt(1.0 - z),
            1 => 1.0,
            2 => {
                let s = sqrt(-z);
                asinh(s) / s
            }
            _ => 2.0 * (1.0 - sqrt(1.0 - z)) / z,
        }
    };
    if nu <= 3 {
        return Ok(base(nu));
    }
    if abs(z) < 1.0 {
        return f21(0.5, (nu as f64 - 1.0) / 2.0, (nu as f64 + 1.0) / 2.0, z);
    }
    // Two interleaved chains by parity: F_{ν−4}, F_{ν−2} → F_ν.
    let (mut lo, mut hi) = if nu % 2 == 0 { (base(0), base(2)) } else { (base(1), base(3)) };
    let mut k = if nu % 2 == 0 { 4 } else { 5 };
    while k <= nu {
        let next = gauss_recursion_step(k, z, hi, lo);
        lo = hi;
        hi = next;
        k += 2;
    }
    Ok(hi)
}

/// One step `F_ν = (ν−1)/(z(ν−2)(ν−3)) [(ν−3 + z(ν−4)) F_{ν−2} − (ν−3) F_{ν−4}]`
/// for `ν ≥ 4`, from the contiguous relations of `₂F₁`.
pub fn gauss_recursion_step(nu: usize, z: f64, f_nu_minus_2: f64, f_nu_minus_4: f64) -> f64 {
    let n = nu as f64;
    (n - 1.0) / (z * (n - 2.0) * (n - 3.0)) * ((n - 3.0 + z * (n - 4.0)) * f_nu_minus_2 - (n - 3.0) * f_nu_minus_4)
}

/// `μ1(ν, ϕ) = E Y_1`.
pub fn marginal_mean(nu: f64, varphi: f64) -> Result<f64> {
    check(nu, varphi)?;
    let p = abs(varphi);
    if p == 0.0 {
        return Ok(0.0);
    }
    if p < SERIES_THRESHOLD {
        return moments_series(nu, varphi).map(|m| m.0);
    }
    let m = match integer_nu(nu) {
        Some(k @ 1..=4) => mean_closed(k, p)?,
        Some(k) => {
            let q = 1.0 - p * p;
            form_b(p, half_family(k, -4.0 * p * p / (q * q))?)
        }
        None => {
            let a = mean_hypergeometric(nu, p)?;
            let b = mean_hypergeometric_alt(nu, p)?;
            if abs(a - b) > FORM_AGREEMENT * abs(a).max(1e-3) {
                return Err(Error::NotConverged { what: "hypergeometric mean forms disagree", iterations: 0 });
            }
            b
        }
    };
    Ok(m.copysign(varphi))
}

/// `μ2(ν, ϕ) = E Y_1²`. Beyond the closed forms this uses
/// `μ2 = 1 − ν + ν(1+ϕ²)μ1/(2ϕ)`, obtained by integrating
/// `d/dy[(1−y²)^{ν/2}(1+ϕ²−2ϕy)^{−ν}]` over `(−1, 1)`.
pub fn marginal_second_moment(nu: f64, varphi: f64) -> Result<f64> {
    check(nu, varphi)?;
    let p = abs(varphi);
    if p < SERIES_THRESHOLD {
        if p == 0.0 {
            return Ok(1.0 / (nu + 1.0));
        }
        return moments_series(nu, p).map(|m| m.1);
    }
    if let Some(k @ 1..=4) = integer_nu(nu) {
        return second_moment_closed(k, p);
    }
    let m1 = marginal_mean(nu, p)?;
    Ok(1.0 - nu + nu * (1.0 + p * p) * m1 / (2.0 * p))
}

pub fn marginal_variance(nu: f64, varphi: f64) -> Result<f64> {
    let m1 = marginal_mean(nu, varphi)?;
    Ok(marginal_second_moment(nu, varphi)? - m1 * m1)
}

/// Mean vector and second-moment matrix `E(YYᵀ)` of `C*_d(φ)` on
/// `S^d ⊂ R^{d+1}`. `‖φ‖ > 1` is replaced by `φ/‖φ‖²`, which gives the same
/// law.
pub fn sphere_mean_scatter(phi: &Vector) -> Result<(Vector, Matrix)> {
    let n = phi.len();
    if n < 2 {
        return Err(Error::InvalidParameter("phi must have at least 2 coordinates".into()));
    }
    let d = (n - 1) as f64;
    let norm = phi.norm();
    if !norm.is_finite() || abs(norm - 1.0) <= crate::moebius::UNIT_NORM_GUARD {
        return Err(Error::Domain(format!("|phi| must differ from 1, got {norm}")));
    }
    if norm == 0.0 {
        return Ok((Vector::zeros(n), Matrix::identity(n, n) / (d + 1.0)));
    }
    let r = if norm > 1.0 { 1.0 / norm } else { norm };
    let u = phi / norm;
    let m1 = marginal_mean(d, r)?;
    let m2 = marginal_second_moment(d, r)?;
    let scatter = (Matrix::identity(n, n) * (1.0 - m2) + &u * u.transpose() * ((d + 1.0) * m2 - 1.0)) / d;
    Ok((u * m1, scatter))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomEstimate {
    pub phi: Vector,
    /// `‖ȳ‖` exceeded `μ1(d)` at the top of the searched range.
    pub clamped: bool,
}

/// Method-of-moments estimate of `φ` from unit vectors in `R^{d+1}`: the
/// direction of the sample mean, with `‖φ̂‖` solving `μ1(d, r) = ‖ȳ‖`.
pub fn mom_estimate(sample: &[Vector]) -> Result<MomEstimate> {
    let first = sample.first().ok_or(Error::Empty)?;
    let n = first.len();
    if n < 2 {
        return Err(Error::InvalidParameter("points must have at least 2 coordinates".into()));
    }
    let mut mean = Vector::zeros(n);
    for y in sample {
        crate::error::check_dim(n, y.len())?;
        mean += y;
    }
    mean /= sample.len() as f64;
    let target = mean.norm();
    if target == 0.0 {
        return Ok(MomEstimate { phi: Vector::zeros(n), clamped: false });
    }
    let d = (n - 1) as f64;
    let mu1 = |r: f64| marginal_mean(d, r);
    let grid: Vec<f64> = (1..=400).map(|k| MOM_R_MAX * k as f64 / 400.0).collect();
    let mut prev = 0.0;
    for &r in &grid {
        let v = mu1(r)?;
        if !(v > prev) {
            return Err(Error::NonMonotone(format!("mu1({d}, r) = {v} at r = {r} does not exceed {prev}")));
        }
        prev = v;
    }
    let dir = mean / target;
    if target >= prev {
        return Ok(MomEstimate { phi: dir * MOM_R_MAX, clamped: true });
    }
    let (mut lo, mut hi) = (0.0, MOM_R_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mu1(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MomEstimate { phi: dir * (0.5 * (lo + hi)), clamped: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::quadrature::{gauss_legendre, gauss_legendre_fixed};
    use crate::sampling::RngStream;
    use proptest::prelude::*;

    /// `E Y_1^k` by Gauss–Legendre in `y = sin t` over 64 panels.
    fn quad_moment(nu: f64, p: f64, k: i32) -> f64 {
        let dist = crate::densities::MarginalCauchyBeta::new(p, nu).unwrap();
        let nodes = gauss_legendre(40);
        let h = core::f64::consts::PI / 64.0;
        let mut s = 0.0;
        for j in 0..64 {
            let a = -core::f64::consts::FRAC_PI_2 + j as f64 * h;
            s += gauss_legendre_fixed(
                |t: f64| {
                    let y = libm::sin(t);
                    libm::pow(y, k as f64) * dist.pdf(y).unwrap_or(0.0) * libm::cos(t)
                },
                a,
                a + h,
                &nodes,
            );
        }
        s
    }

    #[test]
    fn documented_values() {
        assert!((marginal_mean(1.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((marginal_mean(3.0, 0.5).unwrap() - 0.6875).abs() < 1e-15);
        assert!((marginal_second_moment(1.0, 0.5).unwrap() - 0.625).abs() < 1e-15);
        assert!((marginal_second_moment(3.0, 0.5).unwrap() - 0.578125).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for nu in 1..=4 {
            for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let q1 = quad_moment(nu as f64, p, 1);
                let q2 = quad_moment(nu as f64, p, 2);
                assert!((mean_closed(nu, p).unwrap() - q1).abs() < 1e-9, "nu={nu} p={p}");
                assert!((second_moment_closed(nu, p).unwrap() - q2).abs() < 1e-9, "nu={nu} p={p}");
            }
        }
    }

    #[test]
    fn hypergeometric_forms_match_closed() {
        for nu in 1..=4 {
            for p in [0.1, 0.4, 0.8, 0.95] {
                let c1 = mean_closed(nu, p).unwrap();
                assert!((mean_hypergeometric(nu as f64, p).unwrap() - c1).abs() < 1e-10);
                assert!((mean_hypergeometric_alt(nu as f64, p).unwrap() - c1).abs() < 1e-10);
                let c2 = second_moment_closed(nu, p).unwrap();
                assert!((second_moment_hypergeometric(nu as f64, p).unwrap() - c2).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn recursion_matches_direct() {
        for z in [-1.0, -2.7, -40.0, -1e4] {
            for nu in 5..=8 {
                let direct = f21(0.5, (nu as f64 - 1.0) / 2.0, (nu as f64 + 1.0) / 2.0, z).unwrap();
                let rec = half_family(nu, z).unwrap();
                assert!((direct - rec).abs() < 1e-12 * direct.abs().max(1.0), "nu={nu} z={z}");
            }
        }
    }

    #[test]
    fn series_matches_other_routes() {
        for nu in [1.0, 2.0, 2.5, 4.0, 7.0] {
            for p in [0.02, 0.2, 0.45] {
                let (s1, s2) = moments_series(nu, p).unwrap();
                assert!((s1 - mean_hypergeometric(nu, p).unwrap()).abs() < 1e-11);
                assert!((s2 - second_moment_hypergeometric(nu, p).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn high_nu_matches_quadrature() {
        for nu in [5.0, 6.0, 2.5, 7.3] {
            for p in [0.3, 0.6, 0.85] {
                assert!((marginal_mean(nu, p).unwrap() - quad_moment(nu, p, 1)).abs() < 1e-9);
                assert!((marginal_second_moment(nu, p).unwrap() - quad_moment(nu, p, 2)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(marginal_mean(2.0, 1.0).is_err());
        assert!(marginal_second_moment(2.0, -1.5).is_err());
        assert!(marginal_mean(0.0, 0.3).is_err());
    }

    #[test]
    fn uniform_scatter() {
        let (m, s) = sphere_mean_scatter(&Vector::zeros(3)).unwrap();
        assert_eq!(m.norm(), 0.0);
        assert!((s - Matrix::identity(3, 3) / 3.0).amax() < 1e-15);
    }

    #[test]
    fn mom_inverts_mean_for_circle() {
        let pts = [Vector::from_column_slice(&[1.0, 0.0]), Vector::from_column_slice(&[-0.4, 0.0])];
        let est = mom_estimate(&pts).unwrap();
        assert!((est.phi - Vector::from_column_slice(&[0.3, 0.0])).amax() < 1e-12);
        assert!(!est.clamped);
    }

    #[test]
    fn mom_clamps_point_mass() {
        let y = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
        let est = mom_estimate(&[y.clone(), y]).unwrap();
        assert!(est.clamped);
    }

    #[test]
    fn mom_recovers_sphere_parameter() {
        let mut rng = RngStream::new(21, 0);
        let phi = Vector::from_column_slice(&[0.6, 0.0, 0.0]);
        let ys = crate::sampling::sample_sphere_cauchy(&phi, 100_000, &mut rng).unwrap();
        let est = mom_estimate(&ys).unwrap();
        assert!((est.phi - phi).norm() < 0.02);
    }

    proptest! {
        #[test]
        fn parity_and_bounds(nu in 0.5f64..9.0, p in -0.99f64..0.99) {
            let m1 = marginal_mean(nu, p).unwrap();
            let m2 = marginal_second_moment(nu, p).unwrap();
            prop_assert!((m1 + marginal_mean(nu, -p).unwrap()).abs() < 1e-14);
            prop_assert!((m2 - marginal_second_moment(nu, -p).unwrap()).abs() < 1e-14);
            prop_assert!(m1.abs() <= 1.0 && m2 <= 1.0 + 1e-12 && m2 >= m1 * m1 - 1e-12);
        }

        #[test]
        fn mean_forms_agree(nu in 0.5f64..9.0, p in 0.05f64..0.95) {
            let a = mean_hypergeometric(nu, p).unwrap();
            let b = mean_hypergeometric_alt(nu, p).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn scatter_has_unit_trace(x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0) {
            let phi = Vector::from_column_slice(&[x, y, z]);
            prop_assume!((phi.norm() - 1.0).abs() > 1e-3);
            let (_, s) = sphere_mean_scatter(&phi).unwrap();
            prop_assert!((s.trace() - 1.0).abs() < 1e-12);
        }
    }
}
