//! Nelder–Mead simplex search with seeded random restarts.

use alloc::vec::Vec;

use crate::math::abs;
use crate::sampling::RngStream;
use crate::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Simplex diameter (sup-norm, relative to `1 + |x|`) at which to stop.
    pub xtol: f64,
    /// Spread of function values at which to stop.
    pub ftol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_evals: 20_000, xtol: 1e-11, ftol: 1e-15 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vector,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Minimizes `f` from `x0` with initial simplex edges `step`. Non-finite
    /// values are treated as `+∞`.
    pub fn minimize<F: FnMut(&Vector) -> f64>(&self, mut f: F, x0: &Vector, step: &Vector) -> OptimResult {
        let n = x0.len();
        let mut evals = 0usize;
        let mut eval = |x: &Vector, evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        let mut simplex: Vec<(Vector, f64)> = Vec::with_capacity(n + 1);
        let f0 = eval(x0, &mut evals);
        simplex.push((x0.clone(), f0));
        for i in 0..n {
            let mut x = x0.clone();
            x[i] += if step[i] != 0.0 { step[i] } else { 1e-3 };
            let fx = eval(&x, &mut evals);
            simplex.push((x, fx));
        }
        let mut converged = false;
        while evals < self.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = &simplex[0];
            let worst = &simplex[n];
            let scale = 1.0 + best.0.amax();
            let diam = simplex[1..]
                .iter()
                .map(|(x, _)| (x - &best.0).amax())
                .fold(0.0, f64::max);
            if diam <= self.xtol * scale && abs(worst.1 - best.1) <= self.ftol * (1.0 + abs(best.1)) {
                converged = true;
                break;
            }
            let centroid = simplex[..n].iter().fold(Vector::zeros(n), |acc, (x, _)| acc + x) / n as f64;
            let xr = &centroid * 2.0 - &simplex[n].0;
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = &centroid * 3.0 - &simplex[n].0 * 2.0;
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = (&centroid + &xr) * 0.5;
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = (&centroid + &simplex[n].0) * 0.5;
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        let x = (&x0 + &item.0) * 0.5;
                        let fx = eval(&x, &mut evals);
                        *item = (x, fx);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        OptimResult { x, value, evals, converged }
    }
}

/// Maximizes `f` from `x0`: one simplex run followed by `restarts` runs from
/// the incumbent with randomly scaled and perturbed simplices. Deterministic
/// given `seed`. The total budget is split evenly across runs.
pub fn numeric_argmax<F: FnMut(&Vector) -> f64>(
    mut f: F,
    x0: &Vector,
    step: &Vector,
    budget: usize,
    restarts: usize,
    seed: u64,
) -> OptimResult {
    let per_run = budget / (restarts + 1);
    let nm = NelderMead { max_evals: per_run.max(10), ..NelderMead::default() };
    let mut neg = |x: &Vector| -f(x);
    let mut best = nm.minimize(&mut neg, x0, step);
    let mut evals = best.evals;
    let mut all_converged = best.converged;
    let mut rng = RngStream::new(seed, 0x6e6d);
    for _ in 0..restarts {
        let start = Vector::from_fn(x0.len(), |i, _| best.x[i] + 0.1 * step[i] * rng.standard_normal());
        let s = Vector::from_fn(x0.len(), |i, _| step[i] * (0.5 + rng.uniform()));
        let run = nm.minimize(&mut neg, &start, &s);
        evals += run.evals;
        all_converged &= run.converged;
        if run.value < best.value {
            best = run;
        }
    }
    OptimResult { x: best.x, value: -best.value, evals, converged: all_converged }
}
