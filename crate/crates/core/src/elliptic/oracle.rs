//! Energy-minimization oracle for built-in maps.
//!
//! `J(u) = 1/2 sum_omega (u - z)^2 nu + lambda/2 sum_Q A(x,y,u(y)-u(x)) nu m
//!         - lambda sum_boundary phi u nu`
//! with `Q` the variant's pair region and `A` the primitive of the map. Its
//! gradient at `x` is `nu(x)` times the resolvent residual (boundary rows
//! times `lambda`). The gradient is accumulated pair by pair, independently
//! of the row assembly the Newton solver uses.

use crate::calculus::Field;
use crate::error::{Error, Result};
use crate::space::Node;

use super::EllipticProblem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    /// Relative residual target, scaled by `problem.scale()`.
    pub tol: f64,
    pub max_iter: usize,
    /// Nonlinear Gauss–Seidel sweeps run after the gradient phase if needed.
    pub max_sweeps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20_000,
            max_sweeps: 20_000,
        }
    }
}

struct Energy<'p, 'a> {
    pb: &'p EllipticProblem<'a>,
    closure: Vec<Node>,
    pairs: Vec<(usize, usize, Node, Node, f64)>,
    z: Vec<f64>,
    phi: Vec<f64>,
    interior: Vec<bool>,
    nu: Vec<f64>,
    precond: Vec<f64>,
}

impl<'p, 'a> Energy<'p, 'a> {
    fn new(pb: &'p EllipticProblem<'a>) -> Self {
        let (space, domain) = (pb.space, pb.domain);
        let closure = domain.closure().to_vec();
        let mut pos = vec![usize::MAX; space.node_count()];
        for (i, &x) in closure.iter().enumerate() {
            pos[x] = i;
        }
        let region = pb.variant.region();
        let mut pairs = Vec::new();
        for &x in &closure {
            for &(y, m) in space.row(x) {
                if y != x && region.contains(domain, x, y) {
                    pairs.push((pos[x], pos[y], x, y, space.nu(x) * m));
                }
            }
        }
        let interior: Vec<bool> = closure.iter().map(|&x| domain.in_omega(x)).collect();
        let nu: Vec<f64> = closure.iter().map(|&x| space.nu(x)).collect();
        let mut precond: Vec<f64> = interior.iter().zip(&nu).map(|(&i, &n)| if i { n } else { 0.0 }).collect();
        for &(i, j, x, y, c) in &pairs {
            let k = pb.map.coefficient(x, y).unwrap_or(1.0);
            precond[i] += 0.5 * pb.lambda * k * c;
            precond[j] += 0.5 * pb.lambda * k * c;
        }
        Self {
            z: closure.iter().map(|&x| pb.z.value(x).unwrap_or(0.0)).collect(),
            phi: closure.iter().map(|&x| pb.flux.value(x).unwrap_or(0.0)).collect(),
            pb,
            closure,
            pairs,
            interior,
            nu,
            precond,
        }
    }

    fn value(&self, u: &[f64]) -> f64 {
        let lambda = self.pb.lambda;
        let mut j = 0.0;
        for i in 0..u.len() {
            if self.interior[i] {
                j += 0.5 * (u[i] - self.z[i]).powi(2) * self.nu[i];
            } else {
                j -= lambda * self.phi[i] * u[i] * self.nu[i];
            }
        }
        let pair: f64 = self
            .pairs
            .iter()
            .map(|&(i, k, x, y, c)| self.pb.map.primitive(x, y, u[k] - u[i]).unwrap_or(0.0) * c)
            .sum();
        j + 0.5 * lambda * pair
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let lambda = self.pb.lambda;
        let mut g: Vec<f64> = (0..u.len())
            .map(|i| {
                if self.interior[i] {
                    (u[i] - self.z[i]) * self.nu[i]
                } else {
                    -lambda * self.phi[i] * self.nu[i]
                }
            })
            .collect();
        for &(i, k, x, y, c) in &self.pairs {
            let a = 0.5 * lambda * self.pb.map.eval(x, y, u[k] - u[i]) * c;
            g[k] += a;
            g[i] -= a;
        }
        g
    }

    /// Residual of the resolvent system recovered from the gradient.
    fn residual_inf(&self, g: &[f64]) -> f64 {
        (0..g.len())
            .map(|i| {
                let w = if self.interior[i] { self.nu[i] } else { self.pb.lambda * self.nu[i] };
                (g[i] / w).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Partial derivative of `J` in coordinate `i` at `u` with `u[i] = t`.
    fn partial(&self, u: &mut [f64], i: usize, t: f64) -> f64 {
        u[i] = t;
        let lambda = self.pb.lambda;
        let mut g = if self.interior[i] {
            (t - self.z[i]) * self.nu[i]
        } else {
            -lambda * self.phi[i] * self.nu[i]
        };
        for &(a, b, x, y, c) in &self.pairs {
            if a == i || b == i {
                let v = 0.5 * lambda * self.pb.map.eval(x, y, u[b] - u[a]) * c;
                if b == i {
                    g += v;
                }
                if a == i {
                    g -= v;
                }
            }
        }
        g
    }

    /// Exact minimization of `J` along coordinate `i`.
    fn coordinate_min(&self, u: &mut [f64], i: usize) {
        let start = u[i];
        let mut step = 1e-3 * (1.0 + start.abs());
        let (mut lo, mut hi) = (start - step, start + step);
        let mut guard = 0;
        while self.partial(u, i, lo) > 0.0 && guard < 200 {
            step *= 2.0;
            lo -= step;
            guard += 1;
        }
        while self.partial(u, i, hi) < 0.0 && guard < 400 {
            step *= 2.0;
            hi += step;
            guard += 1;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.partial(u, i, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        u[i] = 0.5 * (lo + hi);
    }
}

pub fn oracle_solve(problem: &EllipticProblem<'_>) -> Result<Field> {
    oracle_solve_with(problem, &OracleOptions::default())
}

/// Accelerated gradient descent with backtracking and function-value
/// restarts, then Gauss–Seidel sweeps of exact coordinate minimization until
/// the residual target is met.
pub fn oracle_solve_with(problem: &EllipticProblem<'_>, opts: &OracleOptions) -> Result<Field> {
    if !problem.map.is_potential() {
        return Err(Error::NotPotential);
    }
    let e = Energy::new(problem);
    let target = opts.tol * problem.scale();
    let mean = problem.z.values().iter().sum::<f64>() / problem.z.len() as f64;
    let mut u: Vec<f64> = e
        .closure
        .iter()
        .zip(&e.interior)
        .map(|(&x, &inside)| if inside { problem.z.value(x).unwrap_or(mean) } else { mean })
        .collect();

    let mut y = u.clone();
    let mut theta = 1.0f64;
    let mut t = 1.0f64;
    let mut ju = e.value(&u);
    let mut done = false;
    for _ in 0..opts.max_iter {
        let g = e.gradient(&y);
        if e.residual_inf(&e.gradient(&u)) <= target {
            done = true;
            break;
        }
        let jy = e.value(&y);
        let decrement: f64 = g.iter().zip(&e.precond).map(|(gi, p)| gi * gi / p).sum();
        let mut next;
        loop {
            next = y.iter().zip(&g).zip(&e.precond).map(|((yi, gi), p)| yi - t * gi / p).collect::<Vec<_>>();
            if e.value(&next) <= jy - 0.5 * t * decrement || t < 1e-20 {
                break;
            }
            t *= 0.5;
        }
        let jn = e.value(&next);
        if jn > ju {
            // Momentum overshot; restart from the last iterate.
            theta = 1.0;
            y = u.clone();
            continue;
        }
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        y = next.iter().zip(&u).map(|(a, b)| a + beta * (a - b)).collect();
        u = next;
        ju = jn;
        theta = theta_next;
        t *= 1.25;
    }

    if !done {
        for _ in 0..opts.max_sweeps {
            for i in 0..u.len() {
                e.coordinate_min(&mut u, i);
            }
            if e.residual_inf(&e.gradient(&u)) <= target {
                done = true;
                break;
            }
        }
    }
    let residual = e.residual_inf(&e.gradient(&u));
    if !done && residual > target {
        return Err(Error::NonConvergence {
            what: "energy oracle",
            residual,
            iterations: opts.max_iter + opts.max_sweeps,
        });
    }
    Field::new(e.closure.clone(), u)
}
