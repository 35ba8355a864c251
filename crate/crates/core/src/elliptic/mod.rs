//! Resolvent problems `u - lambda div_m a_p u = z` in omega with `N u = phi`
//! on the m-boundary.
//!
//! [`solve_resolvent`] is the production path: a monolithic damped Newton
//! iteration over all closure unknowns. [`solve_penalized`] follows the
//! truncation and penalization construction and is kept as a reference path.
//! [`oracle_solve`] minimizes the convex energy whose gradient is the residual
//! system and shares no assembly code with the Newton path.

mod boundary;
mod oracle;
mod penalized;

pub use boundary::{extend_boundary_drov, extend_boundary_gl};
pub use oracle::{oracle_solve, oracle_solve_with, OracleOptions};
pub use penalized::{solve_penalized, solve_penalized_path, PenaltyParams};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::calculus::{row_flux_sum, BoundaryVariant, Field};
use crate::error::{Error, Result};
use crate::kernel::LerayLionsMap;
use crate::newton::{newton_solve, sup_norm, NewtonOptions, NewtonSystem};
use crate::par_map;
use crate::space::{Domain, Node, Space};

#[derive(Clone, Debug)]
pub struct EllipticProblem<'a> {
    pub space: &'a Space,
    pub domain: &'a Domain,
    pub map: LerayLionsMap,
    pub variant: BoundaryVariant,
    pub lambda: f64,
    /// Right-hand side on omega.
    pub z: Field,
    /// Boundary flux on the m-boundary.
    pub flux: Field,
}

impl<'a> EllipticProblem<'a> {
    pub fn new(
        space: &'a Space,
        domain: &'a Domain,
        map: LerayLionsMap,
        variant: BoundaryVariant,
        lambda: f64,
        z: Field,
        flux: Field,
    ) -> Result<Self> {
        domain.ensure_compatible(space)?;
        map.ensure_fits(space)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
        }
        let z = z.restrict(domain.omega())?;
        let flux = flux.restrict(domain.boundary())?;
        for (x, phi) in flux.iter() {
            if phi != 0.0 && domain.omega_mass(x) < domain.eps_boundary() {
                return Err(Error::BoundaryMassTooSmall {
                    node: x,
                    mass: domain.omega_mass(x),
                });
            }
        }
        Ok(Self {
            space,
            domain,
            map,
            variant,
            lambda,
            z,
            flux,
        })
    }

    /// `1 + |z|_inf + |phi|_inf`, the scale of the relative tolerance.
    pub fn scale(&self) -> f64 {
        1.0 + self.z.sup_norm() + self.flux.sup_norm()
    }

    /// Same problem with a new right-hand side.
    pub fn with_z(&self, z: Field) -> Result<Self> {
        Self::new(
            self.space,
            self.domain,
            self.map.clone(),
            self.variant,
            self.lambda,
            z,
            self.flux.clone(),
        )
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
        }
        out.lambda = lambda;
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance; the absolute target is `tol * problem.scale()`.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub min_step: f64,
    pub polish: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let n = NewtonOptions::default();
        Self {
            tol: 1e-12,
            max_iter: n.max_iter,
            armijo: n.armijo,
            min_step: n.min_step,
            polish: n.polish,
        }
    }
}

impl SolverOptions {
    fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            max_iter: self.max_iter,
            armijo: self.armijo,
            min_step: self.min_step,
            polish: self.polish,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    /// Solution on the m-closure.
    pub u: Field,
    pub residual_inf: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `|sum_omega (u - z) nu - lambda sum_boundary phi nu|`.
    pub mass_identity_gap: f64,
    #[serde(skip)]
    pub penalized_path: Option<Vec<Field>>,
}

impl SolveReport {
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NonConvergence {
                what: "resolvent solve",
                residual: self.residual_inf,
                iterations: self.iterations,
            })
        }
    }
}

/// Truncation and penalty terms of the reference scheme.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Penalty {
    pub n: f64,
    pub k: f64,
    pub truncation: f64,
}

impl Penalty {
    #[inline]
    fn value(&self, p: f64, u: f64) -> f64 {
        let s = if u == 0.0 { 0.0 } else { u.signum() * u.abs().powf(p - 1.0) };
        if u > 0.0 {
            s / self.n
        } else {
            s / self.k
        }
    }

    #[inline]
    fn deriv(&self, p: f64, u: f64) -> f64 {
        let d = if p == 2.0 {
            1.0
        } else if p < 2.0 {
            let delta = crate::kernel::DERIV_DELTA;
            (p - 1.0) * (u * u + delta * delta).powf(0.5 * (p - 2.0))
        } else {
            (p - 1.0) * u.abs().powf(p - 2.0)
        };
        if u > 0.0 {
            d / self.n
        } else {
            d / self.k
        }
    }

    #[inline]
    fn truncate_data(&self, v: f64) -> f64 {
        v.min(self.n).max(-self.k)
    }
}

/// Residual system over the closure unknowns, in closure order.
pub(crate) struct ResolventSystem<'p, 'a> {
    problem: &'p EllipticProblem<'a>,
    closure: Vec<Node>,
    pos: Vec<usize>,
    z: Vec<f64>,
    phi: Vec<f64>,
    penalty: Option<Penalty>,
}

const NOT_IN_CLOSURE: usize = usize::MAX;

impl<'p, 'a> ResolventSystem<'p, 'a> {
    pub(crate) fn new(problem: &'p EllipticProblem<'a>, penalty: Option<Penalty>) -> Self {
        let n = problem.space.node_count();
        let closure = problem.domain.closure().to_vec();
        let mut pos = vec![NOT_IN_CLOSURE; n];
        for (i, &x) in closure.iter().enumerate() {
            pos[x] = i;
        }
        let mut z = problem.z.to_dense(n, 0.0);
        let mut phi = problem.flux.to_dense(n, 0.0);
        if let Some(pen) = penalty {
            for &x in problem.domain.omega() {
                z[x] = pen.truncate_data(z[x]);
            }
            if problem.variant == BoundaryVariant::Gl {
                for &x in problem.domain.boundary() {
                    phi[x] = pen.truncate_data(phi[x]);
                }
            }
        }
        Self {
            problem,
            closure,
            pos,
            z,
            phi,
            penalty,
        }
    }

    fn dense(&self, x: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.problem.space.node_count()];
        for (i, &node) in self.closure.iter().enumerate() {
            u[node] = x[i];
        }
        u
    }

    fn row_residual(&self, u: &[f64], x: Node) -> f64 {
        let pb = self.problem;
        let (space, domain, map) = (pb.space, pb.domain, &pb.map);
        let p = map.p();
        if domain.in_omega(x) {
            let div = row_flux_sum(space, map, u, x, |y| domain.in_closure(y));
            match self.penalty {
                None => u[x] - pb.lambda * div - self.z[x],
                Some(pen) => {
                    let t = u[x].min(pen.truncation).max(-pen.truncation);
                    t - pb.lambda * div + pen.value(p, u[x]) - self.z[x]
                }
            }
        } else {
            let flux = -row_flux_sum(space, map, u, x, |y| pb.variant.flux_target(domain, y));
            match self.penalty {
                None => flux - self.phi[x],
                Some(pen) => pb.lambda * (flux - self.phi[x]) + pen.value(p, u[x]),
            }
        }
    }

    fn row_jacobian(&self, u: &[f64], x: Node) -> Vec<(usize, f64)> {
        let pb = self.problem;
        let (space, domain, map) = (pb.space, pb.domain, &pb.map);
        let interior = domain.in_omega(x);
        let coupling = match (interior, self.penalty) {
            (true, _) | (false, Some(_)) => pb.lambda,
            (false, None) => 1.0,
        };
        let mut entries = Vec::with_capacity(space.row(x).len() + 1);
        let mut diag = 0.0;
        for &(y, prob) in space.row(x) {
            if y == x {
                continue;
            }
            let member = if interior {
                domain.in_closure(y)
            } else {
                pb.variant.flux_target(domain, y)
            };
            if !member {
                continue;
            }
            let d = map.deriv_or_fd(x, y, u[y] - u[x]) * prob * coupling;
            diag += d;
            entries.push((self.pos[y], -d));
        }
        if interior {
            diag += match self.penalty {
                None => 1.0,
                Some(pen) => {
                    let inside = u[x].abs() < pen.truncation;
                    (if inside { 1.0 } else { 0.0 }) + pen.deriv(map.p(), u[x])
                }
            };
        } else if let Some(pen) = self.penalty {
            diag += pen.deriv(map.p(), u[x]);
        }
        entries.push((self.pos[x], diag));
        entries
    }
}

impl NewtonSystem for ResolventSystem<'_, '_> {
    fn dim(&self) -> usize {
        self.closure.len()
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let u = self.dense(x);
        par_map(&self.closure, |node| self.row_residual(&u, node))
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let u = self.dense(x);
        let rows = par_map(&self.closure, |node| self.row_jacobian(&u, node));
        let d = self.closure.len();
        let mut jac = DMatrix::zeros(d, d);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row {
                jac[(i, j)] += v;
            }
        }
        jac
    }
}

/// `z` on omega; each boundary node gets the root of its own scalar
/// boundary equation against omega, or `mean(z)` when that fails.
pub(crate) fn initial_guess(problem: &EllipticProblem<'_>) -> Vec<f64> {
    let (space, domain) = (problem.space, problem.domain);
    let u = problem.z.to_dense(space.node_count(), 0.0);
    let mean = problem.z.values().iter().sum::<f64>() / problem.z.len() as f64;
    domain
        .closure()
        .iter()
        .map(|&x| {
            if domain.in_omega(x) {
                u[x]
            } else {
                let phi = problem.flux.value(x).unwrap_or(0.0);
                boundary::solve_scalar(space, domain, &problem.map, &u, x, phi).unwrap_or(mean)
            }
        })
        .collect()
}

pub(crate) fn mass_identity_gap(problem: &EllipticProblem<'_>, u: &Field) -> f64 {
    let space = problem.space;
    let mut lhs = 0.0;
    for (x, z) in problem.z.iter() {
        lhs += (u.value(x).unwrap_or(f64::NAN) - z) * space.nu(x);
    }
    let rhs: f64 = problem.flux.iter().map(|(x, phi)| phi * space.nu(x)).sum();
    (lhs - problem.lambda * rhs).abs()
}

pub(crate) fn run_newton(
    problem: &EllipticProblem<'_>,
    penalty: Option<Penalty>,
    x0: Vec<f64>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let system = ResolventSystem::new(problem, penalty);
    let out = newton_solve(&system, x0, opts.tol * problem.scale(), &opts.newton())?;
    let u = Field::new(problem.domain.closure().to_vec(), out.x)?;
    let gap = mass_identity_gap(problem, &u);
    Ok(SolveReport {
        u,
        residual_inf: out.residual_inf,
        iterations: out.iterations,
        converged: out.converged,
        mass_identity_gap: gap,
        penalized_path: None,
    })
}

/// Solves the resolvent problem by damped Newton from [`initial_guess`].
///
/// Non-convergence is reported through `converged = false`; use
/// [`SolveReport::ensure_converged`] to turn it into an error.
pub fn solve_resolvent(problem: &EllipticProblem<'_>, opts: &SolverOptions) -> Result<SolveReport> {
    run_newton(problem, None, initial_guess(problem), opts)
}

/// Residual sup-norm of `u` (a closure field) for the resolvent system.
pub fn resolvent_residual(problem: &EllipticProblem<'_>, u: &Field) -> Result<f64> {
    u.ensure_covers(problem.domain.closure())?;
    let system = ResolventSystem::new(problem, None);
    let x: Vec<f64> = problem
        .domain
        .closure()
        .iter()
        .map(|&n| u.value(n).unwrap_or(0.0))
        .collect();
    Ok(sup_norm(&system.residual(&x)))
}

/// `|u|_inf(omega) + (1/c)^{1/(p-1)} |phi / m(omega)|_inf^{1/(p-1)} - |u|_inf(boundary)`.
pub fn check_linf_boundary_bound(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    report: &SolveReport,
    flux: &Field,
) -> Result<f64> {
    domain.ensure_compatible(space)?;
    let u = &report.u;
    u.ensure_covers(domain.closure())?;
    let interior = u.restrict(domain.omega())?.sup_norm();
    let trace = u.restrict(domain.boundary())?.sup_norm();
    let ratio = crate::analysis::lm_infinity_norm(space, domain, flux)?;
    let e = 1.0 / (map.p() - 1.0);
    Ok(interior + (1.0 / map.c()).powf(e) * ratio.powf(e) - trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_plaplacian;
    use crate::space::{build_graph_space, m_boundary};

    #[test]
    fn two_node_hand_solve() {
        let s = build_graph_space(&[(0, 1, 1.0)]).unwrap();
        let d = m_boundary(&s, &[0]).unwrap();
        let pb = EllipticProblem::new(
            &s,
            &d,
            make_plaplacian(2.0).unwrap(),
            BoundaryVariant::Gl,
            1.0,
            Field::constant(&[0], 1.0),
            Field::constant(&[1], 0.5),
        )
        .unwrap();
        let r = solve_resolvent(&pb, &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.u.get(0).unwrap() - 1.5).abs() < 1e-14);
        assert!((r.u.get(1).unwrap() - 2.0).abs() < 1e-14);
        assert!(r.mass_identity_gap < 1e-14);
        let margin = check_linf_boundary_bound(&s, &d, &pb.map, &r, &pb.flux).unwrap();
        // 1.5 + 0.5 / 1 - 2.0
        assert!(margin.abs() < 1e-14);
    }

    #[test]
    fn constants_are_equilibria() {
        let s = build_graph_space(&[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 0, 0.5)]).unwrap();
        let d = m_boundary(&s, &[0, 1]).unwrap();
        for p in [1.5, 2.0, 3.0] {
            for v in [BoundaryVariant::Gl, BoundaryVariant::Drov] {
                let pb = EllipticProblem::new(
                    &s,
                    &d,
                    make_plaplacian(p).unwrap(),
                    v,
                    0.7,
                    Field::constant(d.omega(), -2.5),
                    Field::constant(d.boundary(), 0.0),
                )
                .unwrap();
                let r = solve_resolvent(&pb, &SolverOptions::default()).unwrap();
                assert_eq!(r.iterations, 0);
                assert!(r.u.values().iter().all(|&x| x == -2.5));
            }
        }
    }

    #[test]
    fn problem_validation() {
        let s = build_graph_space(&[(0, 1, 1.0)]).unwrap();
        let d = m_boundary(&s, &[0]).unwrap();
        let mk = |lambda, z: Field| {
            EllipticProblem::new(
                &s,
                &d,
                make_plaplacian(2.0).unwrap(),
                BoundaryVariant::Gl,
                lambda,
                z,
                Field::constant(&[1], 0.0),
            )
        };
        assert!(mk(0.0, Field::constant(&[0], 1.0)).is_err());
        assert!(matches!(mk(1.0, Field::constant(&[1], 1.0)), Err(Error::MissingNode(0))));
    }
}
