//! Boundary values slaved to interior data through the boundary equations.

use nalgebra::DMatrix;

use crate::calculus::{row_flux_sum, Field};
use crate::error::{Error, Result};
use crate::kernel::LerayLionsMap;
use crate::newton::{newton_solve, NewtonOptions, NewtonSystem};
use crate::space::{Domain, Node, Space};

const MAX_DOUBLINGS: usize = 200;

/// Root `r` of `-sum_{y in omega} a(x, y, u(y) - r) m_x({y}) = phi`.
///
/// The left side is nondecreasing in `r`, so exponential bracketing around the
/// `m_x`-mean of `u` over omega followed by bisection finds it.
pub(crate) fn solve_scalar(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    u: &[f64],
    x: Node,
    phi: f64,
) -> Result<f64> {
    let mass = domain.omega_mass(x);
    if !(mass >= domain.eps_boundary() && mass > 0.0) {
        return Err(Error::BoundaryMassTooSmall { node: x, mass });
    }
    let g = |r: f64| {
        let s: f64 = space
            .row(x)
            .iter()
            .filter(|&&(y, _)| domain.in_omega(y))
            .map(|&(y, p)| map.eval(x, y, u[y] - r) * p)
            .sum();
        -s - phi
    };
    let center = space
        .row(x)
        .iter()
        .filter(|&&(y, _)| domain.in_omega(y))
        .map(|&(y, p)| u[y] * p)
        .sum::<f64>()
        / mass;

    let mut step = 1.0 + center.abs();
    let (mut lo, mut hi) = (center - step, center + step);
    let mut doublings = 0;
    while g(lo) > 0.0 {
        step *= 2.0;
        lo -= step;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !lo.is_finite() {
            return Err(Error::BracketNotFound(x));
        }
    }
    while g(hi) < 0.0 {
        step *= 2.0;
        hi += step;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::BracketNotFound(x));
        }
    }

    let mut mid = 0.5 * (lo + hi);
    while hi - lo > 1e-14 * (1.0 + mid.abs()) {
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let next = 0.5 * (lo + hi);
        if next == lo || next == hi {
            break;
        }
        mid = next;
    }

    if map.has_derivative() {
        let slope: f64 = space
            .row(x)
            .iter()
            .filter(|&&(y, _)| domain.in_omega(y))
            .filter_map(|&(y, p)| map.deriv(x, y, u[y] - mid).map(|d| d * p))
            .sum();
        if slope > 0.0 {
            let polished = mid - g(mid) / slope;
            if polished.is_finite() && g(polished).abs() < g(mid).abs() {
                return Ok(polished);
            }
        }
    }
    Ok(mid)
}

fn interior_dense(space: &Space, domain: &Domain, map: &LerayLionsMap, u: &Field, flux: &Field) -> Result<Vec<f64>> {
    domain.ensure_compatible(space)?;
    map.ensure_fits(space)?;
    u.ensure_covers(domain.omega())?;
    flux.ensure_covers(domain.boundary())?;
    let mut dense = vec![0.0; space.node_count()];
    for &x in domain.omega() {
        dense[x] = u.get(x)?;
    }
    Ok(dense)
}

/// Boundary values solving the omega-only boundary equation node by node.
pub fn extend_boundary_drov(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    u_interior: &Field,
    flux: &Field,
) -> Result<Field> {
    let u = interior_dense(space, domain, map, u_interior, flux)?;
    let values = domain
        .boundary()
        .iter()
        .map(|&x| solve_scalar(space, domain, map, &u, x, flux.get(x)?))
        .collect::<Result<Vec<_>>>()?;
    Field::new(domain.boundary().to_vec(), values)
}

struct GlBoundary<'a> {
    space: &'a Space,
    domain: &'a Domain,
    map: &'a LerayLionsMap,
    base: Vec<f64>,
    phi: Vec<f64>,
    pos: Vec<usize>,
}

impl GlBoundary<'_> {
    fn dense(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.base.clone();
        for (i, &b) in self.domain.boundary().iter().enumerate() {
            u[b] = x[i];
        }
        u
    }
}

impl NewtonSystem for GlBoundary<'_> {
    fn dim(&self) -> usize {
        self.domain.boundary().len()
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let u = self.dense(x);
        self.domain
            .boundary()
            .iter()
            .map(|&b| {
                -row_flux_sum(self.space, self.map, &u, b, |y| self.domain.in_closure(y)) - self.phi[b]
            })
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let u = self.dense(x);
        let d = self.dim();
        let mut jac = DMatrix::zeros(d, d);
        for (i, &b) in self.domain.boundary().iter().enumerate() {
            for &(y, p) in self.space.row(b) {
                if y == b || !self.domain.in_closure(y) {
                    continue;
                }
                let a = self.map.deriv_or_fd(b, y, u[y] - u[b]) * p;
                jac[(i, i)] += a;
                if self.domain.in_boundary(y) {
                    jac[(i, self.pos[y])] -= a;
                }
            }
        }
        jac
    }
}

/// Boundary values solving the coupled closure-wide boundary equations with
/// omega held fixed.
pub fn extend_boundary_gl(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    u_interior: &Field,
    flux: &Field,
) -> Result<Field> {
    let base = interior_dense(space, domain, map, u_interior, flux)?;
    if domain.boundary().is_empty() {
        return Field::new(Vec::new(), Vec::new());
    }
    let mut pos = vec![usize::MAX; space.node_count()];
    for (i, &b) in domain.boundary().iter().enumerate() {
        pos[b] = i;
    }
    let system = GlBoundary {
        space,
        domain,
        map,
        phi: flux.to_dense(space.node_count(), 0.0),
        base,
        pos,
    };
    let x0 = domain
        .boundary()
        .iter()
        .map(|&b| solve_scalar(space, domain, map, &system.base, b, system.phi[b]))
        .collect::<Result<Vec<_>>>()?;
    let scale = 1.0 + u_interior.sup_norm() + flux.sup_norm();
    let out = newton_solve(&system, x0, 1e-13 * scale, &NewtonOptions::default())?;
    if !out.converged {
        return Err(Error::NonConvergence {
            what: "boundary extension",
            residual: out.residual_inf,
            iterations: out.iterations,
        });
    }
    Field::new(domain.boundary().to_vec(), out.x)
}
