//! Poincaré constants, the star-graph counterexample and the `p = 2` energy
//! checks.

mod counterexample;
mod poincare;

pub use counterexample::{
    build_counterexample, check_counterexample, truncated_hub_value, Counterexample,
    CounterexampleCheck, CounterexampleRow,
};
pub use poincare::{
    boundary_poincare_p2, boundary_poincare_ratio, poincare_p2, poincare_probe, poincare_ratio,
    PoincareReport, PROBE_RESTARTS,
};

use serde::Serialize;

use crate::calculus::{dense_div, dense_flux, dirichlet_energy, BoundaryVariant, Field};
use crate::elliptic::extend_boundary_gl;
use crate::error::{Error, Result};
use crate::kernel::make_plaplacian;
use crate::space::{pair_integral, Domain, Region, Space};

/// A signed quantity that must stay above `-tol * scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Slack {
    pub value: f64,
    pub scale: f64,
}

impl Slack {
    pub fn holds(&self, tol: f64) -> bool {
        self.value >= -tol * self.scale
    }
}

/// `max_{x in boundary, phi(x) != 0} |phi(x)| / m_x(omega)`; infinite when a
/// loaded node sees no mass of omega.
pub fn lm_infinity_norm(space: &Space, domain: &Domain, flux: &Field) -> Result<f64> {
    domain.ensure_compatible(space)?;
    let mut worst = 0.0f64;
    for &x in domain.boundary() {
        let phi = flux.value(x).unwrap_or(0.0);
        if phi == 0.0 {
            continue;
        }
        let mass = domain.omega_mass(x);
        if mass <= domain.eps_boundary() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(phi.abs() / mass);
    }
    Ok(worst)
}

fn homogeneous_boundary_defect(space: &Space, domain: &Domain, u: &[f64]) -> f64 {
    let map = make_plaplacian(2.0).expect("p = 2 is valid");
    domain
        .boundary()
        .iter()
        .map(|&x| dense_flux(space, domain, &map, u, x, BoundaryVariant::Gl).abs())
        .fold(0.0, f64::max)
}

fn field_scale(u: &Field) -> f64 {
    1.0 + u.sup_norm()
}

/// `min_w F(w) - F(u) - sum_omega v (w - u) nu` with `F` the `p = 2` GL
/// energy; each sample is extended to the boundary by its own homogeneous
/// boundary equations.
pub fn subdifferential_gap_p2(
    space: &Space,
    domain: &Domain,
    u: &Field,
    v: &Field,
    w_samples: &[Field],
) -> Result<Slack> {
    domain.ensure_compatible(space)?;
    u.ensure_covers(domain.closure())?;
    v.ensure_covers(domain.omega())?;
    let map = make_plaplacian(2.0)?;
    let dense = u.to_dense(space.node_count(), 0.0);
    let tol = 1e-10 * (field_scale(u) + v.sup_norm());
    let defect = homogeneous_boundary_defect(space, domain, &dense);
    if defect > tol {
        return Err(Error::Precondition(format!(
            "u violates the homogeneous boundary equations by {defect:.3e}"
        )));
    }
    for &x in domain.omega() {
        let gap = (v.get(x)? + dense_div(space, domain, &map, &dense, x)).abs();
        if gap > tol {
            return Err(Error::Precondition(format!(
                "v differs from -div u by {gap:.3e} at node {x}"
            )));
        }
    }

    let fu = dirichlet_energy(space, domain, u, 2.0, BoundaryVariant::Gl)?;
    let zero = Field::constant(domain.boundary(), 0.0);
    let mut out = Slack {
        value: f64::INFINITY,
        scale: 1.0 + fu,
    };
    for w in w_samples {
        let interior = w.restrict(domain.omega())?;
        let trace = extend_boundary_gl(space, domain, &map, &interior, &zero)?;
        let full = interior.join(&trace)?;
        let fw = dirichlet_energy(space, domain, &full, 2.0, BoundaryVariant::Gl)?;
        let mut pairing = 0.0;
        for (x, wx) in interior.iter() {
            pairing += v.get(x)? * (wx - dense[x]) * space.nu(x);
        }
        out.value = out.value.min(fw - fu - pairing);
        out.scale = out.scale.max(1.0 + fw + pairing.abs());
    }
    if w_samples.is_empty() {
        out.value = 0.0;
    }
    Ok(out)
}

/// `sum_omega D^2 nu - sum_boundary m_x(omega) D^2 nu
///  - sum_{boundary x boundary} (D(y) - D(x))^2 nu m` with `D = u_1 - u_2`.
pub fn boundary_contraction_check(space: &Space, domain: &Domain, u1: &Field, u2: &Field) -> Result<Slack> {
    domain.ensure_compatible(space)?;
    u1.ensure_covers(domain.closure())?;
    u2.ensure_covers(domain.closure())?;
    let a = u1.to_dense(space.node_count(), 0.0);
    let b = u2.to_dense(space.node_count(), 0.0);
    for (u, f) in [(&a, u1), (&b, u2)] {
        let defect = homogeneous_boundary_defect(space, domain, u);
        if defect > 1e-10 * field_scale(f) {
            return Err(Error::Precondition(format!(
                "field violates the homogeneous boundary relation by {defect:.3e}"
            )));
        }
    }
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let interior: f64 = domain.omega().iter().map(|&x| diff[x].powi(2) * space.nu(x)).sum();
    let edge: f64 = domain
        .boundary()
        .iter()
        .map(|&x| domain.omega_mass(x) * diff[x].powi(2) * space.nu(x))
        .sum();
    let cross = pair_integral(space, domain, Region::BoundaryPair, |x, y| (diff[y] - diff[x]).powi(2));
    Ok(Slack {
        value: interior - (edge + cross),
        scale: interior + edge + cross,
    })
}
