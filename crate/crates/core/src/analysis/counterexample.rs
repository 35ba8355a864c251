//! Truncated star graph on which the Poincaré inequality fails in the limit.
//!
//! Hub `x_0` is joined to leaves `x_1..x_N` with `w(x_0, x_n) = 7^{-n}`; each
//! leaf carries a loop `3^{-n} - 7^{-n}`, so `nu(x_n) = 3^{-n}` and
//! `m_{x_n}({x_0}) = (3/7)^n`. With `omega = {x_0}`,
//! `u(x_n) = 2^{n/(p-1)}` solves the GL problem with flux `(6/7)^n` and
//! right-hand side `v(x_0) = -12/5` in the infinite graph.

use serde::Serialize;

use crate::calculus::{m_divergence, neumann_flux, BoundaryVariant, Field};
use crate::error::{Error, Result};
use crate::kernel::make_plaplacian;
use crate::space::{build_graph_space, m_boundary, Domain, Space};

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub levels: usize,
    pub p: f64,
    pub space: Space,
    pub domain: Domain,
    /// `0` at the hub, `2^{n/(p-1)}` at leaf `n`.
    pub u: Field,
    /// `u - div_m a_p u` at the hub.
    pub v: Field,
    /// GL flux of `u` on the leaves.
    pub flux: Field,
}

pub fn build_counterexample(levels: usize, p: f64) -> Result<Counterexample> {
    if levels == 0 {
        return Err(Error::InvalidParameter("levels must be at least 1".into()));
    }
    let map = make_plaplacian(p)?;
    let mut edges = Vec::with_capacity(2 * levels);
    for n in 1..=levels {
        let spoke = 7f64.powi(-(n as i32));
        edges.push((0, n, spoke));
        edges.push((n, n, 3f64.powi(-(n as i32)) - spoke));
    }
    let space = build_graph_space(&edges)?;
    let domain = m_boundary(&space, &[0])?;
    let u = Field::from_fn(domain.closure(), |x| {
        if x == 0 {
            0.0
        } else {
            2f64.powf(x as f64 / (p - 1.0))
        }
    });
    let div = m_divergence(&space, &domain, &map, &u, &[0])?;
    let v = div.map(|x, d| u.value(x).unwrap_or(0.0) - d);
    let flux = neumann_flux(&space, &domain, &map, &u, BoundaryVariant::Gl)?;
    Ok(Counterexample {
        levels,
        p,
        space,
        domain,
        u,
        v,
        flux,
    })
}

/// `v(x_0)` on the `N`-level truncation, from geometric sums:
/// `-(12/5) (1 - (2/7)^N) / (1 - 7^{-N})`.
pub fn truncated_hub_value(levels: usize) -> f64 {
    let n = levels as i32;
    -(12.0 / 5.0) * (1.0 - (2.0f64 / 7.0).powi(n)) / (1.0 - 7f64.powi(-n))
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleRow {
    pub level: usize,
    pub u: f64,
    pub u_expected: f64,
    pub flux: f64,
    pub flux_expected: f64,
    pub boundary_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleCheck {
    pub rows: Vec<CounterexampleRow>,
    pub hub_value: f64,
    pub hub_expected: f64,
    pub hub_residual: f64,
    pub max_boundary_residual: f64,
}

/// Relative residuals of the flux against `(6/7)^n` and of `v(x_0)` against
/// [`truncated_hub_value`].
pub fn check_counterexample(ce: &Counterexample) -> Result<CounterexampleCheck> {
    let mut rows = Vec::with_capacity(ce.levels);
    let mut worst = 0.0f64;
    for n in 1..=ce.levels {
        let flux = ce.flux.get(n)?;
        let expected = (6.0f64 / 7.0).powi(n as i32);
        let residual = (flux - expected).abs() / expected;
        worst = worst.max(residual);
        rows.push(CounterexampleRow {
            level: n,
            u: ce.u.get(n)?,
            u_expected: 2f64.powf(n as f64 / (ce.p - 1.0)),
            flux,
            flux_expected: expected,
            boundary_residual: residual,
        });
    }
    let hub = ce.v.get(0)?;
    let hub_expected = truncated_hub_value(ce.levels);
    Ok(CounterexampleCheck {
        rows,
        hub_value: hub,
        hub_expected,
        hub_residual: (hub - hub_expected).abs() / hub_expected.abs(),
        max_boundary_residual: worst,
    })
}
