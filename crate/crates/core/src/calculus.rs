//! Nonlocal gradient, m-divergence, Neumann boundary operators and the
//! integration-by-parts identities tying them together.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::LerayLionsMap;
use crate::par_map;
use crate::space::{pair_integral, Domain, Node, Region, Space};

/// Which boundary operator closes the problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryVariant {
    /// Flux integrates over the whole closure.
    Gl,
    /// Flux integrates over `omega` only.
    Drov,
}

impl BoundaryVariant {
    /// Pair region carrying the energy of the variant.
    pub fn region(self) -> Region {
        match self {
            BoundaryVariant::Gl => Region::Q1,
            BoundaryVariant::Drov => Region::Q2,
        }
    }

    /// Whether `y` takes part in the flux sum at a boundary node.
    #[inline]
    pub(crate) fn flux_target(self, domain: &Domain, y: Node) -> bool {
        match self {
            BoundaryVariant::Gl => domain.in_closure(y),
            BoundaryVariant::Drov => domain.in_omega(y),
        }
    }
}

/// Real values on a sorted node subset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Field {
    support: Vec<Node>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(support: Vec<Node>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} nodes but {} values",
                support.len(),
                values.len()
            )));
        }
        Self::from_pairs(support.into_iter().zip(values).collect())
    }

    pub fn from_pairs(mut pairs: Vec<(Node, f64)>) -> Result<Self> {
        pairs.sort_by_key(|&(x, _)| x);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter(format!("node {} given twice", w[0].0)));
            }
        }
        if let Some(&(x, v)) = pairs.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("value {v} at node {x} is not finite")));
        }
        let (support, values) = pairs.into_iter().unzip();
        Ok(Self { support, values })
    }

    pub fn from_fn(support: &[Node], mut f: impl FnMut(Node) -> f64) -> Self {
        let mut support = support.to_vec();
        support.sort_unstable();
        support.dedup();
        let values = support.iter().map(|&x| f(x)).collect();
        Self { support, values }
    }

    pub fn constant(support: &[Node], c: f64) -> Self {
        Self::from_fn(support, |_| c)
    }

    pub fn support(&self) -> &[Node] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Node, f64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn value(&self, x: Node) -> Option<f64> {
        self.support.binary_search(&x).ok().map(|i| self.values[i])
    }

    pub fn get(&self, x: Node) -> Result<f64> {
        self.value(x).ok_or(Error::MissingNode(x))
    }

    pub fn contains(&self, x: Node) -> bool {
        self.support.binary_search(&x).is_ok()
    }

    /// Fails with the first node of `nodes` missing from the support.
    pub fn ensure_covers(&self, nodes: &[Node]) -> Result<()> {
        match nodes.iter().find(|&&x| !self.contains(x)) {
            Some(&x) => Err(Error::MissingNode(x)),
            None => Ok(()),
        }
    }

    pub fn restrict(&self, nodes: &[Node]) -> Result<Field> {
        let values = nodes.iter().map(|&x| self.get(x)).collect::<Result<Vec<_>>>()?;
        Field::new(nodes.to_vec(), values)
    }

    /// Union of two fields on disjoint supports.
    pub fn join(&self, other: &Field) -> Result<Field> {
        Field::from_pairs(self.iter().chain(other.iter()).collect())
    }

    pub fn map(&self, f: impl Fn(Node, f64) -> f64) -> Field {
        Field {
            support: self.support.clone(),
            values: self.iter().map(|(x, v)| f(x, v)).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Dense copy over `0..n`, `fill` off the support.
    pub fn to_dense(&self, n: usize, fill: f64) -> Vec<f64> {
        let mut out = vec![fill; n];
        for (x, v) in self.iter() {
            out[x] = v;
        }
        out
    }

    /// Writes `node,label,value` rows.
    pub fn write_csv<W: Write>(&self, space: &Space, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        w.write_record(["node", "label", "value"]).map_err(io)?;
        for (x, v) in self.iter() {
            w.write_record([x.to_string(), space.label(x), format!("{v}")])
                .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
}

impl IdentityReport {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            abs_gap: (lhs - rhs).abs(),
        }
    }

    /// `abs_gap / (1 + |lhs|)`.
    pub fn relative_gap(&self) -> f64 {
        self.abs_gap / (1.0 + self.lhs.abs())
    }
}

/// `u(y) - u(x)`.
pub fn nonlocal_gradient(u: &Field, x: Node, y: Node) -> Result<f64> {
    Ok(u.get(y)? - u.get(x)?)
}

/// `sum_{y: member(y)} a(x, y, u(y) - u(x)) m_x({y})` over a dense `u`.
#[inline]
pub(crate) fn row_flux_sum(
    space: &Space,
    map: &LerayLionsMap,
    u: &[f64],
    x: Node,
    member: impl Fn(Node) -> bool,
) -> f64 {
    let ux = u[x];
    space
        .row(x)
        .iter()
        .filter(|&&(y, _)| member(y))
        .map(|&(y, p)| map.eval(x, y, u[y] - ux) * p)
        .sum()
}

pub(crate) fn dense_div(space: &Space, domain: &Domain, map: &LerayLionsMap, u: &[f64], x: Node) -> f64 {
    row_flux_sum(space, map, u, x, |y| domain.in_closure(y))
}

pub(crate) fn dense_flux(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    u: &[f64],
    x: Node,
    variant: BoundaryVariant,
) -> f64 {
    -row_flux_sum(space, map, u, x, |y| variant.flux_target(domain, y))
}

fn closure_dense(space: &Space, domain: &Domain, map: &LerayLionsMap, u: &Field) -> Result<Vec<f64>> {
    domain.ensure_compatible(space)?;
    map.ensure_fits(space)?;
    u.ensure_covers(domain.closure())?;
    Ok(u.to_dense(space.node_count(), 0.0))
}

/// `div_m a_p u(x) = sum_{y in closure} a(x, y, u(y) - u(x)) m_x({y})` for `x` in `at`.
pub fn m_divergence(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    u: &Field,
    at: &[Node],
) -> Result<Field> {
    let dense = closure_dense(space, domain, map, u)?;
    if let Some(&x) = at.iter().find(|&&x| x >= space.node_count() || !domain.in_omega(x)) {
        return Err(Error::Precondition(format!("node {x} is not in omega")));
    }
    let mut at = at.to_vec();
    at.sort_unstable();
    at.dedup();
    let values = par_map(&at, |x| dense_div(space, domain, map, &dense, x));
    Field::new(at, values)
}

/// Two-point form `1/2 sum_y (a(x,y,u(y)-u(x)) - a(y,x,u(x)-u(y))) m_x({y})`.
/// Agrees with [`m_divergence`] whenever the map is antisymmetric.
pub fn symmetric_divergence(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    u: &Field,
    x: Node,
) -> Result<f64> {
    let dense = closure_dense(space, domain, map, u)?;
    let ux = dense[x];
    Ok(space
        .row(x)
        .iter()
        .filter(|&&(y, _)| domain.in_closure(y))
        .map(|&(y, p)| 0.5 * (map.eval(x, y, dense[y] - ux) - map.eval(y, x, ux - dense[y])) * p)
        .sum())
}

/// Neumann boundary operator on the m-boundary.
pub fn neumann_flux(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    u: &Field,
    variant: BoundaryVariant,
) -> Result<Field> {
    let dense = closure_dense(space, domain, map, u)?;
    let values = par_map(domain.boundary(), |x| dense_flux(space, domain, map, &dense, x, variant));
    Field::new(domain.boundary().to_vec(), values)
}

/// Integration by parts against `w`, and the divergence theorem (`w = 1`).
///
/// `ibp`: `-sum_omega div(u) w nu + sum_boundary N(u) w nu` against
/// `1/2 sum_{Q} a(x,y,grad u) grad w nu m`, with `Q` the variant's region.
pub fn check_greens_identities(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    u: &Field,
    w: &Field,
    variant: BoundaryVariant,
) -> Result<(IdentityReport, IdentityReport)> {
    let du = closure_dense(space, domain, map, u)?;
    w.ensure_covers(domain.closure())?;
    let dw = w.to_dense(space.node_count(), 0.0);

    let div = par_map(domain.omega(), |x| dense_div(space, domain, map, &du, x));
    let flux = par_map(domain.boundary(), |x| dense_flux(space, domain, map, &du, x, variant));

    let mut lhs = 0.0;
    let mut div_total = 0.0;
    for (&x, d) in domain.omega().iter().zip(&div) {
        lhs -= d * dw[x] * space.nu(x);
        div_total += d * space.nu(x);
    }
    let mut flux_total = 0.0;
    for (&x, f) in domain.boundary().iter().zip(&flux) {
        lhs += f * dw[x] * space.nu(x);
        flux_total += f * space.nu(x);
    }
    let rhs = 0.5
        * pair_integral(space, domain, variant.region(), |x, y| {
            map.eval(x, y, du[y] - du[x]) * (dw[y] - dw[x])
        });
    Ok((
        IdentityReport::new(lhs, rhs),
        IdentityReport::new(div_total, flux_total),
    ))
}

/// `1/(2p) sum_{Q} |u(y) - u(x)|^p nu m`.
pub fn dirichlet_energy(
    space: &Space,
    domain: &Domain,
    u: &Field,
    p: f64,
    variant: BoundaryVariant,
) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
    }
    domain.ensure_compatible(space)?;
    u.ensure_covers(domain.closure())?;
    let du = u.to_dense(space.node_count(), 0.0);
    Ok(pair_integral(space, domain, variant.region(), |x, y| {
        (du[y] - du[x]).abs().powf(p)
    }) / (2.0 * p))
}

/// `1/2 sum_{Q} A(x, y, u(y) - u(x)) nu m` with `A` the primitive of the map.
pub fn map_energy(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    u: &Field,
    variant: BoundaryVariant,
) -> Result<f64> {
    if !map.is_potential() {
        return Err(Error::NotPotential);
    }
    let du = closure_dense(space, domain, map, u)?;
    Ok(0.5
        * pair_integral(space, domain, variant.region(), |x, y| {
            map.primitive(x, y, du[y] - du[x]).unwrap_or(0.0)
        }))
}
