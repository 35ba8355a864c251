//! Finite metric random walk spaces.
//!
//! A [`Space`] stores a positive measure `nu` and, for every node `x`, the
//! probability measure `m_x` as a sparse row of `(target, probability)` pairs.
//! Graph and kernel constructors both go through symmetric edge weights, so
//! `nu` is reversible for the walk up to rounding.
//!
//! A [`Domain`] splits the nodes into `omega`, its m-boundary
//! `{x not in omega : m_x(omega) > eps}` and the m-closure (their union).

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par_map;

/// Dense node index in `0..node_count`.
pub type Node = usize;

/// Default floating-point proxy for `m_x(omega) > 0`.
pub const EPS_BOUNDARY: f64 = 1e-15;

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Space {
    nu: Vec<f64>,
    rows: Vec<Vec<(Node, f64)>>,
    labels: Option<Vec<String>>,
}

impl Space {
    /// Builds a space from raw rows, checking every invariant. Rows are
    /// sorted by target on the way in.
    pub fn new(
        nu: Vec<f64>,
        rows: Vec<Vec<(Node, f64)>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = nu.len();
        if n == 0 {
            return Err(Error::InvalidSpace("space has no nodes".into()));
        }
        if rows.len() != n {
            return Err(Error::InvalidSpace(format!(
                "{} rows for {} nodes",
                rows.len(),
                n
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::InvalidSpace(format!(
                    "{} labels for {} nodes",
                    l.len(),
                    n
                )));
            }
        }
        for (x, &w) in nu.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidSpace(format!("nu({x}) = {w} is not positive")));
            }
        }
        let mut sorted = Vec::with_capacity(n);
        for (x, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(y, _)| y);
            let mut total = 0.0;
            for (i, &(y, prob)) in row.iter().enumerate() {
                if y >= n {
                    return Err(Error::NodeOutOfRange(y));
                }
                if !(prob >= 0.0 && prob.is_finite()) {
                    return Err(Error::InvalidSpace(format!(
                        "m_{x}({{{y}}}) = {prob} is not a probability"
                    )));
                }
                if i > 0 && row[i - 1].0 == y {
                    return Err(Error::InvalidSpace(format!(
                        "row {x} lists target {y} twice"
                    )));
                }
                total += prob;
            }
            if (total - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidSpace(format!("row {x} sums to {total}")));
            }
            sorted.push(row);
        }
        Ok(Self {
            nu,
            rows: sorted,
            labels,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nu.len()
    }

    pub fn nu(&self, x: Node) -> f64 {
        self.nu[x]
    }

    pub fn nu_all(&self) -> &[f64] {
        &self.nu
    }

    /// The sparse row `m_x`, sorted by target.
    pub fn row(&self, x: Node) -> &[(Node, f64)] {
        &self.rows[x]
    }

    /// `m_x({y})`.
    pub fn transition(&self, x: Node, y: Node) -> f64 {
        let row = &self.rows[x];
        match row.binary_search_by_key(&y, |&(t, _)| t) {
            Ok(i) => row[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn label(&self, x: Node) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => x.to_string(),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.node_count() {
            return Err(Error::InvalidSpace(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.node_count()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// `m_x(A)` for a membership mask over all nodes.
    pub fn mass_in(&self, x: Node, member: impl Fn(Node) -> bool) -> f64 {
        self.rows[x]
            .iter()
            .filter(|&&(y, _)| member(y))
            .map(|&(_, p)| p)
            .sum()
    }
}

/// Builds the random walk of a weighted graph: `nu(x) = d_x`, `m_x = sum_y w_xy/d_x delta_y`.
///
/// Each undirected edge is listed once; repeated edges add up and self-loops
/// `(x, x, w)` count once towards `d_x`.
pub fn build_graph_space(edges: &[(Node, Node, f64)]) -> Result<Space> {
    let n = edges
        .iter()
        .map(|&(a, b, _)| a.max(b) + 1)
        .max()
        .ok_or_else(|| Error::InvalidSpace("graph has no edges".into()))?;
    build_graph_space_with_nodes(n, edges)
}

/// Like [`build_graph_space`] with an explicit node count, so that isolated
/// trailing nodes are reported instead of silently dropped.
pub fn build_graph_space_with_nodes(n: usize, edges: &[(Node, Node, f64)]) -> Result<Space> {
    let mut adj: Vec<BTreeMap<Node, f64>> = vec![BTreeMap::new(); n];
    for &(a, b, w) in edges {
        if a >= n {
            return Err(Error::NodeOutOfRange(a));
        }
        if b >= n {
            return Err(Error::NodeOutOfRange(b));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::NonPositiveWeight(a, b, w));
        }
        *adj[a].entry(b).or_insert(0.0) += w;
        if a != b {
            *adj[b].entry(a).or_insert(0.0) += w;
        }
    }
    let degree: Vec<f64> = adj.iter().map(|r| r.values().sum()).collect();
    if let Some(x) = degree.iter().position(|&d| d <= 0.0) {
        return Err(Error::IsolatedNode(x));
    }

    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(x) = queue.pop_front() {
        for &y in adj[x].keys() {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    if let Some(x) = seen.iter().position(|&s| !s) {
        return Err(Error::Disconnected(x));
    }

    let rows = adj
        .iter()
        .zip(&degree)
        .map(|(r, &d)| r.iter().map(|(&y, &w)| (y, w / d)).collect())
        .collect();
    Space::new(degree, rows, None)
}

/// Uniform grid in one or two dimensions, row-major node order.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub origin: Vec<f64>,
    pub spacing: f64,
    pub shape: Vec<usize>,
}

impl Grid {
    pub fn new(origin: Vec<f64>, spacing: f64, shape: Vec<usize>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1 or 2, got {}",
                shape.len()
            )));
        }
        if origin.len() != shape.len() {
            return Err(Error::InvalidParameter(
                "grid origin and shape disagree in dimension".into(),
            ));
        }
        if shape.contains(&0) {
            return Err(Error::InvalidParameter("grid extent must be positive".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing {spacing}")));
        }
        Ok(Self {
            origin,
            spacing,
            shape,
        })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: Node) -> Vec<f64> {
        match self.dim() {
            1 => vec![self.origin[0] + idx as f64 * self.spacing],
            _ => {
                let (i, j) = (idx / self.shape[1], idx % self.shape[1]);
                vec![
                    self.origin[0] + i as f64 * self.spacing,
                    self.origin[1] + j as f64 * self.spacing,
                ]
            }
        }
    }
}

/// Radial kernel profile `J(|x - y|)`; the support radius is passed alongside.
#[derive(Clone)]
pub enum KernelProfile {
    /// `height` on the whole support.
    Box { height: f64 },
    /// `height * (1 - r / radius)`.
    Tent { height: f64 },
    /// `height * exp(-r^2 / (2 sigma^2))`, truncated at the radius.
    GaussTrunc { sigma: f64, height: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for KernelProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Box { height } => write!(f, "Box {{ height: {height} }}"),
            Self::Tent { height } => write!(f, "Tent {{ height: {height} }}"),
            Self::GaussTrunc { sigma, height } => {
                write!(f, "GaussTrunc {{ sigma: {sigma}, height: {height} }}")
            }
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl KernelProfile {
    pub fn eval(&self, r: f64, radius: f64) -> f64 {
        match self {
            Self::Box { height } => *height,
            Self::Tent { height } => height * (1.0 - r / radius).max(0.0),
            Self::GaussTrunc { sigma, height } => height * (-r * r / (2.0 * sigma * sigma)).exp(),
            Self::Custom(j) => j(r),
        }
    }
}

/// Discretizes `m^J` on a grid by midpoint quadrature.
///
/// Every pair of distinct grid points within `support_radius` gets the
/// symmetric weight `J(|x - y|) * h^dim`; the result is then the random walk
/// of that weighted graph. The diagonal `r = 0` is skipped.
pub fn build_kernel_space(grid: &Grid, kernel: &KernelProfile, support_radius: f64) -> Result<Space> {
    if !(support_radius > 0.0 && support_radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "support radius {support_radius}"
        )));
    }
    let n = grid.len();
    let cell = grid.spacing.powi(grid.dim() as i32);
    let reach = (support_radius / grid.spacing).floor() as i64 + 1;
    let cutoff = support_radius * (1.0 + 1e-12);
    let points: Vec<Vec<f64>> = (0..n).map(|i| grid.point(i)).collect();

    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if !within_reach(grid, a, b, reach) {
                continue;
            }
            let r = points[a]
                .iter()
                .zip(&points[b])
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            if r > cutoff {
                continue;
            }
            let j = kernel.eval(r, support_radius);
            if j < 0.0 || !j.is_finite() {
                return Err(Error::NegativeKernel { distance: r, value: j });
            }
            if j > 0.0 {
                edges.push((a, b, j * cell));
            }
        }
    }
    let mut touched = vec![false; n];
    for &(a, b, _) in &edges {
        touched[a] = true;
        touched[b] = true;
    }
    if let Some(x) = touched.iter().position(|&t| !t) {
        return Err(Error::EmptySupport(x));
    }
    let labels = points
        .iter()
        .map(|p| {
            let coords: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
            format!("({})", coords.join(";"))
        })
        .collect();
    build_graph_space_with_nodes(n, &edges)?.with_labels(labels)
}

fn within_reach(grid: &Grid, a: Node, b: Node, reach: i64) -> bool {
    match grid.dim() {
        1 => (b as i64 - a as i64).abs() <= reach,
        _ => {
            let w = grid.shape[1];
            let (ai, aj) = ((a / w) as i64, (a % w) as i64);
            let (bi, bj) = ((b / w) as i64, (b % w) as i64);
            (ai - bi).abs() <= reach && (aj - bj).abs() <= reach
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BalanceReport {
    pub max_reversibility_violation: f64,
    pub max_invariance_violation: f64,
}

/// Exact maxima of the detailed-balance and invariance residuals.
pub fn check_balance(space: &Space) -> BalanceReport {
    let n = space.node_count();
    let mut reversibility: f64 = 0.0;
    let mut inflow = vec![0.0; n];
    for x in 0..n {
        for &(y, p) in space.row(x) {
            inflow[y] += space.nu(x) * p;
            let back = space.nu(y) * space.transition(y, x);
            reversibility = reversibility.max((space.nu(x) * p - back).abs());
        }
    }
    let invariance = (0..n)
        .map(|x| (space.nu(x) - inflow[x]).abs())
        .fold(0.0, f64::max);
    BalanceReport {
        max_reversibility_violation: reversibility,
        max_invariance_violation: invariance,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Interior,
    Boundary,
    Outside,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    omega: Vec<Node>,
    boundary: Vec<Node>,
    closure: Vec<Node>,
    interior_leak: f64,
    roles: Vec<Role>,
    omega_mass: Vec<f64>,
    eps_boundary: f64,
}

impl Domain {
    pub fn omega(&self) -> &[Node] {
        &self.omega
    }

    /// The m-boundary.
    pub fn boundary(&self) -> &[Node] {
        &self.boundary
    }

    /// The m-closure, `omega` union boundary, sorted.
    pub fn closure(&self) -> &[Node] {
        &self.closure
    }

    /// `max_{x in omega} m_x(X \ closure)`.
    pub fn interior_leak(&self) -> f64 {
        self.interior_leak
    }

    pub fn eps_boundary(&self) -> f64 {
        self.eps_boundary
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn role(&self, x: Node) -> Role {
        self.roles[x]
    }

    pub fn in_omega(&self, x: Node) -> bool {
        self.roles[x] == Role::Interior
    }

    pub fn in_boundary(&self, x: Node) -> bool {
        self.roles[x] == Role::Boundary
    }

    pub fn in_closure(&self, x: Node) -> bool {
        self.roles[x] != Role::Outside
    }

    /// `m_x(omega)` for any node.
    pub fn omega_mass(&self, x: Node) -> f64 {
        self.omega_mass[x]
    }

    pub(crate) fn ensure_compatible(&self, space: &Space) -> Result<()> {
        if self.node_count() != space.node_count() {
            return Err(Error::Precondition(format!(
                "domain built for {} nodes, space has {}",
                self.node_count(),
                space.node_count()
            )));
        }
        Ok(())
    }
}

/// Computes `omega`'s m-boundary with the default threshold.
pub fn m_boundary(space: &Space, omega: &[Node]) -> Result<Domain> {
    m_boundary_with_eps(space, omega, EPS_BOUNDARY)
}

pub fn m_boundary_with_eps(space: &Space, omega: &[Node], eps_boundary: f64) -> Result<Domain> {
    let n = space.node_count();
    if omega.is_empty() {
        return Err(Error::EmptyOmega);
    }
    let mut inside = vec![false; n];
    for &x in omega {
        if x >= n {
            return Err(Error::NodeOutOfRange(x));
        }
        inside[x] = true;
    }
    let omega_mass: Vec<f64> = (0..n).map(|x| space.mass_in(x, |y| inside[y])).collect();
    let roles: Vec<Role> = (0..n)
        .map(|x| {
            if inside[x] {
                Role::Interior
            } else if omega_mass[x] > eps_boundary {
                Role::Boundary
            } else {
                Role::Outside
            }
        })
        .collect();
    let pick = |r: Role| (0..n).filter(|&x| roles[x] == r).collect::<Vec<_>>();
    let omega = pick(Role::Interior);
    let boundary = pick(Role::Boundary);
    let closure = (0..n).filter(|&x| roles[x] != Role::Outside).collect();
    let interior_leak = omega
        .iter()
        .map(|&x| space.mass_in(x, |y| roles[y] == Role::Outside))
        .fold(0.0, f64::max);
    Ok(Domain {
        omega,
        boundary,
        closure,
        interior_leak,
        roles,
        omega_mass,
        eps_boundary,
    })
}

/// Subsets of `X x X` used by the integration-by-parts identities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    All,
    /// `closure x closure`.
    Q1,
    /// `Q1` minus `boundary x boundary`.
    Q2,
    /// `boundary x boundary`.
    BoundaryPair,
}

impl Region {
    pub fn contains(self, domain: &Domain, x: Node, y: Node) -> bool {
        match self {
            Region::All => true,
            Region::Q1 => domain.in_closure(x) && domain.in_closure(y),
            Region::Q2 => {
                domain.in_closure(x)
                    && domain.in_closure(y)
                    && !(domain.in_boundary(x) && domain.in_boundary(y))
            }
            Region::BoundaryPair => domain.in_boundary(x) && domain.in_boundary(y),
        }
    }
}

/// `sum_{(x,y) in region} g(x, y) nu(x) m_x({y})`, summed row by row in node order.
pub fn pair_integral<G>(space: &Space, domain: &Domain, region: Region, g: G) -> f64
where
    G: Fn(Node, Node) -> f64 + Sync,
{
    let nodes: Vec<Node> = match region {
        Region::All => (0..space.node_count()).collect(),
        Region::BoundaryPair => domain.boundary().to_vec(),
        Region::Q1 | Region::Q2 => domain.closure().to_vec(),
    };
    let row_sums = par_map(&nodes, |x| {
        let s: f64 = space
            .row(x)
            .iter()
            .filter(|&&(y, _)| region.contains(domain, x, y))
            .map(|&(y, p)| g(x, y) * p)
            .sum();
        s * space.nu(x)
    });
    row_sums.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Space {
        build_graph_space(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn triangle_unit_weights() {
        let s = triangle();
        assert_eq!(s.nu_all(), &[2.0, 2.0, 2.0]);
        for x in 0..3 {
            assert_eq!(s.row(x).len(), 2);
            assert!(s.row(x).iter().all(|&(_, p)| p == 0.5));
        }
    }

    #[test]
    fn two_nodes_swap_mass() {
        let s = build_graph_space(&[(0, 1, 1.0)]).unwrap();
        assert_eq!(s.nu_all(), &[1.0, 1.0]);
        assert_eq!(s.row(0), &[(1, 1.0)]);
        assert_eq!(s.row(1), &[(0, 1.0)]);
    }

    #[test]
    fn star_with_loops() {
        let levels = 6;
        let mut edges = Vec::new();
        for k in 1..=levels {
            let w = 7f64.powi(-(k as i32));
            edges.push((0, k, w));
            edges.push((k, k, 3f64.powi(-(k as i32)) - w));
        }
        let s = build_graph_space(&edges).unwrap();
        for k in 1..=levels {
            let expect_nu = 3f64.powi(-(k as i32));
            assert!((s.nu(k) - expect_nu).abs() <= 1e-16);
            let to_center = (3.0f64 / 7.0).powi(k as i32);
            assert!((s.transition(k, 0) - to_center).abs() < 1e-15);
            assert!((s.transition(k, k) - (1.0 - to_center)).abs() < 1e-15);
        }
        let b = check_balance(&s);
        assert!(b.max_reversibility_violation <= 1e-14);
        assert!(b.max_invariance_violation <= 1e-14);
    }

    #[test]
    fn graph_errors() {
        assert!(matches!(
            build_graph_space(&[(0, 1, 0.0)]),
            Err(Error::NonPositiveWeight(0, 1, _))
        ));
        assert!(matches!(
            build_graph_space(&[(0, 1, 1.0), (2, 3, 1.0)]),
            Err(Error::Disconnected(2))
        ));
        assert!(matches!(
            build_graph_space_with_nodes(3, &[(0, 1, 1.0)]),
            Err(Error::IsolatedNode(2))
        ));
    }

    #[test]
    fn kernel_1d_three_points() {
        let grid = Grid::new(vec![0.0], 1.0, vec![3]).unwrap();
        let s = build_kernel_space(&grid, &KernelProfile::Box { height: 0.5 }, 1.0).unwrap();
        assert_eq!(s.nu_all(), &[0.5, 1.0, 0.5]);
        assert_eq!(s.row(0), &[(1, 1.0)]);
        assert_eq!(s.row(1), &[(0, 0.5), (2, 0.5)]);
    }

    #[test]
    fn kernel_zero_is_empty_support() {
        let grid = Grid::new(vec![0.0], 1.0, vec![4]).unwrap();
        let err = build_kernel_space(&grid, &KernelProfile::Box { height: 0.0 }, 1.5).unwrap_err();
        assert!(matches!(err, Error::EmptySupport(0)));
    }

    #[test]
    fn kernel_negative_rejected() {
        let grid = Grid::new(vec![0.0], 1.0, vec![4]).unwrap();
        let j = KernelProfile::Custom(Arc::new(|r| 1.0 - r));
        assert!(matches!(
            build_kernel_space(&grid, &j, 2.0),
            Err(Error::NegativeKernel { .. })
        ));
    }

    #[test]
    fn kernel_2d_box_connectivity() {
        let grid = Grid::new(vec![0.0, 0.0], 1.0, vec![3, 3]).unwrap();
        let s = build_kernel_space(&grid, &KernelProfile::Box { height: 1.0 }, 1.5).unwrap();
        // Direct summation oracle: neighbour count within radius 1.5 is the
        // 8-neighbourhood clipped to the grid.
        for x in 0..9 {
            let (i, j) = ((x / 3) as i64, (x % 3) as i64);
            let mut count = 0;
            for di in -1..=1i64 {
                for dj in -1..=1i64 {
                    let (a, b) = (i + di, j + dj);
                    if (di, dj) != (0, 0) && (0..3).contains(&a) && (0..3).contains(&b) {
                        count += 1;
                    }
                }
            }
            assert_eq!(s.row(x).len(), count, "node {x}");
            assert_eq!(s.nu(x), count as f64);
        }
        let b = check_balance(&s);
        assert!(b.max_reversibility_violation <= 1e-14);
        assert!(b.max_invariance_violation <= 1e-14);
    }

    #[test]
    fn balance_by_hand() {
        let s = Space::new(vec![1.0, 2.0], vec![vec![(1, 1.0)], vec![(0, 1.0)]], None).unwrap();
        assert_eq!(check_balance(&s).max_reversibility_violation, 1.0);
        let s = Space::new(vec![1.0, 1.0], vec![vec![(1, 1.0)], vec![(0, 1.0)]], None).unwrap();
        assert_eq!(check_balance(&s), BalanceReport::default());
    }

    #[test]
    fn space_invariants_enforced() {
        assert!(Space::new(vec![1.0], vec![vec![(0, 0.5)]], None).is_err());
        assert!(Space::new(vec![0.0], vec![vec![(0, 1.0)]], None).is_err());
        assert!(Space::new(vec![1.0, 1.0], vec![vec![(1, 0.5), (1, 0.5)], vec![(0, 1.0)]], None).is_err());
    }

    #[test]
    fn boundary_of_triangle_edge() {
        let s = triangle();
        let d = m_boundary(&s, &[0, 1]).unwrap();
        assert_eq!(d.boundary(), &[2]);
        assert_eq!(d.closure(), &[0, 1, 2]);
        assert_eq!(d.interior_leak(), 0.0);
        assert_eq!(d.omega_mass(2), 1.0);

        let all = m_boundary(&s, &[0, 1, 2]).unwrap();
        assert!(all.boundary().is_empty());
        assert_eq!(all.closure(), &[0, 1, 2]);
        assert!(matches!(m_boundary(&s, &[]), Err(Error::EmptyOmega)));
    }

    #[test]
    fn boundary_idempotent() {
        let s = triangle();
        assert_eq!(m_boundary(&s, &[1]).unwrap(), m_boundary(&s, &[1]).unwrap());
    }

    #[test]
    fn pair_integral_on_triangle() {
        let s = triangle();
        let d = m_boundary(&s, &[0, 1]).unwrap();
        assert_eq!(pair_integral(&s, &d, Region::Q1, |_, _| 1.0), 6.0);

        let d = m_boundary(&s, &[0]).unwrap();
        let q1 = pair_integral(&s, &d, Region::Q1, |_, _| 1.0);
        let q2 = pair_integral(&s, &d, Region::Q2, |_, _| 1.0);
        let bb = pair_integral(&s, &d, Region::BoundaryPair, |_, _| 1.0);
        assert_eq!(q1 - q2, 2.0);
        assert_eq!(bb, 2.0);
    }

    #[test]
    fn antisymmetric_integrand_vanishes() {
        let s = triangle();
        let d = m_boundary(&s, &[0]).unwrap();
        let f = [0.3, -1.7, 2.2];
        let total = pair_integral(&s, &d, Region::Q1, |x, y| f[y] - f[x]);
        assert!(total.abs() < 1e-12);
    }
}
