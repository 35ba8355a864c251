//! Instance generators and dense reference computations shared by the
//! integration tests. Nothing here calls the library's solvers.

#![allow(dead_code)]

use mrws::instances::{random_domain, random_field, random_graph, GraphSpec};
use mrws::prelude::*;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EXPONENTS: [f64; 4] = [1.5, 2.0, 3.0, 4.0];
pub const VARIANTS: [BoundaryVariant; 2] = [BoundaryVariant::Gl, BoundaryVariant::Drov];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Instance {
    pub space: Space,
    pub domain: Domain,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng, min_nodes: usize, max_nodes: usize) -> Self {
        let n = rng.random_range(min_nodes..=max_nodes);
        let space = random_graph(rng, &GraphSpec::new(n)).unwrap();
        let fraction = rng.random_range(0.3..0.7);
        let domain = random_domain(rng, &space, fraction).unwrap();
        Self { space, domain }
    }

    /// Same as [`Instance::random`] but with a connected closure, so the
    /// Poincaré seminorm only vanishes on constants.
    pub fn connected(rng: &mut ChaCha8Rng, min_nodes: usize, max_nodes: usize) -> Self {
        loop {
            let inst = Self::random(rng, min_nodes, max_nodes);
            if closure_connected(&inst.space, &inst.domain) {
                return inst;
            }
        }
    }

    pub fn interior(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Field {
        random_field(rng, self.domain.omega(), lo, hi)
    }

    pub fn boundary(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Field {
        random_field(rng, self.domain.boundary(), lo, hi)
    }

    pub fn closure(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Field {
        random_field(rng, self.domain.closure(), lo, hi)
    }

    pub fn problem(
        &self,
        p: f64,
        variant: BoundaryVariant,
        lambda: f64,
        z: Field,
        flux: Field,
    ) -> EllipticProblem<'_> {
        EllipticProblem::new(
            &self.space,
            &self.domain,
            make_plaplacian(p).unwrap(),
            variant,
            lambda,
            z,
            flux,
        )
        .unwrap()
    }
}

fn closure_connected(space: &Space, domain: &Domain) -> bool {
    let nodes = domain.closure();
    let mut seen = vec![false; space.node_count()];
    let mut stack = vec![nodes[0]];
    seen[nodes[0]] = true;
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for &(y, _) in space.row(x) {
            if !seen[y] && domain.in_closure(y) {
                seen[y] = true;
                count += 1;
                stack.push(y);
            }
        }
    }
    count == nodes.len()
}

pub fn sup_diff(a: &Field, b: &Field) -> f64 {
    a.iter()
        .map(|(x, v)| (v - b.value(x).unwrap()).abs())
        .fold(0.0, f64::max)
}

/// `L^q(omega, nu)` norm of a field on omega.
pub fn lq_norm(space: &Space, f: &Field, q: f64) -> f64 {
    f.iter()
        .map(|(x, v)| v.abs().powf(q) * space.nu(x))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// Linear `p = 2` GL resolvent assembled from the transition matrix and
/// solved by LU: `u - lambda sum_{closure} m (u_y - u_x) = z` on omega and
/// `-sum_{closure} m (u_y - u_x) = phi` on the boundary.
pub fn dense_linear_gl(space: &Space, domain: &Domain, lambda: f64, z: &Field, flux: &Field) -> Field {
    let nodes = domain.closure();
    let d = nodes.len();
    let index = |x: usize| nodes.binary_search(&x).ok();
    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut b = DVector::<f64>::zeros(d);
    for (i, &x) in nodes.iter().enumerate() {
        let interior = domain.in_omega(x);
        let scale = if interior { lambda } else { 1.0 };
        if interior {
            a[(i, i)] += 1.0;
            b[i] = z.value(x).unwrap();
        } else {
            b[i] = flux.value(x).unwrap();
        }
        for y in 0..space.node_count() {
            let m = space.transition(x, y);
            if m == 0.0 {
                continue;
            }
            if let Some(j) = index(y) {
                a[(i, j)] -= scale * m;
                a[(i, i)] += scale * m;
            }
        }
    }
    let u = a.lu().solve(&b).expect("nonsingular resolvent matrix");
    Field::new(nodes.to_vec(), u.iter().copied().collect()).unwrap()
}

/// Best `p = 2` Poincaré constant through the pseudo-inverse square root of
/// the seminorm matrix: `lambda^2 = max eig(S^{+1/2} N S^{+1/2})`.
pub fn dense_poincare(space: &Space, domain: &Domain) -> f64 {
    let nodes = domain.closure();
    let d = nodes.len();
    let nu: Vec<f64> = nodes.iter().map(|&x| space.nu(x)).collect();
    let omega_mass: f64 = nodes
        .iter()
        .zip(&nu)
        .filter(|(&x, _)| domain.in_omega(x))
        .map(|(_, w)| w)
        .sum();
    let b: Vec<f64> = nodes
        .iter()
        .zip(&nu)
        .map(|(&x, w)| if domain.in_omega(x) { w / omega_mass } else { 0.0 })
        .collect();
    // N_ij = sum_k nu_k (delta_ki - b_i)(delta_kj - b_j)
    let n = DMatrix::from_fn(d, d, |i, j| {
        (0..d)
            .map(|k| {
                let ei = if k == i { 1.0 } else { 0.0 } - b[i];
                let ej = if k == j { 1.0 } else { 0.0 } - b[j];
                nu[k] * ei * ej
            })
            .sum()
    });
    // u^T S u = sum_{x, y in closure} nu_x m_xy (u_y - u_x)^2
    let s = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            (0..d)
                .filter(|&k| k != i)
                .map(|k| nu[i] * space.transition(nodes[i], nodes[k]) + nu[k] * space.transition(nodes[k], nodes[i]))
                .sum()
        } else {
            -(nu[i] * space.transition(nodes[i], nodes[j]) + nu[j] * space.transition(nodes[j], nodes[i]))
        }
    });
    let eig = SymmetricEigen::new(s);
    let top = eig.eigenvalues.amax();
    let inv_sqrt = DVector::from_iterator(
        d,
        eig.eigenvalues
            .iter()
            .map(|&v| if v > 1e-12 * top { 1.0 / v.sqrt() } else { 0.0 }),
    );
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    let m = &root * n * &root;
    let m = 0.5 * (&m + m.transpose());
    SymmetricEigen::new(m).eigenvalues.max().max(0.0).sqrt()
}

/// Hub value of the `levels`-level star with `u(x_n) = 2^{n/2}` at `p = 3`,
/// summed term by term: `u - div u` at the hub with `u(hub) = 0`.
pub fn star_hub_by_sums(levels: usize) -> f64 {
    let mut weighted = 0.0;
    let mut degree = 0.0;
    for n in 1..=levels {
        let w = 7f64.powi(-(n as i32));
        let r = 2f64.powf(n as f64 / 2.0);
        weighted += w * r * r;
        degree += w;
    }
    -weighted / degree
}

/// Independent evaluation of the GL flux at star leaf `n` for `p = 3`:
/// leaf degree `3^{-n}`, spoke weight `7^{-n}`, jump `-2^{n/2}`.
pub fn star_leaf_flux(n: usize) -> f64 {
    let m = 7f64.powi(-(n as i32)) / 3f64.powi(-(n as i32));
    let r = -(2f64.powf(n as f64 / 2.0));
    -(m * r.abs() * r)
}
