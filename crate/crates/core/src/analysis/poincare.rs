//! Poincaré constants: exact for `p = 2` through a generalized eigenproblem,
//! a witnessed lower bound for general `p` by gradient ascent.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::calculus::Field;
use crate::error::{Error, Result};
use crate::space::{Domain, Node, Region, Space};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoincareReport {
    pub p: f64,
    pub lambda_best: f64,
    /// Field attaining `lambda_best`.
    pub extremal: Field,
    pub exact: bool,
}

/// Which quadratic forms a Poincaré quotient uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Block {
    /// Norm over the closure, mean over omega, seminorm over `Q1`.
    Closure,
    /// Norm, mean and seminorm all over the m-boundary.
    Boundary,
}

impl Block {
    fn nodes(self, domain: &Domain) -> &[Node] {
        match self {
            Block::Closure => domain.closure(),
            Block::Boundary => domain.boundary(),
        }
    }

    fn mean_over(self, domain: &Domain, x: Node) -> bool {
        match self {
            Block::Closure => domain.in_omega(x),
            Block::Boundary => domain.in_boundary(x),
        }
    }

    fn region(self) -> Region {
        match self {
            Block::Closure => Region::Q1,
            Block::Boundary => Region::BoundaryPair,
        }
    }
}

/// `(norm^p, seminorm^p)` of the quotient for a dense field.
fn forms(space: &Space, domain: &Domain, block: Block, u: &[f64], p: f64) -> (f64, f64) {
    let nodes = block.nodes(domain);
    let (mut mass, mut total) = (0.0, 0.0);
    for &x in nodes {
        if block.mean_over(domain, x) {
            mass += space.nu(x);
            total += space.nu(x) * u[x];
        }
    }
    let mean = total / mass;
    let norm = nodes
        .iter()
        .map(|&x| space.nu(x) * (u[x] - mean).abs().powf(p))
        .sum();
    let region = block.region();
    let semi = crate::space::pair_integral(space, domain, region, |x, y| (u[y] - u[x]).abs().powf(p));
    (norm, semi)
}

/// `|u - mean_omega u|_{L^p(closure)} / (sum_{Q1} |u(y) - u(x)|^p nu m)^{1/p}`.
pub fn poincare_ratio(space: &Space, domain: &Domain, u: &Field, p: f64) -> Result<f64> {
    u.ensure_covers(domain.closure())?;
    let dense = u.to_dense(space.node_count(), 0.0);
    let (n, s) = forms(space, domain, Block::Closure, &dense, p);
    Ok((n / s).powf(1.0 / p))
}

/// Boundary version of [`poincare_ratio`], with `p = 2`.
pub fn boundary_poincare_ratio(space: &Space, domain: &Domain, u: &Field) -> Result<f64> {
    u.ensure_covers(domain.boundary())?;
    let dense = u.to_dense(space.node_count(), 0.0);
    let (n, s) = forms(space, domain, Block::Boundary, &dense, 2.0);
    Ok((n / s).sqrt())
}

/// Matrices of the `p = 2` norm and seminorm over `nodes`.
fn quadratic_forms(space: &Space, domain: &Domain, block: Block) -> (DMatrix<f64>, DMatrix<f64>) {
    let nodes = block.nodes(domain);
    let d = nodes.len();
    let mut pos = vec![usize::MAX; space.node_count()];
    for (i, &x) in nodes.iter().enumerate() {
        pos[x] = i;
    }
    let region = block.region();
    let mut semi = DMatrix::zeros(d, d);
    for (i, &x) in nodes.iter().enumerate() {
        for &(y, m) in space.row(x) {
            if y == x || !region.contains(domain, x, y) {
                continue;
            }
            let c = space.nu(x) * m;
            let j = pos[y];
            semi[(i, i)] += c;
            semi[(j, j)] += c;
            semi[(i, j)] -= c;
            semi[(j, i)] -= c;
        }
    }
    let mass: f64 = nodes
        .iter()
        .filter(|&&x| block.mean_over(domain, x))
        .map(|&x| space.nu(x))
        .sum();
    // centering = I - 1 b^T with b the normalized mean weights
    let mut centering = DMatrix::<f64>::identity(d, d);
    for (j, &y) in nodes.iter().enumerate() {
        if block.mean_over(domain, y) {
            let b = space.nu(y) / mass;
            for i in 0..d {
                centering[(i, j)] -= b;
            }
        }
    }
    let weights = DMatrix::from_diagonal(&DVector::from_iterator(d, nodes.iter().map(|&x| space.nu(x))));
    let norm = centering.transpose() * weights * &centering;
    (norm, semi)
}

/// Orthonormal basis of the complement of the constants (Householder).
fn complement_basis(d: usize) -> DMatrix<f64> {
    let s = 1.0 / (d as f64).sqrt();
    let mut w = DVector::from_element(d, -s);
    w[0] += 1.0;
    let ww = w.dot(&w);
    let h = DMatrix::identity(d, d) - (&w * w.transpose()) * (2.0 / ww);
    h.columns(1, d - 1).into_owned()
}

/// Largest `sqrt(u^T N u / u^T S u)` over `u` orthogonal to constants.
fn max_quotient(norm: &DMatrix<f64>, semi: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let d = norm.nrows();
    let q = complement_basis(d);
    let sq = q.transpose() * semi * &q;
    let nq = q.transpose() * norm * &q;
    let chol = sq
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateForm("seminorm is singular off the constants (disconnected block?)".into()))?;
    let l = chol.l();
    // l^{-1} nq l^{-T}
    let a = l
        .solve_lower_triangular(&nq)
        .ok_or_else(|| Error::DegenerateForm("triangular solve failed".into()))?;
    let m = l
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::DegenerateForm("triangular solve failed".into()))?;
    let m = 0.5 * (&m + m.transpose());
    let eig = SymmetricEigen::new(m);
    let (k, mu) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let v = eig.eigenvectors.column(k).into_owned();
    let coeffs = l
        .transpose()
        .solve_upper_triangular(&v)
        .ok_or_else(|| Error::DegenerateForm("triangular solve failed".into()))?;
    Ok((mu.max(0.0).sqrt(), q * coeffs))
}

fn exact_report(space: &Space, domain: &Domain, block: Block) -> Result<PoincareReport> {
    domain.ensure_compatible(space)?;
    let nodes = block.nodes(domain).to_vec();
    if nodes.len() < 2 {
        return Ok(PoincareReport {
            p: 2.0,
            lambda_best: 0.0,
            extremal: Field::constant(&nodes, 0.0),
            exact: true,
        });
    }
    let (norm, semi) = quadratic_forms(space, domain, block);
    let (lambda, u) = max_quotient(&norm, &semi)?;
    let scale = u.amax();
    Ok(PoincareReport {
        p: 2.0,
        lambda_best: lambda,
        extremal: Field::new(nodes, u.iter().map(|v| v / scale).collect())?,
        exact: true,
    })
}

/// Exact `p = 2` constant of the mean-centered inequality on the closure.
pub fn poincare_p2(space: &Space, domain: &Domain) -> Result<PoincareReport> {
    exact_report(space, domain, Block::Closure)
}

/// Exact constant of the inequality restricted to the m-boundary.
pub fn boundary_poincare_p2(space: &Space, domain: &Domain) -> Result<PoincareReport> {
    if domain.boundary().is_empty() {
        return Err(Error::DegenerateForm("empty boundary".into()));
    }
    exact_report(space, domain, Block::Boundary)
}

pub const PROBE_RESTARTS: usize = 20;

/// Lower bound on the constant for general `p`: projected gradient ascent of
/// the quotient from [`PROBE_RESTARTS`] random starts. The extremal field
/// witnesses the reported value.
pub fn poincare_probe(
    space: &Space,
    domain: &Domain,
    p: f64,
    iterations: usize,
    seed: u64,
) -> Result<PoincareReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
    }
    domain.ensure_compatible(space)?;
    let nodes = domain.closure().to_vec();
    if nodes.len() < 2 {
        return Ok(PoincareReport {
            p,
            lambda_best: 0.0,
            extremal: Field::constant(&nodes, 0.0),
            exact: false,
        });
    }
    let n = space.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objective = |u: &[f64]| {
        let (a, b) = forms(space, domain, Block::Closure, u, p);
        a.ln() - b.ln()
    };

    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    for _ in 0..PROBE_RESTARTS {
        let mut u = vec![0.0; n];
        for &x in &nodes {
            let g: f64 = StandardNormal.sample(&mut rng);
            u[x] = g * space.nu(x).powf(-1.0 / p);
        }
        normalize(&mut u, &nodes);
        let mut f = objective(&u);
        let mut step = 1e-2;
        for _ in 0..iterations {
            let g = log_quotient_gradient(space, domain, &u, p);
            let mut improved = false;
            while step > 1e-16 {
                let mut trial = u.clone();
                for &x in &nodes {
                    trial[x] += step * g[x] / space.nu(x);
                }
                normalize(&mut trial, &nodes);
                let ft = objective(&trial);
                if ft.is_finite() && ft > f {
                    u = trial;
                    f = ft;
                    step *= 2.0;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if f.is_finite() && f > best.0 {
            best = (f, u);
        }
    }
    if !best.0.is_finite() {
        return Err(Error::DegenerateForm("every start has zero seminorm".into()));
    }
    let extremal = Field::from_fn(&nodes, |x| best.1[x]);
    let lambda_best = poincare_ratio(space, domain, &extremal, p)?;
    Ok(PoincareReport {
        p,
        lambda_best,
        extremal,
        exact: false,
    })
}

fn normalize(u: &mut [f64], nodes: &[Node]) {
    let top = nodes.iter().fold(0.0f64, |m, &x| m.max(u[x].abs()));
    if top > 0.0 {
        for &x in nodes {
            u[x] /= top;
        }
    }
}

/// Gradient of `ln N_p(u) - ln S_p(u)` over dense `u`.
fn log_quotient_gradient(space: &Space, domain: &Domain, u: &[f64], p: f64) -> Vec<f64> {
    let n = space.node_count();
    let nodes = domain.closure();
    let (mut mass, mut total) = (0.0, 0.0);
    for &x in domain.omega() {
        mass += space.nu(x);
        total += space.nu(x) * u[x];
    }
    let mean = total / mass;
    let dev = |x: Node| {
        let e = u[x] - mean;
        if e == 0.0 {
            0.0
        } else {
            e.signum() * e.abs().powf(p - 1.0)
        }
    };

    let mut gn = vec![0.0; n];
    let mut norm = 0.0;
    let mut pull = 0.0;
    for &x in nodes {
        let d = p * space.nu(x) * dev(x);
        gn[x] = d;
        pull += d;
        norm += space.nu(x) * (u[x] - mean).abs().powf(p);
    }
    for &x in domain.omega() {
        gn[x] -= pull * space.nu(x) / mass;
    }

    let mut gs = vec![0.0; n];
    let mut semi = 0.0;
    for &x in nodes {
        for &(y, m) in space.row(x) {
            if y == x || !domain.in_closure(y) {
                continue;
            }
            let c = space.nu(x) * m;
            let r = u[y] - u[x];
            semi += c * r.abs().powf(p);
            let d = if r == 0.0 { 0.0 } else { c * p * r.signum() * r.abs().powf(p - 1.0) };
            gs[y] += d;
            gs[x] -= d;
        }
    }
    (0..n).map(|x| gn[x] / norm - gs[x] / semi).collect()
}
