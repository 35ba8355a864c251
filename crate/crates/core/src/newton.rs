//! Damped Newton iteration with an Armijo test on the residual sup-norm.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub trait NewtonSystem {
    fn dim(&self) -> usize;
    fn residual(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub armijo: f64,
    pub min_step: f64,
    /// Extra full steps taken after the tolerance is met, kept only while
    /// they shrink the residual.
    pub polish: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            armijo: 1e-4,
            min_step: 2f64.powi(-30),
            polish: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `J d = -f`, shifting the diagonal when the factorization fails.
fn direction(jac: DMatrix<f64>, f: &[f64]) -> Result<Vec<f64>> {
    let rhs = -DVector::from_column_slice(f);
    if let Some(d) = jac.clone().lu().solve(&rhs) {
        if d.iter().all(|v| v.is_finite()) {
            return Ok(d.as_slice().to_vec());
        }
    }
    let scale = 1.0 + jac.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut mu = 1e-14 * scale;
    for _ in 0..12 {
        let mut shifted = jac.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += mu;
        }
        if let Some(d) = shifted.lu().solve(&rhs) {
            if d.iter().all(|v| v.is_finite()) {
                return Ok(d.as_slice().to_vec());
            }
        }
        mu *= 100.0;
    }
    Err(Error::SingularJacobian)
}

pub fn newton_solve<S: NewtonSystem>(
    system: &S,
    x0: Vec<f64>,
    tol: f64,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let mut x = x0;
    let mut f = system.residual(&x);
    let mut norm = sup_norm(&f);
    let mut iterations = 0;
    let mut stalled = false;

    while norm > tol && iterations < opts.max_iter {
        let d = direction(system.jacobian(&x), &f)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let ft = system.residual(&trial);
            let nt = sup_norm(&ft);
            if nt.is_finite() && nt <= (1.0 - opts.armijo * t) * norm {
                x = trial;
                f = ft;
                norm = nt;
                break;
            }
            t *= 0.5;
            if t < opts.min_step {
                stalled = true;
                break;
            }
        }
        iterations += 1;
        if stalled {
            break;
        }
    }

    let converged = norm <= tol;
    if converged {
        for _ in 0..opts.polish {
            if norm == 0.0 {
                break;
            }
            let Ok(d) = direction(system.jacobian(&x), &f) else {
                break;
            };
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
            let ft = system.residual(&trial);
            let nt = sup_norm(&ft);
            if !(nt < norm) {
                break;
            }
            x = trial;
            f = ft;
            norm = nt;
        }
    }

    Ok(NewtonOutcome {
        x,
        residual_inf: norm,
        iterations,
        converged,
        stalled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Cubic;

    impl NewtonSystem for Cubic {
        fn dim(&self) -> usize {
            2
        }
        fn residual(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0].powi(3) + x[0] - 2.0, 2.0 * x[1] - x[0]]
        }
        fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[3.0 * x[0] * x[0] + 1.0, 0.0, -1.0, 2.0])
        }
    }

    #[test]
    fn solves_monotone_cubic() {
        let out = newton_solve(&Cubic, vec![30.0, -4.0], 1e-13, &NewtonOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-14);
        assert!((out.x[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_iterations_at_solution() {
        let out = newton_solve(&Cubic, vec![1.0, 0.5], 1e-13, &NewtonOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
    }

    struct Flat;

    impl NewtonSystem for Flat {
        fn dim(&self) -> usize {
            1
        }
        fn residual(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0].powi(3)]
        }
        fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_element(1, 1, 3.0 * x[0] * x[0])
        }
    }

    #[test]
    fn degenerate_root_converges_linearly() {
        let out = newton_solve(&Flat, vec![1.0], 1e-12, &NewtonOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.x[0].abs() < 1e-4);
    }
}
