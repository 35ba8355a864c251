//! Nonlocal Leray–Lions operators on finite metric random walk spaces.
//!
//! The crate builds random walk spaces from weighted graphs or kernels on a
//! grid, evaluates the m-divergence and the two Neumann boundary operators,
//! solves the resolvent problem `u - lambda div_m a_p u = z` with prescribed
//! boundary flux, runs implicit Euler for the evolution problem, and checks the
//! structural identities these operators satisfy.
//!
//! ```
//! use mrws::prelude::*;
//!
//! let space = build_graph_space(&[(0, 1, 1.0)]).unwrap();
//! let domain = m_boundary(&space, &[0]).unwrap();
//! let problem = EllipticProblem::new(
//!     &space,
//!     &domain,
//!     make_plaplacian(2.0).unwrap(),
//!     BoundaryVariant::Gl,
//!     1.0,
//!     Field::constant(domain.omega(), 1.0),
//!     Field::constant(domain.boundary(), 0.5),
//! )
//! .unwrap();
//! let report = solve_resolvent(&problem, &SolverOptions::default()).unwrap();
//! assert!((report.u.get(0).unwrap() - 1.5).abs() < 1e-12);
//! assert!((report.u.get(1).unwrap() - 2.0).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod calculus;
pub mod cli;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod instances;
pub mod kernel;
pub mod newton;
pub mod space;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::analysis::{
        boundary_contraction_check, boundary_poincare_p2, build_counterexample, lm_infinity_norm,
        poincare_p2, poincare_probe, subdifferential_gap_p2, Counterexample, PoincareReport,
    };
    pub use crate::calculus::{
        check_greens_identities, dirichlet_energy, m_divergence, neumann_flux, nonlocal_gradient,
        BoundaryVariant, Field, IdentityReport,
    };
    pub use crate::elliptic::{
        check_linf_boundary_bound, extend_boundary_drov, extend_boundary_gl, oracle_solve,
        solve_penalized, solve_resolvent, EllipticProblem, PenaltyParams, SolveReport,
        SolverOptions,
    };
    pub use crate::error::{Error, Result};
    pub use crate::evolution::{
        accretivity_probe, contraction_gap, evolve, mass_ledger, EvolutionProblem, Probe,
        Trajectory,
    };
    pub use crate::kernel::{make_plaplacian, make_weighted_plaplacian, verify_structure, LerayLionsMap};
    pub use crate::space::{
        build_graph_space, build_kernel_space, check_balance, m_boundary, pair_integral, Domain,
        Grid, KernelProfile, Node, Region, Space,
    };
}

use rayon::prelude::*;

use crate::space::Node;

/// Row count above which per-node work is spread over the rayon pool.
pub(crate) const PAR_THRESHOLD: usize = 512;

/// Maps `f` over `nodes`, in parallel for large inputs. Output order always
/// matches input order, so reductions over the result are deterministic.
pub(crate) fn par_map<T, F>(nodes: &[Node], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Node) -> T + Sync,
{
    if nodes.len() >= PAR_THRESHOLD {
        nodes.par_iter().map(|&x| f(x)).collect()
    } else {
        nodes.iter().map(|&x| f(x)).collect()
    }
}
