//! Damped Newton, the energy oracle and the penalized scheme on one problem.

use mrws::elliptic::{oracle_solve, solve_penalized_path};
use mrws::prelude::*;

fn main() -> mrws::Result<()> {
    let space = build_graph_space(&[
        (0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 4, 0.5), (4, 5, 1.0), (5, 0, 1.0), (1, 4, 0.4),
    ])?;
    let domain = m_boundary(&space, &[0, 1, 2])?;
    let z = Field::new(vec![0, 1, 2], vec![1.0, -0.5, 0.25])?;
    let flux = Field::constant(domain.boundary(), 0.2);

    for variant in [BoundaryVariant::Gl, BoundaryVariant::Drov] {
        let pb = EllipticProblem::new(&space, &domain, make_plaplacian(3.0)?, variant, 0.5, z.clone(), flux.clone())?;
        let newton = solve_resolvent(&pb, &SolverOptions::default())?;
        let oracle = oracle_solve(&pb)?;
        println!("{variant:?}: {} Newton steps, residual {:.1e}, mass gap {:.1e}",
            newton.iterations, newton.residual_inf, newton.mass_identity_gap);
        for (x, u) in newton.u.iter() {
            println!("  u({x}) = {u:+.12}   oracle {:+.12}", oracle.get(x)?);
        }
        let schedule: Vec<PenaltyParams> = [10.0, 1e3, 1e5]
            .iter()
            .map(|&n| PenaltyParams { n, k: n, truncation: 1e6 })
            .collect();
        let path = solve_penalized_path(&pb, &schedule, &SolverOptions::default())?;
        for (params, u) in schedule.iter().zip(path.penalized_path.as_deref().unwrap_or(&[])) {
            let gap = u.iter().map(|(x, v)| (v - newton.u.value(x).unwrap_or(0.0)).abs()).fold(0.0, f64::max);
            println!("  penalized n = k = {:.0e}: distance {gap:.2e}", params.n);
        }
    }
    Ok(())
}
