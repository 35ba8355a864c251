//! Nonlocal diffusion on a 1D kernel space with a constant boundary inflow.

use mrws::prelude::*;

fn main() -> mrws::Result<()> {
    let grid = Grid::new(vec![0.0], 0.05, vec![41])?;
    let space = build_kernel_space(&grid, &KernelProfile::Box { height: 1.0 }, 0.15)?;
    let omega: Vec<Node> = (5..36).collect();
    let domain = m_boundary(&space, &omega)?;
    let u0 = Field::from_fn(domain.omega(), |x| if (18..23).contains(&x) { 1.0 } else { 0.0 });
    let flux = Field::constant(domain.boundary(), 0.1);
    let pb = EvolutionProblem::new(&space, &domain, make_plaplacian(2.5)?, BoundaryVariant::Gl, u0, flux.clone(), 0.02, 0.4)?;
    let traj = evolve(&pb, &SolverOptions::default())?;
    let ledger = mass_ledger(&traj, &flux, &space, &domain)?;
    for (k, (t, m)) in traj.times.iter().zip(&traj.masses).enumerate().step_by(5) {
        let peak = traj.fields[k].sup_norm();
        println!("t = {t:.2}  mass = {m:.10}  peak = {peak:.4}  ledger gap = {:.1e}", ledger.gaps[k]);
    }
    println!("max ledger gap {:.1e} at scale {:.3}", ledger.max_gap, ledger.scale);
    Ok(())
}
