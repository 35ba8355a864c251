//! Graph and kernel spaces, their invariant measures and m-boundaries.

use mrws::prelude::*;

fn main() -> mrws::Result<()> {
    let graph = build_graph_space(&[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 0, 0.5), (2, 2, 0.3)])?;
    println!("graph: nu = {:?}", graph.nu_all());
    for x in 0..graph.node_count() {
        println!("  m_{x} = {:?}", graph.row(x));
    }
    let bal = check_balance(&graph);
    println!("  reversibility {:.1e}, invariance {:.1e}", bal.max_reversibility_violation, bal.max_invariance_violation);

    let domain = m_boundary(&graph, &[0, 1])?;
    println!("omega {:?}, boundary {:?}", domain.omega(), domain.boundary());
    for &x in domain.boundary() {
        println!("  m_{x}(omega) = {:.4}", domain.omega_mass(x));
    }

    let grid = Grid::new(vec![0.0, 0.0], 0.25, vec![5, 5])?;
    let kernel = build_kernel_space(&grid, &KernelProfile::Tent { height: 1.0 }, 0.5)?;
    let centre = 12;
    println!("5x5 tent kernel, radius 0.5: node {} = {} jumps to {} neighbours",
        centre, kernel.label(centre), kernel.row(centre).len());
    let bal = check_balance(&kernel);
    println!("  reversibility {:.1e}", bal.max_reversibility_violation);
    Ok(())
}
