//! Exact p = 2 Poincaré constants and probed lower bounds for other p.

use mrws::prelude::*;

fn main() -> mrws::Result<()> {
    let two = build_graph_space(&[(0, 1, 1.0)])?;
    let d = m_boundary(&two, &[0])?;
    println!("two nodes: {:.15} (1/sqrt 2 = {:.15})", poincare_p2(&two, &d)?.lambda_best, 0.5f64.sqrt());

    let path: Vec<_> = (0..12).map(|i| (i, i + 1, 1.0)).collect();
    let space = build_graph_space(&path)?;
    let domain = m_boundary(&space, &(0..8).collect::<Vec<_>>())?;
    let exact = poincare_p2(&space, &domain)?;
    println!("path of 13, omega = 0..8: exact p = 2 constant {:.6}", exact.lambda_best);
    for p in [1.5, 2.0, 3.0] {
        let probe = poincare_probe(&space, &domain, p, 300, 5)?;
        println!("  probe p = {p}: lower bound {:.6}", probe.lambda_best);
    }
    Ok(())
}
