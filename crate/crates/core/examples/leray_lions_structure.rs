//! Sampled structure checks of the p-Laplacian, a weighted variant and a
//! deliberately broken map.

use std::sync::Arc;

use mrws::kernel::make_custom;
use mrws::prelude::*;

fn main() -> mrws::Result<()> {
    let space = build_graph_space(&[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])?;
    for p in [1.5, 2.0, 4.0] {
        let report = verify_structure(&make_plaplacian(p)?, &space, 5000, 1)?;
        println!("p-Laplacian p = {p}: max defect {:.1e}", report.max_violation());
    }
    let weighted = make_weighted_plaplacian(3.0, vec![0.5, 1.0, 2.0])?;
    let report = verify_structure(&weighted, &space, 5000, 1)?;
    println!("weighted p = 3 (c = {}, C = {}): max defect {:.1e}", weighted.c(), weighted.big_c(), report.max_violation());

    // r + 1 is neither odd nor zero at zero
    let shifted = make_custom(2.0, 1.0, 1.0, false, Arc::new(|_, _, r| r + 1.0), None)?;
    let report = verify_structure(&shifted, &space, 5000, 1)?;
    println!("shifted map: {report:?}");
    Ok(())
}
