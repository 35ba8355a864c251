//! The weighted star whose boundary data has unbounded m-normalized norm:
//! residuals, hub value and the growth of the Poincaré lower bound.

use mrws::analysis::{check_counterexample, truncated_hub_value};
use mrws::prelude::*;

fn main() -> mrws::Result<()> {
    let ce = build_counterexample(20, 3.0)?;
    let check = check_counterexample(&ce)?;
    println!("max relative boundary residual {:.1e}", check.max_boundary_residual);
    println!("hub value {:.15} vs truncated closed form {:.15}", check.hub_value, truncated_hub_value(20));

    for levels in [5, 10, 20] {
        let ce = build_counterexample(levels, 1.5)?;
        let norm = lm_infinity_norm(&ce.space, &ce.domain, &ce.flux)?;
        let probe = poincare_probe(&ce.space, &ce.domain, 1.5, 400, 10)?;
        println!("N = {levels:>2}: |phi / m(omega)|_inf = {norm:.3e}, Poincaré lower bound (p = 1.5) {:.3}", probe.lambda_best);
    }
    Ok(())
}
