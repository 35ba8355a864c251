//! Integration by parts and the divergence theorem for both boundary
//! operators on a random graph.

use mrws::instances::{random_domain, random_field, random_graph, GraphSpec};
use mrws::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mrws::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let space = random_graph(&mut rng, &GraphSpec::new(30))?;
    let domain = random_domain(&mut rng, &space, 0.5)?;
    let map = make_plaplacian(3.0)?;
    let u = random_field(&mut rng, domain.closure(), -1.0, 1.0);
    let w = random_field(&mut rng, domain.closure(), -1.0, 1.0);
    for variant in [BoundaryVariant::Gl, BoundaryVariant::Drov] {
        let (ibp, div) = check_greens_identities(&space, &domain, &map, &u, &w, variant)?;
        println!("{variant:?}");
        println!("  by parts:   {:+.15e} vs {:+.15e}  (rel gap {:.1e})", ibp.lhs, ibp.rhs, ibp.relative_gap());
        println!("  divergence: {:+.15e} vs {:+.15e}  (rel gap {:.1e})", div.lhs, div.rhs, div.relative_gap());
    }
    Ok(())
}
