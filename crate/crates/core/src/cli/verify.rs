//! Property suite run by `mrws verify`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::Loaded;
use super::{problem, CliError, EXIT_PROPERTY};
use crate::analysis::{poincare_p2, poincare_ratio};
use crate::calculus::{check_greens_identities, neumann_flux, BoundaryVariant};
use crate::elliptic::{check_linf_boundary_bound, oracle_solve, solve_resolvent};
use crate::evolution::{accretivity_probe, Probe};
use crate::instances::random_field;
use crate::kernel::verify_structure;
use crate::space::check_balance;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

pub fn run(loaded: &Loaded, out: &mut dyn Write) -> Result<i32, CliError> {
    let seed = loaded.seed()?;
    let samples = loaded.scenario.samples.unwrap_or(20).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = &loaded.space;
    let domain = loaded.domain()?;
    let map = loaded.map()?;
    let variant = loaded.variant()?;
    let mut results = Vec::new();

    let bal = check_balance(space);
    let worst = bal.max_reversibility_violation.max(bal.max_invariance_violation);
    results.push(Outcome {
        name: "balance",
        pass: worst <= 1e-14,
        detail: format!("max violation {worst:.2e}"),
    });

    let st = verify_structure(&map, space, 10_000, seed)?;
    results.push(Outcome {
        name: "structure",
        pass: st.max_violation() == 0.0,
        detail: format!("max defect {:.2e} over {} samples", st.max_violation(), st.samples_used),
    });

    let mut worst_gap = 0.0f64;
    for _ in 0..samples {
        let u = random_field(&mut rng, domain.closure(), -1.0, 1.0);
        let w = random_field(&mut rng, domain.closure(), -1.0, 1.0);
        let (ibp, div) = check_greens_identities(space, domain, &map, &u, &w, variant)?;
        worst_gap = worst_gap.max(ibp.relative_gap()).max(div.relative_gap());
    }
    results.push(Outcome {
        name: "greens_identities",
        pass: worst_gap <= 1e-12,
        detail: format!("max relative gap {worst_gap:.2e}"),
    });

    let pb = problem(loaded)?;
    let opts = loaded.solver();
    let report = solve_resolvent(&pb, &opts)?;
    report.ensure_converged()?;
    let mass_tol = 1e-10 * pb.scale() * (1.0 + pb.lambda);
    results.push(Outcome {
        name: "mass_identity",
        pass: report.mass_identity_gap <= mass_tol,
        detail: format!("gap {:.2e}", report.mass_identity_gap),
    });
    let flux = neumann_flux(space, domain, &map, &report.u, variant)?;
    let flux_err = flux
        .iter()
        .map(|(x, f)| (f - pb.flux.value(x).unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    results.push(Outcome {
        name: "flux_consistency",
        pass: flux_err <= opts.tol * pb.scale(),
        detail: format!("max |N u - phi| {flux_err:.2e}"),
    });

    if map.is_potential() {
        let oracle = oracle_solve(&pb)?;
        let diff = oracle
            .iter()
            .map(|(x, v)| (v - report.u.value(x).unwrap_or(f64::INFINITY)).abs())
            .fold(0.0, f64::max);
        results.push(Outcome {
            name: "oracle_agreement",
            pass: diff <= 1e-6,
            detail: format!("max difference {diff:.2e}"),
        });
    }

    let pairs: Vec<_> = (0..samples)
        .map(|_| {
            (
                random_field(&mut rng, domain.omega(), -2.0, 2.0),
                random_field(&mut rng, domain.omega(), -2.0, 2.0),
            )
        })
        .collect();
    let acc = accretivity_probe(space, domain, &map, &pb.flux, variant, &pairs, &Probe::default_family())?;
    results.push(Outcome {
        name: "accretivity",
        pass: acc.min_pairing >= -1e-12 * (1.0 + acc.scale),
        detail: format!("min pairing {:.2e}", acc.min_pairing),
    });

    if variant == BoundaryVariant::Drov {
        let margin = check_linf_boundary_bound(space, domain, &map, &report, &pb.flux)?;
        results.push(Outcome {
            name: "linf_boundary_bound",
            pass: margin >= -1e-10,
            detail: format!("margin {margin:.3e}"),
        });
    }

    if domain.closure().len() >= 2 {
        let pc = poincare_p2(space, domain)?;
        let mut slack = f64::INFINITY;
        for _ in 0..samples {
            let u = random_field(&mut rng, domain.closure(), -1.0, 1.0);
            let r = poincare_ratio(space, domain, &u, 2.0)?;
            slack = slack.min(pc.lambda_best - r);
        }
        results.push(Outcome {
            name: "poincare_p2",
            pass: slack >= -1e-10,
            detail: format!("constant {:.6e}, min slack {slack:.2e}", pc.lambda_best),
        });
    }

    let w = |e: std::io::Error| CliError::config(format!("stdout: {e}"));
    let mut all = true;
    for r in &results {
        all &= r.pass;
        writeln!(out, "{} {:<20} {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail).map_err(w)?;
    }
    Ok(if all { 0 } else { EXIT_PROPERTY })
}
