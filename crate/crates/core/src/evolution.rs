//! Implicit Euler for `u_t = div_m a_p u` in omega with time-independent
//! boundary flux, plus the mass ledger, contraction and accretivity checks.

use serde::Serialize;

use crate::calculus::{dense_div, BoundaryVariant, Field};
use crate::elliptic::{
    extend_boundary_drov, extend_boundary_gl, solve_resolvent, EllipticProblem, SolveReport,
    SolverOptions,
};
use crate::error::{Error, Result};
use crate::kernel::LerayLionsMap;
use crate::space::{Domain, Space};

#[derive(Clone, Debug)]
pub struct EvolutionProblem<'a> {
    pub space: &'a Space,
    pub domain: &'a Domain,
    pub map: LerayLionsMap,
    pub variant: BoundaryVariant,
    /// Initial datum on omega.
    pub u0: Field,
    pub flux: Field,
    pub dt: f64,
    pub horizon: f64,
}

impl<'a> EvolutionProblem<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        space: &'a Space,
        domain: &'a Domain,
        map: LerayLionsMap,
        variant: BoundaryVariant,
        u0: Field,
        flux: Field,
        dt: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && horizon > 0.0 && dt.is_finite() && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt} and horizon = {horizon} must be positive"
            )));
        }
        if dt > horizon {
            return Err(Error::InvalidParameter(format!("dt = {dt} exceeds horizon {horizon}")));
        }
        domain.ensure_compatible(space)?;
        Ok(Self {
            space,
            domain,
            map,
            variant,
            u0: u0.restrict(domain.omega())?,
            flux: flux.restrict(domain.boundary())?,
            dt,
            horizon,
        })
    }

    /// Uniform grid `0, dt, 2 dt, ...` ending exactly at the horizon.
    pub fn time_grid(&self) -> Vec<f64> {
        let ratio = self.horizon / self.dt;
        let steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio {
            ratio.round() as usize
        } else {
            ratio.ceil() as usize
        };
        let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * self.dt).collect();
        times[steps] = self.horizon;
        times
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Solution on omega at each time.
    pub fields: Vec<Field>,
    /// Boundary values of step `k` at index `k - 1`.
    pub boundary_traces: Vec<Field>,
    /// `sum_omega u nu` at each time.
    pub masses: Vec<f64>,
    #[serde(skip)]
    pub step_reports: Vec<SolveReport>,
    /// `nu` restricted to omega.
    pub weights: Field,
}

impl Trajectory {
    pub fn final_field(&self) -> &Field {
        self.fields.last().expect("trajectory holds the initial datum")
    }

    /// Writes `t,node,value` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        w.write_record(["t", "node", "value"]).map_err(io)?;
        for (t, f) in self.times.iter().zip(&self.fields) {
            for (x, v) in f.iter() {
                w.write_record([t.to_string(), x.to_string(), v.to_string()]).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))
    }
}

/// A step that failed to converge, with everything computed before it.
#[derive(Debug)]
pub struct EvolutionFailure {
    pub failed_step: usize,
    pub report: SolveReport,
    pub partial: Trajectory,
}

fn mass(field: &Field, weights: &Field) -> f64 {
    field
        .iter()
        .map(|(x, v)| v * weights.value(x).unwrap_or(0.0))
        .sum()
}

/// Runs `u^k = (I + dt_k B)^{-1} u^{k-1}` over the time grid.
pub fn evolve(problem: &EvolutionProblem<'_>, opts: &SolverOptions) -> Result<Trajectory> {
    let (space, domain) = (problem.space, problem.domain);
    let weights = Field::from_fn(domain.omega(), |x| space.nu(x));
    let times = problem.time_grid();
    let mut traj = Trajectory {
        times: vec![0.0],
        fields: vec![problem.u0.clone()],
        boundary_traces: Vec::new(),
        masses: vec![mass(&problem.u0, &weights)],
        step_reports: Vec::new(),
        weights,
    };
    let mut stepper = EllipticProblem::new(
        space,
        domain,
        problem.map.clone(),
        problem.variant,
        problem.dt,
        problem.u0.clone(),
        problem.flux.clone(),
    )?;
    for k in 1..times.len() {
        stepper.lambda = times[k] - times[k - 1];
        let report = solve_resolvent(&stepper, opts)?;
        if !report.converged {
            return Err(Error::StepFailed(Box::new(EvolutionFailure {
                failed_step: k,
                report,
                partial: traj,
            })));
        }
        let u = report.u.restrict(domain.omega())?;
        traj.boundary_traces.push(report.u.restrict(domain.boundary())?);
        traj.masses.push(mass(&u, &traj.weights));
        traj.times.push(times[k]);
        traj.fields.push(u.clone());
        traj.step_reports.push(report);
        stepper.z = u;
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassLedger {
    /// `|(mass_k - mass_0) - t_k sum_boundary phi nu|` per time.
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    /// Largest mass magnitude seen, the natural scale of the gaps.
    pub scale: f64,
}

pub fn mass_ledger(trajectory: &Trajectory, flux: &Field, space: &Space, domain: &Domain) -> Result<MassLedger> {
    domain.ensure_compatible(space)?;
    flux.ensure_covers(domain.boundary())?;
    let inflow: f64 = domain
        .boundary()
        .iter()
        .map(|&x| flux.value(x).unwrap_or(0.0) * space.nu(x))
        .sum();
    let m0 = trajectory.masses[0];
    let gaps: Vec<f64> = trajectory
        .times
        .iter()
        .zip(&trajectory.masses)
        .map(|(t, m)| ((m - m0) - t * inflow).abs())
        .collect();
    let scale = 1.0
        + trajectory.masses.iter().fold(0.0f64, |a, m| a.max(m.abs()))
        + (trajectory.times.last().copied().unwrap_or(0.0) * inflow).abs();
    Ok(MassLedger {
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
        gaps,
        scale,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    /// `|(u_A - u_B)^+|_{L^q(omega, nu)}` per time.
    pub norms: Vec<f64>,
    /// Largest step-to-step increase, `0` when the sequence never grows.
    pub max_increase: f64,
}

/// `L^q(omega, nu)` norm of the positive part of `a - b`; `q = inf` allowed.
pub fn positive_part_norm(a: &Field, b: &Field, weights: &Field, q: f64) -> Result<f64> {
    let mut acc = 0.0f64;
    for (x, w) in weights.iter() {
        let d = (a.get(x)? - b.get(x)?).max(0.0);
        if q.is_infinite() {
            acc = acc.max(d);
        } else {
            acc += d.powf(q) * w;
        }
    }
    Ok(if q.is_infinite() { acc } else { acc.powf(1.0 / q) })
}

pub fn contraction_gap(a: &Trajectory, b: &Trajectory, q: f64) -> Result<ContractionReport> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("norm exponent q = {q} must be at least 1")));
    }
    if a.times != b.times || a.weights != b.weights {
        return Err(Error::MismatchedGrids);
    }
    let norms = a
        .fields
        .iter()
        .zip(&b.fields)
        .map(|(fa, fb)| positive_part_norm(fa, fb, &a.weights, q))
        .collect::<Result<Vec<_>>>()?;
    let max_increase = norms
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    Ok(ContractionReport { norms, max_increase })
}

/// Odd, nondecreasing, `C^1` probe: zero on `[-eps, eps]`, slope at most one,
/// constant beyond `|r| = m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Probe {
    pub eps: f64,
    pub m: f64,
}

impl Probe {
    pub fn new(eps: f64, m: f64) -> Result<Self> {
        if !(eps > 0.0 && m >= 3.0 * eps) {
            return Err(Error::InvalidParameter(format!(
                "probe needs eps > 0 and M >= 3 eps, got eps = {eps}, M = {m}"
            )));
        }
        Ok(Self { eps, m })
    }

    /// `eps` in `{1e-3, 1e-1}` times `M` in `{1, 10}`.
    pub fn default_family() -> Vec<Probe> {
        let mut out = Vec::new();
        for eps in [1e-3, 1e-1] {
            for m in [1.0, 10.0] {
                out.push(Probe { eps, m });
            }
        }
        out
    }

    fn ramp(&self, s: f64) -> f64 {
        let (e, m) = (self.eps, self.m);
        if s <= e {
            0.0
        } else if s <= 2.0 * e {
            (s - e).powi(2) / (2.0 * e)
        } else if s <= m - e {
            0.5 * e + (s - 2.0 * e)
        } else {
            let top = 0.5 * e + (m - 3.0 * e);
            let h = s.min(m) - (m - e);
            top + h - h * h / (2.0 * e)
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r >= 0.0 {
            self.ramp(r)
        } else {
            -self.ramp(-r)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AccretivityReport {
    pub min_pairing: f64,
    /// Largest `sum_omega |v_1 - v_2| |q(u_1 - u_2)| nu` seen.
    pub scale: f64,
}

/// Extends interior data to the closure through the variant's boundary equation.
pub fn extend_to_closure(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    flux: &Field,
    variant: BoundaryVariant,
    u: &Field,
) -> Result<Field> {
    let interior = u.restrict(domain.omega())?;
    let trace = match variant {
        BoundaryVariant::Gl => extend_boundary_gl(space, domain, map, &interior, flux)?,
        BoundaryVariant::Drov => extend_boundary_drov(space, domain, map, &interior, flux)?,
    };
    interior.join(&trace)
}

/// Minimum of `sum_omega (v_1 - v_2) q(u_1 - u_2) nu` over pairs and probes,
/// with `v_i = -div_m a_p u_i`.
#[allow(clippy::too_many_arguments)]
pub fn accretivity_probe(
    space: &Space,
    domain: &Domain,
    map: &LerayLionsMap,
    flux: &Field,
    variant: BoundaryVariant,
    pairs: &[(Field, Field)],
    probes: &[Probe],
) -> Result<AccretivityReport> {
    let n = space.node_count();
    let mut report = AccretivityReport {
        min_pairing: f64::INFINITY,
        scale: 0.0,
    };
    for (u1, u2) in pairs {
        let e1 = extend_to_closure(space, domain, map, flux, variant, u1)?.to_dense(n, 0.0);
        let e2 = extend_to_closure(space, domain, map, flux, variant, u2)?.to_dense(n, 0.0);
        let dv: Vec<(f64, f64, f64)> = domain
            .omega()
            .iter()
            .map(|&x| {
                let v1 = -dense_div(space, domain, map, &e1, x);
                let v2 = -dense_div(space, domain, map, &e2, x);
                (v1 - v2, e1[x] - e2[x], space.nu(x))
            })
            .collect();
        for probe in probes {
            let mut pairing = 0.0;
            let mut scale = 0.0;
            for &(d, du, nu) in &dv {
                let q = probe.eval(du);
                pairing += d * q * nu;
                scale += (d * q).abs() * nu;
            }
            report.min_pairing = report.min_pairing.min(pairing);
            report.scale = report.scale.max(scale);
        }
    }
    if pairs.is_empty() || probes.is_empty() {
        report.min_pairing = 0.0;
    }
    Ok(report)
}
