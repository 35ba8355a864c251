//! Truncation and penalization scheme for the resolvent problem.
//!
//! Interior rows read `T_K(u) - lambda div u + P(u) = z_{n,k}` and boundary
//! rows `lambda (N u - phi) + P(u) = 0`, with
//! `P(u) = (1/n)|u|^{p-2}u^+ - (1/k)|u|^{p-2}u^-` and `z_{n,k}` the data
//! clipped to `[-k, n]`. GL boundary data is clipped the same way.

use super::{initial_guess, run_newton, EllipticProblem, Penalty, SolveReport, SolverOptions};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyParams {
    pub n: f64,
    pub k: f64,
    /// Truncation level `K` of the zeroth-order term.
    pub truncation: f64,
}

impl PenaltyParams {
    fn validate(&self) -> Result<Penalty> {
        if !(self.n > 0.0 && self.k > 0.0 && self.truncation > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "penalty parameters must be positive: {self:?}"
            )));
        }
        Ok(Penalty {
            n: self.n,
            k: self.k,
            truncation: self.truncation,
        })
    }
}

pub fn solve_penalized(
    problem: &EllipticProblem<'_>,
    params: PenaltyParams,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let pen = params.validate()?;
    run_newton(problem, Some(pen), initial_guess(problem), opts)
}

/// Runs a schedule of penalty parameters, warm-starting each solve from the
/// previous one. The last solve is returned with every iterate in
/// `penalized_path`.
pub fn solve_penalized_path(
    problem: &EllipticProblem<'_>,
    schedule: &[PenaltyParams],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let mut path = Vec::with_capacity(schedule.len());
    let mut start = initial_guess(problem);
    let mut last = None;
    for params in schedule {
        let report = run_newton(problem, Some(params.validate()?), start, opts)?;
        report.ensure_converged()?;
        start = report.u.values().to_vec();
        path.push(report.u.clone());
        last = Some(report);
    }
    let mut report = last.ok_or_else(|| Error::InvalidParameter("empty penalty schedule".into()))?;
    report.penalized_path = Some(path);
    Ok(report)
}
