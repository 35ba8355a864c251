//! Command-line front end.
//!
//! Exit codes: `0` when every contract of the mode holds, `2` for
//! configuration errors, `3` for solver non-convergence, `4` for a violated
//! property. Errors are also written to stderr as one JSON object.

mod config;
mod verify;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::analysis::{
    build_counterexample, check_counterexample, poincare_p2, poincare_probe,
};
use crate::calculus::Field;
use crate::elliptic::{solve_resolvent, EllipticProblem, SolverOptions};
use crate::error::Error;
use crate::evolution::{evolve, mass_ledger, EvolutionProblem};
use crate::kernel::make_plaplacian;
use crate::space::check_balance;

pub use config::{load, load_space_file, Loaded, Scenario};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_PROPERTY: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            kind: "config",
            message: msg.into(),
        }
    }

    pub fn property(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_PROPERTY,
            kind: "property",
            message: msg.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::config(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::NonConvergence { .. }
            | Error::StepFailed(_)
            | Error::SingularJacobian
            | Error::BracketNotFound(_) => (EXIT_SOLVER, "solver"),
            Error::DegenerateForm(_) => (EXIT_PROPERTY, "property"),
            _ => (EXIT_CONFIG, "config"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mrws", version, about = "Nonlocal Leray-Lions problems on random walk spaces")]
struct Cli {
    /// Worker threads for row assembly; falls back to MRWS_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Balance report of the space and summary of the domain.
    Check { config: PathBuf },
    /// Solve the resolvent problem; writes solution.csv and report.json.
    Solve {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Implicit Euler; writes trajectory.csv and ledger.csv.
    Evolve {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Poincaré constant: exact for p = 2, a lower bound otherwise.
    Poincare { config: PathBuf },
    /// Star-graph counterexample residual table.
    Counterexample {
        #[arg(long)]
        levels: usize,
        #[arg(short = 'p')]
        p: f64,
        #[arg(long)]
        verify: bool,
    },
    /// Run the identity and property suite on the configured instance.
    Verify { config: PathBuf },
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var("MRWS_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| CliError::config(format!("MRWS_THREADS={v:?} is not a count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        // A second initialization in the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

/// Parses `argv` and runs the selected mode, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = configure_threads(cli.threads).and_then(|_| dispatch(cli.command, &mut out));
    let _ = out.flush();
    match result {
        Ok(code) => code,
        Err(e) => {
            let payload = json!({ "error": e.kind, "message": e.message, "exit_code": e.code });
            eprintln!("{payload}");
            e.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Check { config } => check(&config, out),
        Command::Solve { config, out: dir } => solve(&config, &dir, out),
        Command::Evolve { config, out: dir } => evolve_cmd(&config, &dir, out),
        Command::Poincare { config } => poincare(&config, out),
        Command::Counterexample { levels, p, verify } => counterexample(levels, p, verify, out),
        Command::Verify { config } => verify::run(&config::load(&config)?, out),
    }
}

fn emit(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), CliError> {
    writeln!(out, "{}", serde_json::to_string_pretty(value).expect("json values serialize"))
        .map_err(|e| CliError::config(format!("stdout: {e}")))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(&path, e))
}

const BALANCE_TOL: f64 = 1e-14;

fn check(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = config::load(path)?;
    let balance = check_balance(&loaded.space);
    let mut report = json!({
        "nodes": loaded.space.node_count(),
        "balance": balance,
    });
    if let Some(d) = &loaded.domain {
        report["domain"] = json!({
            "omega": d.omega(),
            "boundary": d.boundary(),
            "closure": d.closure(),
            "interior_leak": d.interior_leak(),
        });
    }
    emit(out, &report)?;
    let ok = balance.max_reversibility_violation <= BALANCE_TOL
        && balance.max_invariance_violation <= BALANCE_TOL;
    Ok(if ok { 0 } else { EXIT_PROPERTY })
}

fn problem<'a>(loaded: &'a Loaded) -> Result<EllipticProblem<'a>, CliError> {
    let domain = loaded.domain()?;
    let z = loaded.field("z", loaded.scenario.z.as_ref(), domain.omega())?;
    let flux = loaded.field("flux", loaded.scenario.flux.as_ref(), domain.boundary())?;
    Ok(EllipticProblem::new(
        &loaded.space,
        domain,
        loaded.map()?,
        loaded.variant()?,
        loaded.lambda()?,
        z,
        flux,
    )?)
}

fn solve(path: &Path, dir: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = config::load(path)?;
    let pb = problem(&loaded)?;
    let opts = loaded.solver();
    let report = solve_resolvent(&pb, &opts)?;

    let mut csv = create(dir, "solution.csv")?;
    report.u.write_csv(&loaded.space, &mut csv)?;
    csv.flush().map_err(|e| CliError::io(dir, e))?;
    let summary = json!({
        "residual_inf": report.residual_inf,
        "iterations": report.iterations,
        "converged": report.converged,
        "mass_identity_gap": report.mass_identity_gap,
    });
    let mut file = create(dir, "report.json")?;
    writeln!(file, "{}", serde_json::to_string_pretty(&summary).expect("json values serialize"))
        .map_err(|e| CliError::io(dir, e))?;
    emit(out, &summary)?;

    if !report.converged {
        return Ok(EXIT_SOLVER);
    }
    let scale = pb.scale() * (1.0 + pb.lambda);
    Ok(if report.mass_identity_gap <= 1e-10 * scale { 0 } else { EXIT_PROPERTY })
}

fn evolve_cmd(path: &Path, dir: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = config::load(path)?;
    let domain = loaded.domain()?;
    let sc = &loaded.scenario;
    let dt = sc.dt.ok_or_else(|| CliError::config("evolve needs \"dt\""))?;
    let horizon = sc.horizon.ok_or_else(|| CliError::config("evolve needs \"T\""))?;
    let u0 = loaded.field("u0", sc.u0.as_ref(), domain.omega())?;
    let flux = loaded.field("flux", sc.flux.as_ref(), domain.boundary())?;
    let pb = EvolutionProblem::new(
        &loaded.space,
        domain,
        loaded.map()?,
        loaded.variant()?,
        u0,
        flux,
        dt,
        horizon,
    )?;
    let traj = evolve(&pb, &loaded.solver())?;
    let ledger = mass_ledger(&traj, &pb.flux, &loaded.space, domain)?;

    let mut tcsv = create(dir, "trajectory.csv")?;
    traj.write_csv(&mut tcsv)?;
    tcsv.flush().map_err(|e| CliError::io(dir, e))?;

    let mut lcsv = create(dir, "ledger.csv")?;
    writeln!(lcsv, "t,mass,drift_gap").map_err(|e| CliError::io(dir, e))?;
    for ((t, m), g) in traj.times.iter().zip(&traj.masses).zip(&ledger.gaps) {
        writeln!(lcsv, "{t},{m},{g}").map_err(|e| CliError::io(dir, e))?;
    }
    lcsv.flush().map_err(|e| CliError::io(dir, e))?;

    emit(
        out,
        &json!({
            "steps": traj.times.len() - 1,
            "final_time": traj.times.last(),
            "max_drift_gap": ledger.max_gap,
            "mass_scale": ledger.scale,
        }),
    )?;
    Ok(if ledger.max_gap <= 1e-10 * ledger.scale { 0 } else { EXIT_PROPERTY })
}

fn poincare(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = config::load(path)?;
    let domain = loaded.domain()?;
    let spec = loaded.scenario.poincare.as_ref();
    let p = spec.and_then(|s| s.p).unwrap_or(2.0);
    let report = if p == 2.0 {
        poincare_p2(&loaded.space, domain)?
    } else {
        let iterations = spec.and_then(|s| s.iterations).unwrap_or(500);
        poincare_probe(&loaded.space, domain, p, iterations, loaded.seed()?)?
    };
    emit(
        out,
        &json!({ "p": report.p, "lambda_best": report.lambda_best, "exact": report.exact }),
    )?;
    Ok(0)
}

const COUNTEREXAMPLE_TOL: f64 = 1e-12;

fn counterexample(levels: usize, p: f64, verify: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let ce = build_counterexample(levels, p)?;
    let check = check_counterexample(&ce)?;
    let w = |e: std::io::Error| CliError::config(format!("stdout: {e}"));
    writeln!(out, "{:>5} {:>24} {:>24} {:>24} {:>10}", "n", "u(x_n)", "flux(x_n)", "(6/7)^n", "rel_resid").map_err(w)?;
    for r in &check.rows {
        writeln!(
            out,
            "{:>5} {:>24.16e} {:>24.16e} {:>24.16e} {:>10.2e}",
            r.level, r.u, r.flux, r.flux_expected, r.boundary_residual
        )
        .map_err(w)?;
    }
    writeln!(
        out,
        "hub: v(x_0) = {:.16e}, closed form {:.16e}, rel_resid {:.2e}",
        check.hub_value, check.hub_expected, check.hub_residual
    )
    .map_err(w)?;
    if !verify {
        return Ok(0);
    }

    // Recover u from (v, flux) with the resolvent solver at lambda = 1.
    let pb = EllipticProblem::new(
        &ce.space,
        &ce.domain,
        make_plaplacian(p)?,
        crate::calculus::BoundaryVariant::Gl,
        1.0,
        ce.v.clone(),
        ce.flux.clone(),
    )?;
    let report = solve_resolvent(&pb, &SolverOptions::default())?;
    report.ensure_converged()?;
    let recovery = recovery_error(&report.u, &ce.u);
    writeln!(out, "solver recovery: max |u - u_exact| / (1 + |u_exact|) = {recovery:.2e}").map_err(w)?;

    let ok = check.max_boundary_residual <= COUNTEREXAMPLE_TOL
        && check.hub_residual <= COUNTEREXAMPLE_TOL
        && recovery <= 1e-9;
    writeln!(out, "{}", if ok { "PASS" } else { "FAIL" }).map_err(w)?;
    Ok(if ok { 0 } else { EXIT_PROPERTY })
}

fn recovery_error(u: &Field, exact: &Field) -> f64 {
    exact
        .iter()
        .map(|(x, e)| (u.value(x).unwrap_or(f64::INFINITY) - e).abs() / (1.0 + e.abs()))
        .fold(0.0, f64::max)
}
