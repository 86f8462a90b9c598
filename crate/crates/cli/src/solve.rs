use std::process::ExitCode;

use bp_core::instance::random_instance;
use bp_core::io::load_instance;
use bp_core::solvers::{
    resolve, solve_with, Resolved, SchemeRegistry, Setting, SolverConfig, SolverRun, Status,
};
use bp_core::{BpInstance, Error};
use serde::Serialize;

use crate::args::{InstanceArgs, SolveArgs, SolverArgs};
use crate::error::{CliError, Result};
use crate::output::{write_json, write_trace};

/// Largest floor tried after ill-conditioned solves.
const MAX_RETRY_DELTA: f64 = 1e-6;
const RETRY_FACTOR: f64 = 1e3;

#[derive(Debug, Serialize)]
pub struct InstanceSummary {
    pub source: String,
    pub n: usize,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub iters: u64,
    pub l1: f64,
    pub f: f64,
    pub gap: f64,
    pub elapsed_ms: f64,
    pub s: Vec<f64>,
    pub config: SolverConfig,
    pub resolved: Resolved,
    /// Restarts with a larger floor after ill-conditioned solves.
    pub retries: u32,
    pub instance: InstanceSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

pub fn load(args: &InstanceArgs) -> Result<(BpInstance, InstanceSummary)> {
    if let Some(path) = &args.input {
        let inst = load_instance(path, args.rhs.as_deref())?;
        let summary = InstanceSummary {
            source: path.display().to_string(),
            n: inst.n(),
            m: inst.m(),
            density: None,
            seed: None,
        };
        return Ok((inst, summary));
    }
    let (Some(m), Some(n)) = (args.m, args.n) else {
        return Err(CliError::Usage(
            "either --input or both --m and --n are required".into(),
        ));
    };
    let inst = random_instance(m, n, args.density, args.seed)?;
    let summary = InstanceSummary {
        source: "random".into(),
        n,
        m,
        density: Some(args.density),
        seed: Some(args.seed),
    };
    Ok((inst, summary))
}

pub fn config(args: &SolverArgs) -> SolverConfig {
    SolverConfig {
        scheme: args.solver.clone(),
        eps: args.eps,
        beta: args.beta,
        delta: args.delta,
        max_iters: args.max_iters,
        gap_tol: args.gap_tol,
        init: args.init.clone(),
        solve_tol: args.solve_tol,
        trace_every: args.trace_every,
        tau: args.tau,
    }
}

fn ill_conditioned(e: &Error) -> bool {
    matches!(e, Error::IllConditioned { .. })
}

/// Runs the solver, restarting with a larger floor while the Laplacian is
/// too ill-conditioned to factor.
pub fn solve_retrying(
    registry: &SchemeRegistry,
    inst: &BpInstance,
    mut cfg: SolverConfig,
) -> Result<(SolverRun, SolverConfig, u32)> {
    let scheme = registry.get(&cfg.scheme)?;
    let mut retries = 0;
    loop {
        let delta = resolve(scheme.as_ref(), inst, &cfg)?.delta;
        let outcome = solve_with(registry, inst, &cfg);
        let failure = match &outcome {
            Ok(run) => run.failure.clone(),
            Err(e) => Some(e.clone()),
        };
        let next = delta * RETRY_FACTOR;
        match failure {
            Some(e) if ill_conditioned(&e) && next <= MAX_RETRY_DELTA => {
                eprintln!("warning: {e} at delta {delta:e}; retrying with delta {next:e}");
                cfg.delta = Setting::Value(next);
                retries += 1;
            }
            _ => return Ok((outcome?, cfg, retries)),
        }
    }
}

pub fn run(args: &SolveArgs) -> Result<ExitCode> {
    let (inst, summary) = load(&args.instance)?;
    let registry = SchemeRegistry::builtin();
    let (run, cfg, retries) = solve_retrying(&registry, &inst, config(&args.solver))?;
    if let Some(path) = &args.trace {
        write_trace(path, &run.trace)?;
    }
    let message = match &run.status {
        Status::Error(m) => Some(m.clone()),
        _ => None,
    };
    let report = RunReport {
        status: run.status.to_string(),
        message,
        iters: run.iterations,
        l1: run.l1(),
        f: run.final_f,
        gap: run.gap(),
        elapsed_ms: run.elapsed_ms,
        s: run.final_s.iter().copied().collect(),
        config: cfg,
        resolved: run.resolved,
        retries,
        instance: summary,
        trace: args.trace.as_ref().map(|p| p.display().to_string()),
    };
    write_json(args.output.as_deref(), &report)?;
    Ok(match run.status {
        Status::GapReached => ExitCode::SUCCESS,
        Status::MaxIters => ExitCode::from(2),
        Status::Error(m) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    })
}
