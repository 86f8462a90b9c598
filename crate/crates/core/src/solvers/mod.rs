//! Iterative schemes for dissipation minimization and the driver that runs
//! them with duality-gap stopping.
//!
//! Schemes are looked up by name in a [`SchemeRegistry`]. Each iteration
//! performs one Laplacian solve at the current iterate `x^k`; it yields the
//! gradient and the feasible point `s^k = q(x^k)`, whose suboptimality is
//! bounded by a dual certificate.

mod ags;
mod pgs;
mod scheme;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use ags::{
    ags2_step, ags_step, alpha, tau_schedule, Accelerated, AgsState, Mixing, AGS2_PRACTICAL_BETA,
    AGS2_TAU, AGS_PRACTICAL_BETA,
};
pub use pgs::{pgs_step, pgs_update, PrimalGradient, EXP_GUARD, PGS_PRACTICAL_BETA};
pub use scheme::{Scheme, SchemeRegistry, SchemeState, StepParams};

use crate::dissipation::{
    c_const, certify, check_eps, delta_floor, evaluate, from_potentials, least_squares_solution,
    DualCertificate,
};
use crate::error::{Error, Result};
use crate::instance::BpInstance;
use crate::laplacian::{
    SolveOptions, SolvePath, WarmState, WeightVector, DEFAULT_COND_LIMIT, DEFAULT_SOLVE_TOL,
};

pub const PRACTICAL_DELTA: f64 = 1e-15;
pub const DEFAULT_MAX_ITERS: u64 = 10_000;
pub const DEFAULT_GAP_TOL: f64 = 1e-8;
pub const DEFAULT_EPS: f64 = 0.1;

/// A parameter that is either left to the scheme's practical default, set to
/// its theoretical value, or given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(
    into = "String",
    try_from = "String",
    bound(serialize = "T: fmt::Display + Clone", deserialize = "T: FromStr")
)]
pub enum Setting<T> {
    #[default]
    Default,
    Theoretical,
    Value(T),
}

impl<T: fmt::Display> fmt::Display for Setting<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Default => f.write_str("default"),
            Setting::Theoretical => f.write_str("theoretical"),
            Setting::Value(v) => write!(f, "{v}"),
        }
    }
}

impl<T: FromStr> FromStr for Setting<T> {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "default" => Ok(Setting::Default),
            "theoretical" => Ok(Setting::Theoretical),
            other => other
                .parse()
                .map(Setting::Value)
                .map_err(|_| format!("expected a number, 'default' or 'theoretical', got '{s}'")),
        }
    }
}

impl<T: fmt::Display> From<Setting<T>> for String {
    fn from(s: Setting<T>) -> String {
        s.to_string()
    }
}

impl<T: FromStr> TryFrom<String> for Setting<T> {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `max(|u|, delta)` for the least-squares solution `u`.
    #[default]
    LeastSquares,
    /// `max(1, delta) 1`.
    Ones,
    /// Clamped to `{x >= delta}`.
    Custom(Vec<f64>),
}

impl FromStr for Init {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ls" | "least_squares" | "least-squares" => Ok(Init::LeastSquares),
            "ones" => Ok(Init::Ones),
            _ => Err(format!("unknown init '{s}' (expected ls or ones)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Registry name: `pgs`, `ags` or `ags2`.
    pub scheme: String,
    /// Relative error target; drives the theoretical settings.
    pub eps: f64,
    pub beta: Setting<f64>,
    pub delta: Setting<f64>,
    pub max_iters: Setting<u64>,
    /// Stop once `gap <= gap_tol * ||s^k||_1`.
    pub gap_tol: f64,
    pub init: Init,
    pub solve_tol: f64,
    /// Trace (and gap check) every this many iterations.
    pub trace_every: u64,
    /// Constant mixing weight override for the accelerated schemes.
    pub tau: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: "pgs".into(),
            eps: DEFAULT_EPS,
            beta: Setting::Default,
            delta: Setting::Default,
            max_iters: Setting::Default,
            gap_tol: DEFAULT_GAP_TOL,
            init: Init::LeastSquares,
            solve_tol: DEFAULT_SOLVE_TOL,
            trace_every: 1,
            tau: None,
        }
    }
}

impl SolverConfig {
    pub fn new(scheme: &str) -> Self {
        Self {
            scheme: scheme.to_string(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if let Setting::Value(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("beta must be positive, got {b}"));
            }
        }
        if let Setting::Value(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("delta must be positive, got {d}"));
            }
        }
        if let Setting::Value(0) = self.max_iters {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.gap_tol >= 0.0) {
            return bad(format!("gap_tol must be nonnegative, got {}", self.gap_tol));
        }
        if !(self.solve_tol > 0.0) {
            return bad(format!(
                "solve_tol must be positive, got {}",
                self.solve_tol
            ));
        }
        if self.trace_every == 0 {
            return bad("trace_every must be at least 1".into());
        }
        Ok(())
    }
}

/// Theoretical step parameter for `scheme` (the value its convergence
/// theorem requires).
pub fn default_beta(scheme: &dyn Scheme, inst: &BpInstance, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(scheme.theoretical_beta(inst.m(), c_const(inst)?, eps))
}

pub fn theoretical_iters(scheme: &dyn Scheme, inst: &BpInstance, eps: f64) -> Result<u64> {
    check_eps(eps)?;
    Ok(scheme.theoretical_iters(inst.m(), eps))
}

pub fn init_point(inst: &BpInstance, init: &Init, delta: f64) -> Result<WeightVector> {
    match init {
        Init::LeastSquares => WeightVector::clamped(least_squares_solution(inst)?.abs(), delta),
        Init::Ones => WeightVector::clamped(DVector::from_element(inst.m(), 1.0), delta),
        Init::Custom(v) => {
            if v.len() != inst.m() {
                return Err(Error::DimensionMismatch {
                    what: "custom initial point",
                    expected: inst.m(),
                    found: v.len(),
                });
            }
            WeightVector::clamped(DVector::from_row_slice(v), delta)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: u64,
    pub f: f64,
    pub l1: f64,
    pub gap: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    GapReached,
    MaxIters,
    Error(String),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::GapReached => f.write_str("gap_reached"),
            Status::MaxIters => f.write_str("max_iters"),
            Status::Error(_) => f.write_str("error"),
        }
    }
}

/// Resolved numeric parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub beta: f64,
    pub delta: f64,
    pub max_iters: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverRun {
    /// Last evaluated iterate.
    pub final_x: WeightVector,
    /// `q(final_x)`, feasible for basis pursuit.
    pub final_s: DVector<f64>,
    pub final_f: f64,
    pub trace: Vec<IterationRecord>,
    pub status: Status,
    /// The error behind `Status::Error`.
    pub failure: Option<Error>,
    /// Certificate of the last gap evaluation.
    pub certificate: Option<DualCertificate>,
    /// Number of iterates evaluated.
    pub iterations: u64,
    pub resolved: Resolved,
    pub elapsed_ms: f64,
}

impl SolverRun {
    pub fn l1(&self) -> f64 {
        self.final_s.lp_norm(1)
    }

    pub fn gap(&self) -> f64 {
        self.certificate.as_ref().map_or(f64::NAN, |c| c.gap)
    }
}

/// Resolves `Default`/`Theoretical` settings against an instance.
pub fn resolve(scheme: &dyn Scheme, inst: &BpInstance, config: &SolverConfig) -> Result<Resolved> {
    config.validate()?;
    let beta = match config.beta {
        Setting::Default => scheme.practical_beta(),
        Setting::Theoretical => default_beta(scheme, inst, config.eps)?,
        Setting::Value(b) => b,
    };
    let delta = match config.delta {
        Setting::Default => PRACTICAL_DELTA,
        Setting::Theoretical => delta_floor(inst, config.eps)?,
        Setting::Value(d) => d,
    };
    // A budget of K steps examines the iterates x^0, ..., x^K.
    let max_iters = match config.max_iters {
        Setting::Default => DEFAULT_MAX_ITERS,
        Setting::Theoretical => scheme
            .theoretical_iters(inst.m(), config.eps)
            .saturating_add(1),
        Setting::Value(k) => k,
    };
    Ok(Resolved {
        beta,
        delta,
        max_iters,
    })
}

pub fn solve(inst: &BpInstance, config: &SolverConfig) -> Result<SolverRun> {
    solve_with(&SchemeRegistry::builtin(), inst, config)
}

pub fn solve_with(
    registry: &SchemeRegistry,
    inst: &BpInstance,
    config: &SolverConfig,
) -> Result<SolverRun> {
    let scheme = registry.get(&config.scheme)?;
    let resolved = resolve(scheme.as_ref(), inst, config)?;
    let x0 = init_point(inst, &config.init, resolved.delta)?;
    let params = StepParams {
        beta: resolved.beta,
        delta: resolved.delta,
        tau: config.tau,
    };
    let state = scheme.start(x0, &params)?;
    let opts = SolveOptions {
        tol: config.solve_tol,
        cond_limit: DEFAULT_COND_LIMIT,
        path: SolvePath::Auto,
        max_inner: None,
    };
    Driver {
        inst,
        state,
        opts,
        gap_tol: config.gap_tol,
        trace_every: config.trace_every,
        resolved,
    }
    .run()
}

struct Driver<'a> {
    inst: &'a BpInstance,
    state: Box<dyn SchemeState>,
    opts: SolveOptions,
    gap_tol: f64,
    trace_every: u64,
    resolved: Resolved,
}

struct Snapshot {
    x: WeightVector,
    s: DVector<f64>,
    f: f64,
}

impl Driver<'_> {
    fn run(mut self) -> Result<SolverRun> {
        let start = Instant::now();
        let mut warm = WarmState::default();
        let mut trace = Vec::new();
        let mut last: Option<Snapshot> = None;
        let mut certificate = None;
        let mut evaluated = 0u64;
        let mut failure = None;

        let status = loop {
            let k = evaluated;
            let x = self.state.current().clone();
            let eval = match evaluate(self.inst, &x, Some(&warm), &self.opts, true) {
                Ok(e) => e,
                Err(e) if last.is_none() => return Err(e),
                Err(e) => {
                    let status = Status::Error(e.to_string());
                    failure = Some(e);
                    break status;
                }
            };
            evaluated += 1;
            let s = eval.solve.induced.clone();
            let is_last = evaluated >= self.resolved.max_iters;
            let mut stop = None;

            if k.is_multiple_of(self.trace_every) || is_last {
                let l1 = s.lp_norm(1);
                let cert = certify(self.inst, &s, &self.opts).unwrap_or_else(|_| {
                    from_potentials(self.inst, &eval.solve.potentials, &eval.solve.voltages, l1)
                });
                trace.push(IterationRecord {
                    k,
                    f: eval.f,
                    l1,
                    gap: cert.gap,
                    elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
                });
                if cert.gap <= self.gap_tol * l1 {
                    stop = Some(Status::GapReached);
                }
                certificate = Some(cert);
            }
            if stop.is_none() && is_last {
                stop = Some(Status::MaxIters);
            }
            warm = eval.solve.warm_state.clone();
            let grad = eval.gradient.expect("gradient requested");
            last = Some(Snapshot { x, s, f: eval.f });
            if let Some(status) = stop {
                break status;
            }
            if let Err(e) = self.state.advance(&grad) {
                let status = Status::Error(e.to_string());
                failure = Some(e);
                break status;
            }
        };

        let snap = last.expect("at least one iterate evaluated");
        Ok(SolverRun {
            final_x: snap.x,
            final_s: snap.s,
            final_f: snap.f,
            trace,
            status,
            failure,
            certificate,
            iterations: evaluated,
            resolved: self.resolved,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}
