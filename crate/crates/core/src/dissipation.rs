//! The dissipation potential `f(x) = 1^T x + b^T L(x)^{-1} b` on the positive
//! orthant, its derivatives, problem constants and duality-gap certificates.
//!
//! Half the minimum of `f` over `x > 0` equals the basis-pursuit optimum, and
//! the induced solution `q(x)` is feasible with `||q(x)||_1 <= f(x) / 2`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::BpInstance;
use crate::laplacian::{
    factor, solve_system, transfer_matrix, LaplacianSolve, SolveOptions, WarmState, WeightVector,
    SMALL_LIMIT,
};

/// Floor applied to `|q_j|` before building the certificate's weights.
pub const TINY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialEval {
    pub f: f64,
    /// `1^T x`.
    pub linear_term: f64,
    /// `b^T L(x)^{-1} b`.
    pub laplacian_term: f64,
    /// `1 - d_j^2`, when requested.
    pub gradient: Option<DVector<f64>>,
    pub solve: LaplacianSolve,
}

impl PotentialEval {
    pub fn induced(&self) -> &DVector<f64> {
        &self.solve.induced
    }
}

/// Evaluates `f` (and optionally `grad f`) with one Laplacian solve.
pub fn evaluate(
    inst: &BpInstance,
    x: &WeightVector,
    warm: Option<&WarmState>,
    opts: &SolveOptions,
    with_gradient: bool,
) -> Result<PotentialEval> {
    let solve = solve_system(inst, x, inst.b(), warm, opts)?;
    let linear_term = x.values().sum();
    let laplacian_term = inst.b().dot(&solve.potentials);
    let gradient = with_gradient.then(|| solve.voltages.map(|d| 1.0 - d * d));
    Ok(PotentialEval {
        f: linear_term + laplacian_term,
        linear_term,
        laplacian_term,
        gradient,
        solve,
    })
}

pub fn potential(inst: &BpInstance, x: &WeightVector) -> Result<PotentialEval> {
    evaluate(inst, x, None, &SolveOptions::default(), false)
}

/// `grad f(x)_j = 1 - (a_j^T L(x)^{-1} b)^2`.
pub fn gradient(inst: &BpInstance, x: &WeightVector) -> Result<DVector<f64>> {
    let eval = evaluate(inst, x, None, &SolveOptions::default(), true)?;
    Ok(eval.gradient.expect("gradient requested"))
}

/// `hess f(x) = 2 (d d^T) o T(x)` (Hadamard product). Only for `m <= SMALL_LIMIT`.
pub fn hessian(inst: &BpInstance, x: &WeightVector) -> Result<DMatrix<f64>> {
    if inst.m() > SMALL_LIMIT {
        return Err(Error::SizeLimitExceeded {
            size: inst.m(),
            limit: SMALL_LIMIT,
        });
    }
    let t = transfer_matrix(inst, x)?;
    let d = solve_system(inst, x, inst.b(), None, &SolveOptions::default())?.voltages;
    let m = inst.m();
    Ok(DMatrix::from_fn(m, m, |i, j| 2.0 * d[i] * d[j] * t[(i, j)]))
}

/// Least-squares (minimum Euclidean norm) solution `u = A^T (A A^T)^{-1} b`.
pub fn least_squares_solution(inst: &BpInstance) -> Result<DVector<f64>> {
    let opts = SolveOptions {
        cond_limit: f64::INFINITY,
        ..SolveOptions::default()
    };
    Ok(solve_system(inst, &WeightVector::ones(inst.m()), inst.b(), None, &opts)?.induced)
}

/// `c_{A,b} = b^T (A A^T)^{-1} b = ||u||_2^2` for the least-squares solution `u`.
pub fn c_const(inst: &BpInstance) -> Result<f64> {
    let opts = SolveOptions {
        cond_limit: f64::INFINITY,
        ..SolveOptions::default()
    };
    let solve = solve_system(inst, &WeightVector::ones(inst.m()), inst.b(), None, &opts)?;
    Ok(inst.b().dot(&solve.potentials))
}

/// `delta = eps * sqrt(c_{A,b}) / (2 m)`: restricting to `x >= delta` costs
/// at most a relative `eps / 4` in `f`.
pub fn delta_floor(inst: &BpInstance, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(eps * c_const(inst)?.sqrt() / (2.0 * inst.m() as f64))
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidEps(eps))
    }
}

/// Dual-feasible point for the linear-programming form of basis pursuit and
/// the resulting bound on the suboptimality of a feasible `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub nu: DVector<f64>,
    pub lambda: DVector<f64>,
    pub mu: DVector<f64>,
    /// `||d(y)||_inf` at the certificate weights `y = |s|`.
    pub rho: f64,
    /// Upper bound on `||s||_1 - OPT`.
    pub gap: f64,
    /// `||s||_1` of the certified point.
    pub primal_l1: f64,
    /// `b^T nu`, a lower bound on `OPT`.
    pub dual_value: f64,
}

/// Certificate for the induced solution `q(x)` of the iterate `x`.
pub fn duality_gap(inst: &BpInstance, x: &WeightVector) -> Result<DualCertificate> {
    let opts = SolveOptions::default();
    let solve = solve_system(inst, x, inst.b(), None, &opts)?;
    certify(inst, &solve.induced, &opts)
}

/// Certificate for a feasible point `s`, built at `y = max(|s|, TINY_FLOOR)`:
/// `nu = rho^{-1} L(y)^{-1} b`, `lambda = (1 - A^T nu) / 2`, `mu = (1 + A^T nu) / 2`
/// and `gap = (1 + 1/rho) ||s||_1 - f(y) / rho = ||s||_1 - b^T nu`.
/// If `L(y)` does not factor, the floor is raised relative to `||s||_inf`.
pub fn certify(
    inst: &BpInstance,
    s: &DVector<f64>,
    opts: &SolveOptions,
) -> Result<DualCertificate> {
    let m = inst.m();
    let primal_l1 = s.lp_norm(1);
    if inst.b().iter().all(|&v| v == 0.0) {
        return Ok(DualCertificate {
            nu: DVector::zeros(inst.n()),
            lambda: DVector::from_element(m, 0.5),
            mu: DVector::from_element(m, 0.5),
            rho: 0.0,
            gap: primal_l1,
            primal_l1,
            dual_value: 0.0,
        });
    }
    // Weak duality holds for any nu scaled by ||A^T p||_inf, so the
    // certificate solve does not need the outer loop's accuracy, and the
    // floor on y may be raised until L(y) factors.
    let cert_opts = SolveOptions {
        cond_limit: f64::INFINITY,
        tol: opts.tol.max(1e-10),
        ..*opts
    };
    let scale = s.amax().max(f64::MIN_POSITIVE);
    let mut last_err = Error::Infeasible;
    for floor in CERT_FLOORS {
        let y = WeightVector::clamped(s.abs(), (floor * scale).max(TINY_FLOOR))?;
        match solve_certificate(inst, &y, &cert_opts) {
            Ok(solve) => {
                return Ok(from_potentials(
                    inst,
                    &solve.potentials,
                    &solve.voltages,
                    primal_l1,
                ))
            }
            Err(e @ Error::IllConditioned { .. }) => last_err = e,
            Err(e) => return Err(e),
        }
    }
    Err(last_err)
}

/// Relative floors tried in turn for the certificate weights.
const CERT_FLOORS: [f64; 6] = [0.0, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6];

fn solve_certificate(
    inst: &BpInstance,
    y: &WeightVector,
    opts: &SolveOptions,
) -> Result<LaplacianSolve> {
    match solve_system(inst, y, inst.b(), None, opts) {
        Err(Error::NoConvergence { .. }) => {
            let (_, chol) = factor(inst, y, f64::INFINITY)?;
            let p = chol.solve(inst.b());
            let voltages = inst.at() * &p;
            let induced = voltages.component_mul(y.values());
            Ok(LaplacianSolve {
                potentials: p,
                voltages,
                induced,
                residual_norm: f64::NAN,
                warm_state: WarmState::default(),
            })
        }
        other => other,
    }
}

/// Certificate assembled from potentials `p` with `d = A^T p`. Sound
/// whenever `s` is feasible, whatever `p` is.
pub(crate) fn from_potentials(
    inst: &BpInstance,
    p: &DVector<f64>,
    d: &DVector<f64>,
    primal_l1: f64,
) -> DualCertificate {
    let rho = d.amax();
    let m = inst.m();
    if !(rho > 0.0) {
        return DualCertificate {
            nu: DVector::zeros(inst.n()),
            lambda: DVector::from_element(m, 0.5),
            mu: DVector::from_element(m, 0.5),
            rho: 0.0,
            gap: primal_l1,
            primal_l1,
            dual_value: 0.0,
        };
    }
    let nu = p / rho;
    let atnu = d / rho;
    let lambda = atnu.map(|v| 0.5 * (1.0 - v));
    let mu = atnu.map(|v| 0.5 * (1.0 + v));
    // Equals (1 + 1/rho) ||s||_1 - f(y) / rho when 1^T y = ||s||_1; the
    // difference form stays a valid bound for potentials from any weights.
    let dual_value = inst.b().dot(p) / rho;
    DualCertificate {
        gap: primal_l1 - dual_value,
        dual_value,
        nu,
        lambda,
        mu,
        rho,
        primal_l1,
    }
}

/// Bregman divergence of the negative entropy:
/// `sum_j x_j ln(x_j / y_j) - x_j + y_j`.
pub fn bregman_entropy(x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "Bregman arguments",
            expected: x.len(),
            found: y.len(),
        });
    }
    for v in [x, y] {
        if let Some((index, &value)) = v.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveInput { index, value });
        }
    }
    Ok(x.iter()
        .zip(y.iter())
        .map(|(&xj, &yj)| xj * (xj / yj).ln() - xj + yj)
        .sum())
}

/// Evaluates `(1/2) sum_j (s_j^2 / x_j + x_j)` at `x = |s|`, which is `||s||_1`.
pub fn l1_variational_check(s: &DVector<f64>) -> Result<f64> {
    if let Some(index) = s.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroEntry { index });
    }
    Ok(0.5
        * s.iter()
            .map(|&sj| {
                let xj = sj.abs();
                sj * sj / xj + xj
            })
            .sum::<f64>())
}
