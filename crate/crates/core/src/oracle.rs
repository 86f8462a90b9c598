//! Independent ground truth for tests: exhaustive basic-solution search for
//! basis pursuit, and finite-difference derivatives of the potential.

use nalgebra::{DMatrix, DVector};

use crate::dissipation::{evaluate, gradient};
use crate::error::{Error, Result};
use crate::instance::BpInstance;
use crate::laplacian::{SolveOptions, WeightVector, SMALL_LIMIT};

/// Largest `m` accepted by [`brute_force_bp`].
pub const ORACLE_LIMIT: usize = 16;
/// Residual tolerance for accepting a basic solution.
pub const CONSISTENCY_TOL: f64 = 1e-9;
pub const DEFAULT_FD_STEP: f64 = 1e-6;

const INDEPENDENCE_TOL: f64 = 1e-10;
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub optimum_value: f64,
    pub optimum_s: DVector<f64>,
    /// Zero-based indices of the nonzero entries of `optimum_s`.
    pub support: Vec<usize>,
    /// Number of distinct supports attaining the optimum.
    pub ties: usize,
}

/// Minimum `||s||_1` over all basic solutions of `A s = b`.
///
/// Enumerates every column subset of size at most `n` with linearly
/// independent columns, keeps those whose system is consistent, and returns
/// the cheapest. Ties go to the lexicographically smallest support.
pub fn brute_force_bp(inst: &BpInstance) -> Result<OracleResult> {
    let (n, m) = (inst.n(), inst.m());
    if m > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            m,
            limit: ORACLE_LIMIT,
        });
    }
    let b = inst.b();
    if b.iter().all(|&v| v == 0.0) {
        return Ok(OracleResult {
            optimum_value: 0.0,
            optimum_s: DVector::zeros(m),
            support: Vec::new(),
            ties: 1,
        });
    }
    let resid_tol = CONSISTENCY_TOL * b.norm().max(1.0);

    // (value, support, full solution)
    let mut candidates: Vec<(f64, Vec<usize>, DVector<f64>)> = Vec::new();
    for mask in 1u32..(1u32 << m) {
        let k = mask.count_ones() as usize;
        if k > n {
            continue;
        }
        let cols: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        let sub = DMatrix::from_fn(n, k, |i, c| inst.a()[(i, cols[c])]);
        let svd = sub.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if !(svd.singular_values.min() > INDEPENDENCE_TOL * smax) {
            continue;
        }
        let Ok(sb) = svd.solve(b, 0.0) else { continue };
        if (&sub * &sb - b).norm() > resid_tol {
            continue;
        }
        let mut s = DVector::zeros(m);
        for (c, &j) in cols.iter().enumerate() {
            s[j] = sb[c];
        }
        let scale = sb.amax();
        let support: Vec<usize> = cols
            .iter()
            .zip(sb.iter())
            .filter(|(_, v)| v.abs() > 1e-12 * scale)
            .map(|(&j, _)| j)
            .collect();
        candidates.push((s.lp_norm(1), support, s));
    }

    let best = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::Infeasible);
    }
    let mut optimal: Vec<_> = candidates
        .into_iter()
        .filter(|c| c.0 <= best + TIE_TOL * best.max(1.0))
        .collect();
    optimal.sort_by(|x, y| x.1.cmp(&y.1));
    optimal.dedup_by(|x, y| x.1 == y.1);
    let ties = optimal.len();
    let (value, support, s) = optimal.swap_remove(0);
    Ok(OracleResult {
        optimum_value: value,
        optimum_s: s,
        support,
        ties,
    })
}

fn fd_steps(x: &WeightVector, h: f64) -> Result<DVector<f64>> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::StepTooLarge { index: 0, step: h });
    }
    let steps = x.values().map(|xj| h * xj);
    for (index, (&xj, &hj)) in x.values().iter().zip(steps.iter()).enumerate() {
        if !(xj - hj > 0.0) {
            return Err(Error::StepTooLarge { index, step: hj });
        }
    }
    Ok(steps)
}

fn shifted(x: &WeightVector, j: usize, by: f64) -> Result<WeightVector> {
    let mut v = x.values().clone();
    v[j] += by;
    WeightVector::new(v)
}

/// Central differences of `f` with per-coordinate step `h * x_j`.
pub fn fd_gradient(inst: &BpInstance, x: &WeightVector, h: f64) -> Result<DVector<f64>> {
    let steps = fd_steps(x, h)?;
    let opts = SolveOptions {
        cond_limit: f64::INFINITY,
        ..SolveOptions::default()
    };
    let f = |w: &WeightVector| -> Result<f64> { Ok(evaluate(inst, w, None, &opts, false)?.f) };
    let mut g = DVector::zeros(x.len());
    for j in 0..x.len() {
        let hj = steps[j];
        let up = f(&shifted(x, j, hj)?)?;
        let down = f(&shifted(x, j, -hj)?)?;
        g[j] = (up - down) / (2.0 * hj);
    }
    Ok(g)
}

/// Central differences of the analytic gradient, symmetrized.
pub fn fd_hessian(inst: &BpInstance, x: &WeightVector, h: f64) -> Result<DMatrix<f64>> {
    let m = x.len();
    if m > SMALL_LIMIT {
        return Err(Error::SizeLimitExceeded {
            size: m,
            limit: SMALL_LIMIT,
        });
    }
    let steps = fd_steps(x, h)?;
    let mut hess = DMatrix::zeros(m, m);
    for j in 0..m {
        let hj = steps[j];
        let up = gradient(inst, &shifted(x, j, hj)?)?;
        let down = gradient(inst, &shifted(x, j, -hj)?)?;
        hess.set_column(j, &((up - down) / (2.0 * hj)));
    }
    Ok((&hess + hess.transpose()) * 0.5)
}
