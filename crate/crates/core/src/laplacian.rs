//! Linear algebra around the weighted Laplacian-like matrix `L(x) = A X A^T`.
//!
//! Everything the schemes need from `A` goes through [`solve_system`]: one
//! SPD solve `L(x) p = b` yields the potentials `p`, voltages `d = A^T p` and
//! the induced feasible point `q = X d`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::BpInstance;

/// Largest `m` for which `m x m` transfer/Hessian matrices are built.
pub const SMALL_LIMIT: usize = 512;
/// Largest `n` for which [`SolvePath::Auto`] factors `L(x)` densely.
pub const DENSE_LIMIT: usize = 2000;
pub const DEFAULT_SOLVE_TOL: f64 = 1e-12;
pub const DEFAULT_COND_LIMIT: f64 = 1e14;

const MAX_REFINEMENTS: usize = 3;

/// Strictly positive conductances, one per column of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: DVector<f64>,
    floor: f64,
}

impl WeightVector {
    /// Requires every entry to be finite and strictly positive.
    pub fn new(values: DVector<f64>) -> Result<Self> {
        Self::check(&values, 0.0)?;
        Ok(Self { values, floor: 0.0 })
    }

    /// Requires every entry to be finite and at least `floor > 0`.
    pub fn with_floor(values: DVector<f64>, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "floor must be positive, got {floor}"
            )));
        }
        Self::check(&values, floor)?;
        Ok(Self { values, floor })
    }

    /// Entrywise `max(v_j, floor)`. Non-finite entries are rejected.
    pub fn clamped(values: DVector<f64>, floor: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight vector"));
        }
        Self::with_floor(values.map(|v| v.max(floor)), floor)
    }

    pub fn ones(m: usize) -> Self {
        Self {
            values: DVector::from_element(m, 1.0),
            floor: 0.0,
        }
    }

    fn check(values: &DVector<f64>, floor: f64) -> Result<()> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite("weight vector"));
            }
            if value <= 0.0 || value < floor {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        Ok(())
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolvePath {
    /// Dense Cholesky when `n <= DENSE_LIMIT`, conjugate gradients otherwise.
    #[default]
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Target relative residual `||L p - rhs|| / ||rhs||`.
    pub tol: f64,
    pub cond_limit: f64,
    pub path: SolvePath,
    /// Inner iteration cap for the iterative path; `None` means `max(1000, 10 n)`.
    pub max_inner: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_SOLVE_TOL,
            cond_limit: DEFAULT_COND_LIMIT,
            path: SolvePath::Auto,
            max_inner: None,
        }
    }
}

/// Previous potentials, used as the initial iterate on the iterative path.
/// Owned by a single solve sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WarmState {
    potentials: Option<DVector<f64>>,
}

impl WarmState {
    pub fn is_empty(&self) -> bool {
        self.potentials.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSolve {
    /// `p` with `L(x) p = rhs`.
    pub potentials: DVector<f64>,
    /// `d = A^T p`.
    pub voltages: DVector<f64>,
    /// `q = X d`; feasible (`A q = b`) when `rhs = b`.
    pub induced: DVector<f64>,
    /// Relative residual `||L p - rhs|| / ||rhs||` (absolute when `rhs = 0`).
    pub residual_norm: f64,
    pub warm_state: WarmState,
}

/// `L(x) = sum_j x_j a_j a_j^T`.
pub fn laplacian_matrix(inst: &BpInstance, x: &WeightVector) -> DMatrix<f64> {
    check_len(inst, x).expect("weight vector length must match the instance");
    laplacian_unchecked(inst, x.values())
}

fn laplacian_unchecked(inst: &BpInstance, x: &DVector<f64>) -> DMatrix<f64> {
    let mut ax = inst.a().clone();
    for (j, mut col) in ax.column_iter_mut().enumerate() {
        col *= x[j];
    }
    let mut l = ax * inst.at();
    // Force exact symmetry; only the lower triangle is read by Cholesky.
    for i in 0..l.nrows() {
        for k in 0..i {
            let v = 0.5 * (l[(i, k)] + l[(k, i)]);
            l[(i, k)] = v;
            l[(k, i)] = v;
        }
    }
    l
}

fn check_len(inst: &BpInstance, x: &WeightVector) -> Result<()> {
    if x.len() != inst.m() {
        return Err(Error::DimensionMismatch {
            what: "weight vector length",
            expected: inst.m(),
            found: x.len(),
        });
    }
    Ok(())
}

/// Factors `L(x)` and estimates its condition number from the Cholesky
/// diagonal, `(max l_ii / min l_ii)^2`, which never exceeds the true value.
pub(crate) fn factor(
    inst: &BpInstance,
    x: &WeightVector,
    cond_limit: f64,
) -> Result<(DMatrix<f64>, Cholesky<f64, nalgebra::Dyn>)> {
    let l = laplacian_unchecked(inst, x.values());
    let chol = Cholesky::new(l.clone()).ok_or(Error::IllConditioned {
        estimate: f64::INFINITY,
    })?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = (diag.min(), diag.max());
    let estimate = if lo > 0.0 {
        (hi / lo).powi(2)
    } else {
        f64::INFINITY
    };
    if !(estimate <= cond_limit) {
        return Err(Error::IllConditioned { estimate });
    }
    Ok((l, chol))
}

/// Solves `L(x) p = rhs` and derives voltages and the induced solution.
///
/// `warm` only affects the iterative path, where its potentials seed the
/// conjugate-gradient iteration.
pub fn solve_system(
    inst: &BpInstance,
    x: &WeightVector,
    rhs: &DVector<f64>,
    warm: Option<&WarmState>,
    opts: &SolveOptions,
) -> Result<LaplacianSolve> {
    check_len(inst, x)?;
    if rhs.len() != inst.n() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side length",
            expected: inst.n(),
            found: rhs.len(),
        });
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let dense = match opts.path {
        SolvePath::Dense => true,
        SolvePath::Iterative => false,
        SolvePath::Auto => inst.n() <= DENSE_LIMIT,
    };
    let (potentials, residual_norm) = if dense {
        dense_solve(inst, x, rhs, opts)?
    } else {
        let start = warm.and_then(|w| w.potentials.as_ref());
        pcg_solve(inst, x, rhs, start, opts)?
    };
    let voltages = inst.at() * &potentials;
    let induced = voltages.component_mul(x.values());
    Ok(LaplacianSolve {
        warm_state: WarmState {
            potentials: Some(potentials.clone()),
        },
        potentials,
        voltages,
        induced,
        residual_norm,
    })
}

fn relative(res: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        res / scale
    } else {
        res
    }
}

fn dense_solve(
    inst: &BpInstance,
    x: &WeightVector,
    rhs: &DVector<f64>,
    opts: &SolveOptions,
) -> Result<(DVector<f64>, f64)> {
    let (l, chol) = factor(inst, x, opts.cond_limit)?;
    let scale = rhs.norm();
    let mut p = chol.solve(rhs);
    let mut res = relative((rhs - &l * &p).norm(), scale);
    let mut refinements = 0;
    while res > opts.tol && refinements < MAX_REFINEMENTS {
        let r = rhs - &l * &p;
        let candidate = &p + chol.solve(&r);
        let cres = relative((rhs - &l * &candidate).norm(), scale);
        refinements += 1;
        if cres >= res {
            break;
        }
        p = candidate;
        res = cres;
    }
    // A backward-stable factorization cannot beat roughly cond * eps, so an
    // unmet tolerance is reported through the residual rather than an error.
    if !res.is_finite() {
        return Err(Error::NonFinite("potentials"));
    }
    Ok((p, res))
}

/// Jacobi-preconditioned conjugate gradients on `v -> A (x o (A^T v))`,
/// never forming `L(x)`.
fn pcg_solve(
    inst: &BpInstance,
    x: &WeightVector,
    rhs: &DVector<f64>,
    start: Option<&DVector<f64>>,
    opts: &SolveOptions,
) -> Result<(DVector<f64>, f64)> {
    let n = inst.n();
    let a = inst.a();
    let xv = x.values();
    let apply = |v: &DVector<f64>| -> DVector<f64> {
        let w = (inst.at() * v).component_mul(xv);
        a * w
    };
    let inv_diag = DVector::from_fn(n, |i, _| {
        let d: f64 = a
            .row(i)
            .iter()
            .zip(xv.iter())
            .map(|(aij, xj)| aij * aij * xj)
            .sum();
        1.0 / d
    });

    let scale = rhs.norm();
    let max_inner = opts.max_inner.unwrap_or_else(|| (10 * n).max(1000));
    let mut p = match start {
        Some(s) if s.len() == n => s.clone(),
        _ => DVector::zeros(n),
    };
    let mut r = rhs - apply(&p);
    if relative(r.norm(), scale) <= opts.tol {
        return Ok((p, relative(r.norm(), scale)));
    }
    let mut z = r.component_mul(&inv_diag);
    let mut dir = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=max_inner {
        let ad = apply(&dir);
        let curvature = dir.dot(&ad);
        if !(curvature > 0.0) {
            return Err(Error::IllConditioned {
                estimate: f64::INFINITY,
            });
        }
        let step = rz / curvature;
        p.axpy(step, &dir, 1.0);
        r.axpy(-step, &ad, 1.0);
        // Recompute the true residual periodically to avoid drift.
        if it % 50 == 0 {
            r = rhs - apply(&p);
        }
        if relative(r.norm(), scale) <= opts.tol {
            let true_res = relative((rhs - apply(&p)).norm(), scale);
            if true_res <= opts.tol {
                return Ok((p, true_res));
            }
            r = rhs - apply(&p);
        }
        z = r.component_mul(&inv_diag);
        let rz_next = r.dot(&z);
        dir = &z + (rz_next / rz) * dir;
        rz = rz_next;
    }
    Err(Error::NoConvergence {
        residual: relative((rhs - apply(&p)).norm(), scale),
        iterations: max_inner,
    })
}

/// `T(x) = A^T L(x)^{-1} A`, symmetric PSD. Only for `m <= SMALL_LIMIT`.
pub fn transfer_matrix(inst: &BpInstance, x: &WeightVector) -> Result<DMatrix<f64>> {
    check_len(inst, x)?;
    if inst.m() > SMALL_LIMIT {
        return Err(Error::SizeLimitExceeded {
            size: inst.m(),
            limit: SMALL_LIMIT,
        });
    }
    let (_, chol) = factor(inst, x, f64::INFINITY)?;
    let t = inst.at() * chol.solve(inst.a());
    Ok((&t + t.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{incidence_reduced, random_instance};
    use approx::assert_abs_diff_eq;

    fn inst(rows: &[&[f64]], b: &[f64]) -> BpInstance {
        let a = DMatrix::from_row_slice(rows.len(), rows[0].len(), &rows.concat());
        BpInstance::new(a, DVector::from_row_slice(b)).unwrap()
    }

    fn w(v: &[f64]) -> WeightVector {
        WeightVector::new(DVector::from_row_slice(v)).unwrap()
    }

    #[test]
    fn weight_vector_rejects_nonpositive() {
        assert_eq!(
            WeightVector::new(DVector::from_row_slice(&[1.0, 0.0])).unwrap_err(),
            Error::NonPositiveWeight {
                index: 1,
                value: 0.0
            }
        );
        assert!(WeightVector::with_floor(DVector::from_row_slice(&[0.5]), 1.0).is_err());
        let c = WeightVector::clamped(DVector::from_row_slice(&[-1.0, 2.0]), 0.1).unwrap();
        assert_eq!(c.values().as_slice(), &[0.1, 2.0]);
    }

    #[test]
    fn laplacian_examples() {
        assert_eq!(
            laplacian_matrix(&inst(&[&[1.0]], &[1.0]), &w(&[2.0]))[(0, 0)],
            2.0
        );
        assert_eq!(
            laplacian_matrix(&inst(&[&[1.0, 1.0]], &[1.0]), &w(&[1.0, 1.0]))[(0, 0)],
            2.0
        );
        let a = incidence_reduced(3, &[(0, 1), (1, 2), (0, 2)], 2).unwrap();
        let tri = BpInstance::new(a, DVector::from_row_slice(&[1.0, 0.0])).unwrap();
        let l = laplacian_matrix(&tri, &w(&[1.0, 1.0, 1.0]));
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
    }

    #[test]
    fn solve_examples() {
        let s = solve_system(
            &inst(&[&[1.0]], &[1.0]),
            &w(&[2.0]),
            &DVector::from_row_slice(&[1.0]),
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(s.potentials[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.voltages[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.induced[0], 1.0, epsilon = 1e-15);

        let i2 = inst(&[&[1.0, 1.0]], &[1.0]);
        let s = solve_system(&i2, &w(&[1.0, 1.0]), i2.b(), None, &SolveOptions::default()).unwrap();
        assert_abs_diff_eq!(s.potentials[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.voltages, DVector::from_element(2, 0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(s.induced, DVector::from_element(2, 0.5), epsilon = 1e-15);
        assert!(i2.residual_norm(&s.induced) < 1e-15);
    }

    #[test]
    fn iterative_matches_dense_and_warm_start_agrees() {
        for seed in 0..5 {
            let inst = random_instance(40, 25, 0.3, seed).unwrap();
            let x =
                WeightVector::new(DVector::from_fn(40, |j, _| 0.5 + (j % 7) as f64 * 0.2)).unwrap();
            let opts = SolveOptions::default();
            let dense = solve_system(&inst, &x, inst.b(), None, &opts).unwrap();
            let it_opts = SolveOptions {
                path: SolvePath::Iterative,
                ..opts
            };
            let cold = solve_system(&inst, &x, inst.b(), None, &it_opts).unwrap();
            assert!(cold.residual_norm <= opts.tol);

            let x2 = WeightVector::new(x.values() * 1.001).unwrap();
            let cold2 = solve_system(&inst, &x2, inst.b(), None, &it_opts).unwrap();
            let warm2 =
                solve_system(&inst, &x2, inst.b(), Some(&cold.warm_state), &it_opts).unwrap();
            // Difference measured in the L(x')-norm of the residual it induces.
            let l2 = laplacian_matrix(&inst, &x2);
            let diff = (&l2 * (&warm2.potentials - &cold2.potentials)).norm() / inst.b().norm();
            assert!(diff <= 10.0 * opts.tol, "diff {diff}");
            let rel = (&cold.potentials - &dense.potentials).norm() / dense.potentials.norm();
            assert!(rel < 1e-9, "rel {rel}");
        }
    }

    #[test]
    fn warm_start_saves_iterations() {
        let inst = random_instance(60, 30, 0.3, 3).unwrap();
        let x = WeightVector::new(DVector::from_fn(60, |j, _| 1.0 + (j % 5) as f64)).unwrap();
        let opts = SolveOptions {
            path: SolvePath::Iterative,
            ..SolveOptions::default()
        };
        let first = solve_system(&inst, &x, inst.b(), None, &opts).unwrap();
        let x2 = WeightVector::new(x.values() * 1.001).unwrap();
        // x2 = 1.001 x, so the exact potentials are p / 1.001; a cap of a few
        // iterations must suffice from the warm start.
        let capped = SolveOptions {
            max_inner: Some(3),
            ..opts
        };
        let mut warm = first.warm_state.clone();
        warm.potentials = warm.potentials.map(|p| p / 1.001);
        assert!(solve_system(&inst, &x2, inst.b(), Some(&warm), &capped).is_ok());
        assert!(matches!(
            solve_system(&inst, &x2, inst.b(), None, &capped),
            Err(Error::NoConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn ill_conditioned_is_reported() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let inst = BpInstance::new(a, DVector::from_row_slice(&[1.0, 1.0])).unwrap();
        let x = w(&[1.0, 1e-17, 1e-17]);
        let err = solve_system(&inst, &x, inst.b(), None, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }), "{err:?}");
    }

    #[test]
    fn dimension_errors() {
        let i2 = inst(&[&[1.0, 1.0]], &[1.0]);
        assert!(matches!(
            solve_system(&i2, &w(&[1.0]), i2.b(), None, &SolveOptions::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            solve_system(
                &i2,
                &w(&[1.0, 1.0]),
                &DVector::from_row_slice(&[1.0, 2.0]),
                None,
                &SolveOptions::default()
            ),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn transfer_examples() {
        let t = transfer_matrix(&inst(&[&[1.0]], &[1.0]), &w(&[1.0])).unwrap();
        assert_abs_diff_eq!(t[(0, 0)], 1.0, epsilon = 1e-15);
        let t = transfer_matrix(&inst(&[&[1.0, 1.0]], &[1.0]), &w(&[1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(t, DMatrix::from_element(2, 2, 0.5), epsilon = 1e-15);
    }

    #[test]
    fn transfer_size_limit() {
        let inst = random_instance(SMALL_LIMIT + 1, 2, 0.01, 0).unwrap();
        assert_eq!(
            transfer_matrix(&inst, &WeightVector::ones(SMALL_LIMIT + 1)).unwrap_err(),
            Error::SizeLimitExceeded {
                size: SMALL_LIMIT + 1,
                limit: SMALL_LIMIT
            }
        );
    }
}
