//! Basis-pursuit instances: validation, preprocessing and generators.
//!
//! An instance is a pair `(A, b)` with `A` an `n x m` matrix of full row rank
//! and `n <= m`. The problem solved downstream is `min ||s||_1 s.t. A s = b`.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Singular values below `DEFAULT_RANK_TOL * sigma_max` count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// A validated basis-pursuit instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct BpInstance {
    a: DMatrix<f64>,
    at: DMatrix<f64>,
    b: DVector<f64>,
    ground_truth: Option<DVector<f64>>,
}

impl BpInstance {
    /// Validates with the default rank tolerance.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        validate(a, b, DEFAULT_RANK_TOL)
    }

    pub fn with_ground_truth(mut self, s: DVector<f64>) -> Result<Self> {
        if s.len() != self.m() {
            return Err(Error::DimensionMismatch {
                what: "ground truth",
                expected: self.m(),
                found: s.len(),
            });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ground truth"));
        }
        self.ground_truth = Some(s);
        Ok(self)
    }

    /// Number of rows (equality constraints).
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Number of columns (unknowns).
    pub fn m(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Cached transpose of `A`, `m x n`.
    pub fn at(&self) -> &DMatrix<f64> {
        &self.at
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn ground_truth(&self) -> Option<&DVector<f64>> {
        self.ground_truth.as_ref()
    }

    /// Euclidean norm of `A s - b`.
    pub fn residual_norm(&self, s: &DVector<f64>) -> f64 {
        (&self.a * s - &self.b).norm()
    }
}

/// Numerical rank of `a`: singular values above `rank_tol * sigma_max`.
pub fn numerical_rank(a: &DMatrix<f64>, rank_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * smax).count()
}

/// Checks dimensions, finiteness and full row rank.
pub fn validate(a: DMatrix<f64>, b: DVector<f64>, rank_tol: f64) -> Result<BpInstance> {
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "rank tolerance must be positive, got {rank_tol}"
        )));
    }
    let (n, m) = a.shape();
    if n == 0 || m == 0 {
        return Err(Error::DimensionMismatch {
            what: "matrix size (rows and columns must be nonzero)",
            expected: 1,
            found: 0,
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            what: "right-hand side length",
            expected: n,
            found: b.len(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix A"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("vector b"));
    }
    let rank = numerical_rank(&a, rank_tol);
    if rank < n {
        return Err(Error::RankDeficient { rank, rows: n });
    }
    let at = a.transpose();
    Ok(BpInstance {
        a,
        at,
        b,
        ground_truth: None,
    })
}

/// Records how a duplicated instance folds back onto the original columns:
/// columns `2j` and `2j + 1` (zero-based) both map to column `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldMap {
    pub original_m: usize,
}

/// Builds `A' = [a_1 a_1 a_2 a_2 ...]`. Every feasible point of the original
/// problem then lifts to a feasible point of the new one with no zero entries.
pub fn duplicate_columns(inst: &BpInstance) -> Result<(BpInstance, FoldMap)> {
    let (n, m) = inst.a.shape();
    let a2 = DMatrix::from_fn(n, 2 * m, |i, j| inst.a[(i, j / 2)]);
    let mut out = validate(a2, inst.b.clone(), DEFAULT_RANK_TOL)?;
    if let Some(gt) = &inst.ground_truth {
        let lifted = DVector::from_fn(2 * m, |j, _| gt[j / 2] / 2.0);
        out.ground_truth = Some(lifted);
    }
    Ok((out, FoldMap { original_m: m }))
}

/// `s_j = s'_{2j} + s'_{2j+1}`.
pub fn fold_solution(s_prime: &DVector<f64>, map: FoldMap) -> Result<DVector<f64>> {
    if s_prime.len() != 2 * map.original_m {
        return Err(Error::DimensionMismatch {
            what: "duplicated solution length",
            expected: 2 * map.original_m,
            found: s_prime.len(),
        });
    }
    Ok(DVector::from_fn(map.original_m, |j, _| {
        s_prime[2 * j] + s_prime[2 * j + 1]
    }))
}

/// Signed incidence matrix of a graph (+1 at the first node of each pair,
/// -1 at the second) with the grounded node's row removed.
///
/// Nodes are zero-based. The result is `(num_nodes - 1) x edges.len()`.
pub fn incidence_reduced(
    num_nodes: usize,
    edges: &[(usize, usize)],
    grounded_node: usize,
) -> Result<DMatrix<f64>> {
    if grounded_node >= num_nodes {
        return Err(Error::InvalidNodeIndex {
            node: grounded_node,
            num_nodes,
        });
    }
    for &(u, v) in edges {
        for node in [u, v] {
            if node >= num_nodes {
                return Err(Error::InvalidNodeIndex { node, num_nodes });
            }
        }
    }
    if edges.is_empty() || !is_connected(num_nodes, edges) {
        return Err(Error::DisconnectedGraph);
    }

    let row_of = |node: usize| -> Option<usize> {
        match node.cmp(&grounded_node) {
            std::cmp::Ordering::Less => Some(node),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(node - 1),
        }
    };
    let mut out = DMatrix::zeros(num_nodes - 1, edges.len());
    for (j, &(u, v)) in edges.iter().enumerate() {
        if let Some(r) = row_of(u) {
            out[(r, j)] += 1.0;
        }
        if let Some(r) = row_of(v) {
            out[(r, j)] -= 1.0;
        }
    }
    Ok(out)
}

fn is_connected(num_nodes: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..num_nodes).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut components = num_nodes;
    for &(u, v) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            components -= 1;
        }
    }
    components == 1
}

/// Gaussian instance with a planted sparse solution.
///
/// `A` has i.i.d. standard-normal entries; the planted vector has exactly
/// `ceil(density * m)` nonzeros at uniformly chosen positions, with
/// standard-normal values, and `b = A * planted`. Deterministic in `seed`.
pub fn random_instance(m: usize, n: usize, density: f64, seed: u64) -> Result<BpInstance> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidDensity(density));
    }
    if n == 0 || n > m {
        return Err(Error::DimensionMismatch {
            what: "row count (need 1 <= n <= m)",
            expected: m,
            found: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let k = ((density * m as f64).ceil() as usize).clamp(1, m);
    let mut planted = DVector::zeros(m);
    for j in sample(&mut rng, m, k).into_iter() {
        planted[j] = rng.sample(StandardNormal);
    }
    let b = &a * &planted;
    validate(a, b, DEFAULT_RANK_TOL)?.with_ground_truth(planted)
}
