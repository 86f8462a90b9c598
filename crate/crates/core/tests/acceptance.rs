//! End-to-end acceptance checks. Each test prints one PASS/FAIL line; run
//! with `--nocapture` to see them.

use bp_core::dissipation::{
    c_const, certify, delta_floor, evaluate, gradient, hessian, l1_variational_check, potential,
};
use bp_core::instance::{duplicate_columns, fold_solution, random_instance};
use bp_core::laplacian::{transfer_matrix, SolveOptions};
use bp_core::oracle::{brute_force_bp, fd_gradient, fd_hessian, DEFAULT_FD_STEP};
use bp_core::solvers::{
    init_point, solve, Init, IterationRecord, SchemeRegistry, Setting, SolverConfig, Status,
    StepParams,
};
use bp_core::{BpInstance, WeightVector};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn report(n: u32, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{tag} criterion {n}: {detail}");
    assert!(ok, "criterion {n} failed: {detail}");
}

fn tiny(seed: u64) -> BpInstance {
    let m = 6 + (seed % 7) as usize;
    random_instance(m, m.div_ceil(2), 0.5, seed).unwrap()
}

fn random_x(rng: &mut ChaCha8Rng, m: usize) -> WeightVector {
    WeightVector::new(DVector::from_fn(m, |_, _| rng.random_range(0.5..2.0))).unwrap()
}

fn sample(seed: u64) -> (BpInstance, WeightVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..=10);
    let n = rng.random_range(1..=m);
    let density = rng.random_range(0.2..=1.0);
    let inst = random_instance(m, n, density, seed.wrapping_mul(31) + 7).unwrap();
    let x = random_x(&mut rng, m);
    (inst, x)
}

fn pgs_config() -> SolverConfig {
    SolverConfig {
        beta: Setting::Value(3.5),
        delta: Setting::Value(1e-15),
        gap_tol: 1e-8,
        ..SolverConfig::new("pgs")
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_01_equivalence() {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..50 {
        let inst = tiny(seed);
        let run = solve(&inst, &pgs_config()).unwrap();
        let opt = brute_force_bp(&inst).unwrap().optimum_value;
        let err = rel(run.l1(), opt);
        worst = worst.max(err);
        if run.status != Status::GapReached || err > 1e-6 {
            failures.push(format!("seed {seed}: {} err {err:.2e}", run.status));
        }
    }
    report(
        1,
        failures.is_empty(),
        format!("50 instances, worst relative error {worst:.2e} {failures:?}"),
    );
}

#[test]
fn criterion_02_gradient() {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let (inst, x) = sample(seed);
        let g = gradient(&inst, &x).unwrap();
        let fd = fd_gradient(&inst, &x, DEFAULT_FD_STEP).unwrap();
        for (a, e) in g.iter().zip(fd.iter()) {
            worst = worst.max((a - e).abs() / a.abs());
        }
    }
    report(
        2,
        worst <= 1e-5,
        format!("100 cases, max relative error {worst:.2e}"),
    );
}

#[test]
fn criterion_03_hessian() {
    let mut worst = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for seed in 0..100 {
        let (inst, x) = sample(seed);
        let h = hessian(&inst, &x).unwrap();
        let fd = fd_hessian(&inst, &x, DEFAULT_FD_STEP).unwrap();
        worst = worst.max((&h - &fd).amax());
        min_eig = min_eig.min(h.symmetric_eigenvalues().min());
    }
    report(
        3,
        worst <= 1e-4 && min_eig >= -1e-10,
        format!("100 cases, max abs error {worst:.2e}, min eigenvalue {min_eig:.2e}"),
    );
}

#[test]
fn criterion_04_projection() {
    let mut worst_eig = 0.0f64;
    let mut worst_trace = 0.0f64;
    for seed in 0..50 {
        let (inst, x) = sample(1000 + seed);
        let t = transfer_matrix(&inst, &x).unwrap();
        let root = x.values().map(f64::sqrt);
        let p = DMatrix::from_fn(inst.m(), inst.m(), |i, j| root[i] * t[(i, j)] * root[j]);
        for e in p.symmetric_eigenvalues().iter() {
            worst_eig = worst_eig.max(e.abs().min((e - 1.0).abs()));
        }
        worst_trace = worst_trace.max((p.trace() - inst.n() as f64).abs());
    }
    report(
        4,
        worst_eig <= 1e-8 && worst_trace <= 1e-8,
        format!("50 cases, eigenvalue distance {worst_eig:.2e}, trace error {worst_trace:.2e}"),
    );
}

fn primal_slack(rec: &IterationRecord) -> f64 {
    rec.f / 2.0 - rec.l1
}

#[test]
fn criterion_05_primal_bound() {
    let mut worst = f64::INFINITY;
    for seed in 0..1000 {
        let (inst, x) = sample(5000 + seed);
        let p = potential(&inst, &x).unwrap();
        worst = worst.min(p.f / 2.0 - p.induced().lp_norm(1));
    }
    let mut worst_trace = f64::INFINITY;
    let mut points = 0;
    for seed in 0..10 {
        let inst = tiny(seed);
        for name in ["pgs", "ags", "ags2"] {
            let cfg = SolverConfig {
                gap_tol: 1e-8,
                ..SolverConfig::new(name)
            };
            let run = solve(&inst, &cfg).unwrap();
            for rec in &run.trace {
                worst_trace = worst_trace.min(primal_slack(rec));
                points += 1;
            }
        }
    }
    report(
        5,
        worst >= -1e-12 && worst_trace >= -1e-12,
        format!(
            "1000 pairs min slack {worst:.2e}, {points} trace points min slack {worst_trace:.2e}"
        ),
    );
}

#[test]
fn criterion_06_gap_soundness() {
    let mut min_gap = f64::INFINITY;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut points = 0;
    for seed in 0..15 {
        let inst = tiny(100 + seed);
        let opt = brute_force_bp(&inst).unwrap().optimum_value;
        for name in ["pgs", "ags", "ags2"] {
            let cfg = SolverConfig {
                gap_tol: 1e-10,
                max_iters: Setting::Value(3000),
                ..SolverConfig::new(name)
            };
            let run = solve(&inst, &cfg).unwrap();
            for rec in &run.trace {
                min_gap = min_gap.min(rec.gap);
                worst_excess = worst_excess.max(rec.l1 - opt - rec.gap);
                points += 1;
            }
        }
    }
    // Arbitrary feasible points, not only solver iterates.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..100 {
        let (inst, x) = sample(9000 + seed);
        let p = potential(&inst, &x).unwrap();
        let s = p.induced() + null_direction(&inst, &mut rng);
        let cert = certify(&inst, &s, &SolveOptions::default()).unwrap();
        min_gap = min_gap.min(cert.gap);
        points += 1;
    }
    report(
        6,
        min_gap >= -1e-10 && worst_excess <= 1e-9,
        format!("{points} points, min gap {min_gap:.2e}, max (l1 - opt - gap) {worst_excess:.2e}"),
    );
}

/// A random vector in the null space of `A`.
fn null_direction(inst: &BpInstance, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let v = DVector::from_fn(inst.m(), |_, _| rng.random_range(-1.0..1.0));
    let a = inst.a();
    let w = (a * a.transpose()).cholesky().unwrap().solve(&(a * &v));
    v - a.transpose() * w
}

#[test]
fn criterion_07_norm_sandwich() {
    let mut ok = true;
    let mut tightest = f64::INFINITY;
    for seed in 0..50 {
        let inst = tiny(200 + seed);
        let opt = brute_force_bp(&inst).unwrap().optimum_value;
        let c = c_const(&inst).unwrap();
        let (lo, hi) = (c.sqrt(), (inst.m() as f64 * c).sqrt());
        let tol = 1e-12 * hi;
        ok &= lo <= opt + tol && opt <= hi + tol;
        tightest = tightest.min((opt - lo).min(hi - opt));
    }
    report(
        7,
        ok,
        format!("50 instances, smallest margin {tightest:.2e}"),
    );
}

struct RateOutcome {
    reached_at: Option<u64>,
    budget: u64,
    max_increase: f64,
}

/// Steps `scheme` with theoretical parameters until the relative error of
/// `q(x^k)` against the oracle is at most `eps`.
fn rate_run(name: &str, inst: &BpInstance, eps: f64, init: Init) -> RateOutcome {
    let registry = SchemeRegistry::builtin();
    let scheme = registry.get(name).unwrap();
    let c = c_const(inst).unwrap();
    let beta = scheme.theoretical_beta(inst.m(), c, eps);
    let delta = delta_floor(inst, eps).unwrap();
    let budget = scheme.theoretical_iters(inst.m(), eps);
    let opt = brute_force_bp(inst).unwrap().optimum_value;
    let x0 = init_point(inst, &init, delta).unwrap();
    let params = StepParams {
        beta,
        delta,
        tau: None,
    };
    let mut state = scheme.start(x0, &params).unwrap();
    let opts = SolveOptions::default();
    let mut prev_f = f64::INFINITY;
    let mut max_increase = f64::NEG_INFINITY;
    for k in 0..=budget {
        let eval = evaluate(inst, state.current(), None, &opts, true).unwrap();
        if prev_f.is_finite() {
            max_increase = max_increase.max(eval.f - prev_f);
        }
        prev_f = eval.f;
        if rel(eval.induced().lp_norm(1), opt) <= eps {
            return RateOutcome {
                reached_at: Some(k),
                budget,
                max_increase,
            };
        }
        state.advance(eval.gradient.as_ref().unwrap()).unwrap();
    }
    RateOutcome {
        reached_at: None,
        budget,
        max_increase,
    }
}

/// Instances with `m` drawn from `ms` whose starting point `q(x^0)` is not
/// already within `eps` of the optimum.
fn hard_instances(ms: &[usize], init: &Init, eps: f64, count: usize) -> Vec<BpInstance> {
    let mut out = Vec::new();
    for seed in 0.. {
        let m = ms[seed as usize % ms.len()];
        let inst = random_instance(m, m.div_ceil(2), 0.5, 300 + seed).unwrap();
        let x0 = init_point(&inst, init, 1e-15).unwrap();
        let q0 = potential(&inst, &x0).unwrap().induced().lp_norm(1);
        let opt = brute_force_bp(&inst).unwrap().optimum_value;
        if rel(q0, opt) > eps {
            out.push(inst);
            if out.len() == count {
                return out;
            }
        }
    }
    unreachable!()
}

#[test]
fn criterion_08_pgs_rate() {
    let mut ok = true;
    let mut lines = Vec::new();
    for inst in hard_instances(&[4, 5, 6, 7, 8], &Init::Ones, 0.25, 6) {
        let out = rate_run("pgs", &inst, 0.25, Init::Ones);
        ok &= out.reached_at.is_some() && out.max_increase <= 1e-10;
        lines.push(format!(
            "m={}: {:?}/{} (max f increase {:.1e})",
            inst.m(),
            out.reached_at,
            out.budget,
            out.max_increase
        ));
    }
    report(8, ok, lines.join(", "));
}

#[test]
fn criterion_09_ags_rate() {
    let mut ok = true;
    let mut lines = Vec::new();
    for inst in hard_instances(&[3, 4, 5, 6], &Init::LeastSquares, 0.25, 6) {
        let out = rate_run("ags", &inst, 0.25, Init::LeastSquares);
        ok &= out.reached_at.is_some();
        lines.push(format!(
            "m={}: {:?}/{}",
            inst.m(),
            out.reached_at,
            out.budget
        ));
    }
    report(9, ok, lines.join(", "));
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn criterion_10_geometric_convergence() {
    let mut ok = true;
    let mut lines = Vec::new();
    for seed in 0..5 {
        let inst = random_instance(100, 80, 0.2, seed).unwrap();
        let cfg = SolverConfig {
            gap_tol: 1e-10,
            max_iters: Setting::Value(5000),
            ..pgs_config()
        };
        let run = solve(&inst, &cfg).unwrap();
        let rel_gap = run.gap() / run.l1();
        let tail = &run.trace[run.trace.len() / 5..];
        // Gaps at or below zero carry no rate information.
        let (xs, ys): (Vec<f64>, Vec<f64>) = tail
            .iter()
            .filter(|r| r.gap > 0.0)
            .map(|r| (r.k as f64, r.gap.ln()))
            .unzip();
        let s = slope(&xs, &ys);
        ok &= run.status == Status::GapReached && rel_gap < 1e-10 && s < 0.0;
        lines.push(format!(
            "seed {seed}: {} after {} iters, relative gap {rel_gap:.1e}, slope {s:.2e}",
            run.status, run.iterations
        ));
    }
    report(10, ok, lines.join("; "));
}

#[test]
fn criterion_11_duplicate_round_trip() {
    let mut worst = 0.0f64;
    let mut ok = true;
    for seed in 0..25 {
        let inst = tiny(500 + seed);
        let opt = brute_force_bp(&inst).unwrap().optimum_value;
        let (dup, map) = duplicate_columns(&inst).unwrap();
        let run = solve(&dup, &pgs_config()).unwrap();
        let s = fold_solution(&run.final_s, map).unwrap();
        let err = rel(s.lp_norm(1), opt);
        ok &= inst.residual_norm(&s) <= 1e-8 * inst.b().norm().max(1.0);
        worst = worst.max(err);
    }
    report(
        11,
        ok && worst <= 1e-6,
        format!("25 instances, worst relative error {worst:.2e}"),
    );
}

#[test]
fn criterion_12_variational_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(1..=20);
        let s = DVector::from_fn(m, |_, _| {
            let v: f64 = rng.sample(StandardNormal);
            if v == 0.0 {
                1.0
            } else {
                v
            }
        });
        let v = l1_variational_check(&s).unwrap();
        worst = worst.max((v - s.lp_norm(1)).abs());
    }
    report(
        12,
        worst <= 1e-14,
        format!("100 vectors, max deviation {worst:.2e}"),
    );
}
