use std::collections::BTreeMap;

use bp_core::instance::random_instance;
use bp_core::oracle::{brute_force_bp, ORACLE_LIMIT};
use bp_core::solvers::{SchemeRegistry, SolverConfig, SolverRun};
use bp_core::BpInstance;
use rayon::prelude::*;

use crate::args::BenchArgs;
use crate::error::{CliError, Result};
use crate::output::{num, sink};
use crate::solve::solve_retrying;

struct Cell {
    seed: u64,
    solver: usize,
    run: SolverRun,
}

/// Reference optimum per seed: the oracle when it is affordable, otherwise
/// the smallest `||s||_1` any solver reached on that instance.
fn reference(inst: &BpInstance, runs: &[&Cell]) -> Result<f64> {
    if inst.m() <= ORACLE_LIMIT {
        return Ok(brute_force_bp(inst)?.optimum_value);
    }
    Ok(runs
        .iter()
        .flat_map(|c| c.run.trace.iter().map(|r| r.l1))
        .fold(f64::INFINITY, f64::min))
}

pub fn run(args: &BenchArgs) -> Result<()> {
    if args.solvers.is_empty() {
        return Err(CliError::Usage(
            "--solvers must name at least one solver".into(),
        ));
    }
    let registry = SchemeRegistry::builtin();
    for name in &args.solvers {
        registry.get(name)?;
    }
    let seeds: Vec<u64> = (args.first_seed..args.first_seed + args.seeds).collect();
    let instances = seeds
        .par_iter()
        .map(|&seed| random_instance(args.m, args.n, args.density, seed).map(|i| (seed, i)))
        .collect::<bp_core::Result<BTreeMap<_, _>>>()?;

    let jobs: Vec<(u64, usize)> = seeds
        .iter()
        .flat_map(|&s| (0..args.solvers.len()).map(move |j| (s, j)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(seed, solver)| {
            let cfg = SolverConfig {
                max_iters: args.max_iters,
                gap_tol: args.gap_tol,
                trace_every: args.trace_every,
                ..SolverConfig::new(&args.solvers[solver])
            };
            let (run, _, _) = solve_retrying(&registry, &instances[&seed], cfg)?;
            Ok(Cell { seed, solver, run })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = csv::Writer::from_writer(sink(args.output.as_deref())?);
    let mut header = vec!["solver", "seed", "iter"];
    if !args.no_timing {
        header.push("elapsed_ms");
    }
    header.extend(["l1", "f", "gap", "rel_err"]);
    out.write_record(&header)?;
    for &seed in &seeds {
        let group: Vec<&Cell> = cells.iter().filter(|c| c.seed == seed).collect();
        let opt = reference(&instances[&seed], &group)?;
        for cell in &group {
            if let Some(msg) = cell.run.failure.as_ref() {
                eprintln!(
                    "warning: {} on seed {seed} stopped early: {msg}",
                    args.solvers[cell.solver]
                );
            }
            for r in &cell.run.trace {
                let mut row = vec![
                    args.solvers[cell.solver].clone(),
                    seed.to_string(),
                    r.k.to_string(),
                ];
                if !args.no_timing {
                    row.push(num(r.elapsed_ms));
                }
                row.extend([num(r.l1), num(r.f), num(r.gap), num((r.l1 - opt) / opt)]);
                out.write_record(&row)?;
            }
        }
    }
    out.flush().map_err(|source| CliError::Io {
        path: args.output.clone().unwrap_or_else(|| "<stdout>".into()),
        source,
    })?;
    Ok(())
}
