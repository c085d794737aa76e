use num_complex::Complex64;
use serde_json::{json, Value};
use tnl_core::analysis::{detect_stages, distances_strictly_decreasing, gamma_sweep, local_reference};
use tnl_core::closed_form::{characteristic_coefficients, roots};
use tnl_core::oracle::solve_integro;
use tnl_core::published::{appendix_solution, relative_oscillator_residual};
use tnl_core::report::SCHEMA_VERSION;
use tnl_core::{
    run_validation, solve_closed_form_with, BoundaryData, Grid, SolveOptions, SolverMethod, ValidationConfig, Verdict,
};

use crate::args::Method;
use crate::config::RunConfig;
use crate::failure::{Failure, EXIT_CHECK_FAILED};
use crate::output::{csv, num, write, write_json};

const MIN_POINTS_PER_PERIOD: f64 = 20.0;

/// Warns when the grid under-resolves the oscillating root.
fn check_resolution(cfg: &RunConfig) {
    let Ok((_, x2)) = characteristic_coefficients(&cfg.params).and_then(|cc| roots(&cc)) else {
        return;
    };
    let w = x2.norm();
    if w == 0.0 {
        return;
    }
    let per_period = 2.0 * std::f64::consts::PI / w / (cfg.t_end / (cfg.n - 1) as f64);
    if per_period < MIN_POINTS_PER_PERIOD {
        log::warn!(
            "only {per_period:.1} points per oscillation period (|x2| = {w:.6}); raise --n for a resolved trajectory"
        );
    }
}

fn initial_data(cfg: &RunConfig, what: &str) -> Result<(f64, f64), Failure> {
    match cfg.boundary {
        BoundaryData::Initial { q0, v0 } => Ok((q0, v0)),
        BoundaryData::TwoPoint { .. } => Err(Failure::input(format!("{what} needs initial data (--v0), not --qbar"))),
    }
}

fn options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions {
        consistency: cfg.consistency,
        ..SolveOptions::default()
    }
}

pub fn solve(cfg: &RunConfig) -> Result<u8, Failure> {
    check_resolution(cfg);
    let grid = Grid::uniform(cfg.t_end, cfg.n)?;
    let (rows, mut info): (Vec<[f64; 3]>, Value) = match cfg.method {
        Method::Closed => {
            let sol = solve_closed_form_with(&cfg.params, cfg.boundary, cfg.t_end, options(cfg))?;
            let q = sol.sample(&grid)?;
            let v = sol.sample_velocity(&grid)?;
            let rows = grid.nodes().into_iter().zip(q.positions()).zip(&v).map(|((s, q), v)| [s, *q, *v]).collect();
            (rows, sol.to_json())
        }
        Method::Oracle => {
            let kernel = cfg.params.exponential_kernel();
            let sol = solve_integro(&cfg.params, &kernel, cfg.boundary, cfg.t_end, cfg.n, SolverMethod::Auto)?;
            let v = sol.path.velocity();
            let residual = relative_oscillator_residual(&cfg.params, &sol.path)?;
            let rows = grid.nodes().into_iter().zip(sol.path.positions()).zip(&v).map(|((s, q), v)| [s, *q, *v]).collect();
            let info = json!({
                "solver": sol.method,
                "pivot_ratio": sol.pivot_ratio,
                "relative_residual": residual,
            });
            (rows, info)
        }
        Method::Appendix => {
            let (q0, v0) = initial_data(cfg, "the appendix solution")?;
            let sol = appendix_solution(&cfg.params, q0, v0, cfg.t_end)?;
            let (path, max_imaginary) = sol.sample(&grid)?;
            let rows = grid
                .nodes()
                .into_iter()
                .zip(path.positions())
                .map(|(s, q)| Ok([s, *q, sol.eval_complex(s, 1)?.re]))
                .collect::<tnl_core::Result<Vec<_>>>()?;
            let pair = |z: Complex64| json!([z.re, z.im]);
            let info = json!({
                "roots": sol.roots.iter().map(|z| pair(*z)).collect::<Vec<_>>(),
                "d": pair(sol.d),
                "b": sol.b.iter().map(|z| pair(*z)).collect::<Vec<_>>(),
                "max_imaginary": max_imaginary,
                "relative_residual": relative_oscillator_residual(&cfg.params, &path)?,
            });
            (rows, info)
        }
    };
    info["schema_version"] = json!(SCHEMA_VERSION);
    info["config"] = json!(cfg);
    write(&cfg.out, "trajectory.csv", &csv("s,q,qdot", rows))?;
    write_json(&cfg.out, "solution.json", &info)?;
    Ok(0)
}

pub fn validate(cfg: &RunConfig) -> Result<u8, Failure> {
    let vc = ValidationConfig {
        params: cfg.params.clone(),
        boundary: cfg.boundary,
        t_end: cfg.t_end,
        n: cfg.n,
        consistency: cfg.consistency,
        kernel_order: cfg.kernel_order,
        hamiltonian_density: cfg.hamiltonian_density,
        ..ValidationConfig::default()
    };
    let report = run_validation(&vc)?;
    for c in &report.checks {
        let tag = match c.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Differs => "DIFFERS",
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        let role = if c.normative { "normative" } else { "variant" };
        println!("{tag:<12} {:<44} {role:<9} value {:.3e} <= {:.1e}", c.name, c.value, c.tolerance);
    }
    write_json(&cfg.out, "validation.json", &report)?;
    Ok(if report.passed { 0 } else { EXIT_CHECK_FAILED })
}

pub fn figures(cfg: &RunConfig) -> Result<u8, Failure> {
    check_resolution(cfg);
    let (q0, v0) = initial_data(cfg, "figure data")?;
    if cfg.gammas.is_empty() {
        return Err(Failure::input("--gammas is empty"));
    }
    let grid = Grid::uniform(cfg.t_end, cfg.n)?;

    let sol = solve_closed_form_with(&cfg.params, cfg.boundary, cfg.t_end, options(cfg))?;
    let q = sol.sample(&grid)?;
    let v = sol.sample_velocity(&grid)?;
    let rows = grid.nodes().into_iter().zip(q.positions()).zip(&v).map(|((s, q), v)| [s, *q, *v]);
    write(&cfg.out, "fig1.csv", &csv("s,q,qdot", rows))?;
    let fig1_stages = detect_stages(&sol, cfg.n)?;

    let entries = gamma_sweep(&cfg.params, &cfg.gammas, q0, v0, cfg.t_end, cfg.n)?;
    let mut text = String::from("gamma,s,q\n");
    for e in &entries {
        let path = e.path.as_ref().expect("sweep entries carry their path");
        for (s, q) in grid.nodes().into_iter().zip(path.positions()) {
            text.push_str(&format!("{},{},{}\n", num(e.gamma), num(s), num(*q)));
        }
    }
    for s in grid.nodes() {
        let q = local_reference(&cfg.params, q0, v0, s);
        text.push_str(&format!("inf,{},{}\n", num(s), num(q)));
    }
    write(&cfg.out, "fig2.csv", &text)?;

    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "fig1": {
            "solution": sol.to_json(),
            "stages": fig1_stages,
        },
        "fig2": {
            "entries": entries,
            "distance_strictly_decreasing": distances_strictly_decreasing(&entries),
            "periods_exceed_local": entries.iter().all(|e| e.stages.longtime_period.is_some_and(|p| p > e.stages.local_period)),
            "amplitudes_exceed_local": entries.iter().all(|e| e.stages.longtime_amplitude.is_some_and(|a| a > e.stages.local_amplitude)),
        },
    });
    write_json(&cfg.out, "figures.json", &summary)?;
    Ok(0)
}
